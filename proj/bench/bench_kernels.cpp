#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "omr/kernels.hpp"
#include "reference/reference.hpp"

using namespace omr;

namespace {

GrayImage random_gray(int side) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> d(0.0f, 255.0f);
  GrayImage img(side, side);
  for (auto& v : img.data()) v = d(rng);
  return img;
}

ColorImage random_color(int w, int h) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> d(0.0f, 255.0f);
  ColorImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = d(rng);
  return img;
}

std::vector<std::vector<double>> random_rows(int n, int dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
  for (auto& r : rows)
    for (auto& v : r) v = d(rng);
  return rows;
}

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

constexpr std::array<double, 9> kInverse{0.9986, -0.0523, 8.0, 0.0523, 0.9986, -5.0, 0.0, 0.0, 1.0};

void BM_GradientKernel(benchmark::State& state) {
  const GrayImage img = random_gray(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gradient_l1(img));
}

void BM_GradientReference(benchmark::State& state) {
  const GrayImage img = random_gray(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ref::gradient_l1(img));
}

void BM_HogKernel(benchmark::State& state) {
  const GrayImage img = random_gray(227);
  const kernels::HogGeometry g{5, 5, 54, 54, 4, 8};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::hog_cells(img, g));
}

void BM_HogReference(benchmark::State& state) {
  const GrayImage img = random_gray(227);
  for (auto _ : state) benchmark::DoNotOptimize(ref::hog_cells(img, 5, 5, 54, 54, 4, 8));
}

void BM_NearestKernel(benchmark::State& state) {
  const auto points = flatten(random_rows(static_cast<int>(state.range(0)), 128, 3));
  const auto centers = flatten(random_rows(200, 128, 4));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::nearest_centers(points, centers, 128));
}

void BM_NearestReference(benchmark::State& state) {
  const auto points = random_rows(static_cast<int>(state.range(0)), 128, 3);
  const auto centers = random_rows(200, 128, 4);
  for (auto _ : state) benchmark::DoNotOptimize(ref::nearest_centers(points, centers));
}

void BM_WarpKernel(benchmark::State& state) {
  const ColorImage img = random_color(640, 900);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::warp_bilinear(img, kInverse, {640, 900}, 255.0f));
}

void BM_WarpReference(benchmark::State& state) {
  const ColorImage img = random_color(640, 900);
  for (auto _ : state) benchmark::DoNotOptimize(ref::warp(img, kInverse, {640, 900}));
}

}  // namespace

BENCHMARK(BM_GradientKernel)->Arg(227)->Arg(900);
BENCHMARK(BM_GradientReference)->Arg(227)->Arg(900);
BENCHMARK(BM_HogKernel);
BENCHMARK(BM_HogReference);
BENCHMARK(BM_NearestKernel)->Arg(1000)->Arg(10000);
BENCHMARK(BM_NearestReference)->Arg(1000)->Arg(10000);
BENCHMARK(BM_WarpKernel);
BENCHMARK(BM_WarpReference);

BENCHMARK_MAIN();
