#include "omr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "omr/draw.hpp"
#include "omr/error.hpp"
#include "omr/png_io.hpp"

namespace omr {

ColorImage translate(const ColorImage& img, int dx, int dy) {
  ColorImage out(img.width(), img.height(), kWhite);
  for (int y = 0; y < img.height(); ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= img.height()) continue;
    for (int x = 0; x < img.width(); ++x) {
      const int sx = x - dx;
      if (sx < 0 || sx >= img.width()) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

std::vector<ColorImage> augment_crossed_out(const ColorImage& roi, const AugmentationConfig& config) {
  if (roi.width() < kMinRoiSide || roi.height() < kMinRoiSide) {
    throw Error(ErrorCode::DegenerateRoi, "cannot augment a " + std::to_string(roi.width()) + "x" +
                                              std::to_string(roi.height()) + " ROI");
  }
  std::vector<ColorImage> out;
  out.reserve(config.variants());
  for (int p : config.translations_px) {
    out.push_back(translate(roi, -p, 0));
    out.push_back(translate(roi, p, 0));
    out.push_back(translate(roi, 0, -p));
    out.push_back(translate(roi, 0, p));
  }
  const Point2 center{(roi.width() - 1) / 2.0, (roi.height() - 1) / 2.0};
  for (double deg : config.rotations_deg) {
    if (deg == 0.0) throw Error(ErrorCode::ConfigInvalid, "0 degree rotation is not an augmentation");
    out.push_back(warp(roi, Transform::rigid(deg * std::numbers::pi / 180.0, center, 0.0, 0.0), roi.size()));
  }
  if (config.flip_horizontal) out.push_back(flip_horizontal(roi));
  if (config.flip_vertical) out.push_back(flip_vertical(roi));
  return out;
}

namespace {

using draw::Color;

struct Rng {
  std::mt19937_64 engine;

  explicit Rng(std::uint64_t seed) : engine(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
  double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(engine); }
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Color ink(Rng& rng) {
  switch (rng.integer(0, 2)) {
    case 0: return {20.0f, 28.0f, 110.0f};  // blue ballpoint
    case 1: return {25.0f, 25.0f, 30.0f};   // black
    default: return {75.0f, 75.0f, 80.0f};  // pencil
  }
}

Point2 at(Rect r, double fx, double fy) { return {r.x + fx * r.w, r.y + fy * r.h}; }

void check_mark(ColorImage& img, Rect r, Color c, Rng& rng) {
  const double j = 0.06;
  draw::polyline(img,
                 {at(r, 0.18 + rng.uniform(-j, j), 0.52 + rng.uniform(-j, j)),
                  at(r, 0.42 + rng.uniform(-j, j), 0.80 + rng.uniform(-j, j)),
                  at(r, 0.86 + rng.uniform(-j, j), 0.14 + rng.uniform(-j, j))},
                 rng.uniform(2.5, 4.0), c);
}

void solid_fill(ColorImage& img, Rect r, Color c, Rng& rng, double opacity) {
  const int inset = rng.integer(2, 5);
  const Rect inner{r.x + inset + rng.integer(-1, 1), r.y + inset + rng.integer(-1, 1), r.w - 2 * inset,
                   r.h - 2 * inset};
  draw::fill_rect(img, inner, c, opacity);
}

void scribble_fill(ColorImage& img, Rect r, Color c, Rng& rng) {
  std::vector<Point2> pts;
  const int passes = rng.integer(9, 12);
  for (int i = 0; i <= passes; ++i) {
    const double fy = 0.12 + 0.76 * i / passes + rng.uniform(-0.02, 0.02);
    pts.push_back(at(r, (i % 2 == 0 ? 0.12 : 0.88) + rng.uniform(-0.04, 0.04), fy));
  }
  draw::polyline(img, pts, rng.uniform(3.5, 5.0), c);
}

void big_cross(ColorImage& img, Rect r, Color c, Rng& rng) {
  const double o = rng.uniform(0.0, 0.12);
  const double t = rng.uniform(3.5, 5.0);
  draw::segment(img, at(r, -o, -o + rng.uniform(-0.05, 0.05)), at(r, 1 + o, 1 + o + rng.uniform(-0.05, 0.05)), t, c);
  draw::segment(img, at(r, 1 + o, -o + rng.uniform(-0.05, 0.05)), at(r, -o, 1 + o + rng.uniform(-0.05, 0.05)), t, c);
}

void zigzag_cancel(ColorImage& img, Rect r, Color c, Rng& rng) {
  std::vector<Point2> pts;
  const int teeth = rng.integer(4, 6);
  const double tilt = rng.uniform(-0.15, 0.15);
  for (int i = 0; i <= 2 * teeth; ++i) {
    const double fx = -0.1 + 1.2 * i / (2 * teeth);
    const double fy = (i % 2 == 0 ? 0.2 : 0.8) + tilt * (fx - 0.5) + rng.uniform(-0.05, 0.05);
    pts.push_back(at(r, fx, fy));
  }
  draw::polyline(img, pts, rng.uniform(3.0, 4.5), c);
}

void random_glyph(ColorImage& img, Rect area, Rng& rng) {
  const Color c{static_cast<float>(rng.uniform(0, 60)), static_cast<float>(rng.uniform(0, 60)),
                static_cast<float>(rng.uniform(0, 60))};
  const double cx = area.x + rng.uniform(0.2, 0.8) * area.w;
  const double cy = area.y + rng.uniform(0.2, 0.8) * area.h;
  const double s = rng.uniform(6.0, std::max(7.0, std::min(area.w, area.h) * 0.45));
  switch (rng.integer(0, 5)) {
    case 0:
      draw::fill_rect(img, {static_cast<int>(cx - s), static_cast<int>(cy - s * 0.6), static_cast<int>(2 * s),
                            static_cast<int>(1.2 * s)}, c);
      break;
    case 1:
      draw::rect_outline(img, {static_cast<int>(cx - s), static_cast<int>(cy - s), static_cast<int>(2 * s),
                               static_cast<int>(2 * s)}, 2, c);
      break;
    case 2:
      draw::fill_ellipse(img, {cx, cy}, s, s * rng.uniform(0.5, 1.0), c);
      break;
    case 3:
      draw::fill_polygon(img, {{cx, cy - s}, {cx + s, cy + s * rng.uniform(0.4, 1.0)}, {cx - s, cy + s}}, c);
      break;
    default: {
      std::vector<Point2> pts;
      const int n = rng.integer(3, 6);
      for (int i = 0; i < n; ++i) pts.push_back({cx + rng.uniform(-s, s), cy + rng.uniform(-s, s)});
      draw::polyline(img, pts, rng.uniform(2.0, 3.5), c);
      break;
    }
  }
}

void round_pixels(ColorImage& img) {
  for (float& v : img.data()) v = std::round(std::clamp(v, 0.0f, 255.0f));
}

}  // namespace

void draw_mark(ColorImage& img, Rect r, AnswerClass c, std::uint64_t seed) {
  Rng rng(seed);
  const Color color = ink(rng);
  switch (c) {
    case AnswerClass::Empty:
      if (rng.uniform(0.0, 1.0) < 0.1) {
        draw::fill_ellipse(img, at(r, rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)), 1.5, 1.5, color, 0.3);
      }
      break;
    case AnswerClass::Confirmed:
      switch (rng.integer(0, 2)) {
        case 0: solid_fill(img, r, color, rng, rng.uniform(0.85, 1.0)); break;
        case 1: scribble_fill(img, r, color, rng); break;
        default: check_mark(img, r, color, rng); break;
      }
      break;
    case AnswerClass::CrossedOut:
      switch (rng.integer(0, 2)) {
        case 0:
          check_mark(img, r, color, rng);
          big_cross(img, r, color, rng);
          break;
        case 1:
          check_mark(img, r, color, rng);
          zigzag_cancel(img, r, color, rng);
          break;
        default:
          solid_fill(img, r, color, rng, rng.uniform(0.35, 0.55));
          big_cross(img, r, color, rng);
          break;
      }
      break;
  }
}

LabelTable SyntheticExam::labels() const {
  LabelTable t;
  for (const auto& s : sheets)
    for (std::size_t q = 0; q < s.labels.size(); ++q)
      for (std::size_t c = 0; c < s.labels[q].size(); ++c)
        t.set(s.image_name, static_cast<int>(q), static_cast<int>(c), s.labels[q][c]);
  return t;
}

SyntheticExam generate_synthetic_exam(const SynthConfig& config) {
  auto invalid = [](const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); };
  const MarkMixture& mx = config.mixture;
  if (mx.confirmed < 0 || mx.crossed_out < 0 || mx.empty < 0 ||
      std::abs(mx.confirmed + mx.crossed_out + mx.empty - 1.0) > 1e-9) {
    invalid("class mixture must be a probability vector");
  }
  if (config.sheets < 0 || config.first_sheet < 0 || config.questions < 1 || config.choices < 2) invalid("need questions with >= 2 choices");
  if (config.box_size < 12) invalid("box_size below 12 px");
  if (config.max_rotation_deg < 0 || config.max_shift_px < 0 || config.noise_sigma < 0) {
    invalid("perturbation ranges must be non-negative");
  }
  if (config.weights.empty() || std::any_of(config.weights.begin(), config.weights.end(), [](double w) { return w <= 0; })) {
    invalid("weights must be positive");
  }
  const int top = 190, bottom = config.page_height - 110, left = 150, right = config.page_width - 40;
  const int row_step = std::min(62, (bottom - top) / config.questions);
  const int col_step = (right - left) / config.choices;
  if (row_step < config.box_size + 6 || col_step < config.box_size + 6) invalid("page too small for the layout");

  Rng layout(mix(config.seed, 1));
  SyntheticExam exam;
  exam.reference = ColorImage(config.page_width, config.page_height, kWhite);
  ColorImage& ref = exam.reference;
  for (int i = 0; i < 28; ++i) random_glyph(ref, {20 + (i % 14) * 43, 20 + (i / 14) * 65, 43, 65}, layout);
  for (int c = 0; c < config.choices; ++c) random_glyph(ref, {left + c * col_step, top - 34, config.box_size, 28}, layout);
  for (int i = 0; i < 12; ++i) random_glyph(ref, {20 + i * 50, config.page_height - 90, 50, 70}, layout);

  exam.metadata.exam_id = config.exam_id;
  exam.metadata.pages = 1;
  for (int q = 0; q < config.questions; ++q) {
    const int y = top + q * row_step;
    random_glyph(ref, {25, y - 4, 45, config.box_size + 8}, layout);
    random_glyph(ref, {75, y - 4, 45, config.box_size + 8}, layout);
    Question question;
    question.page = 0;
    question.weight = config.weights[q % config.weights.size()];
    question.correct_choice = layout.integer(0, config.choices - 1);
    for (int c = 0; c < config.choices; ++c) {
      const Rect box{left + c * col_step, y, config.box_size, config.box_size};
      draw::rect_outline(ref, box, 2, {40.0f, 40.0f, 40.0f});
      question.choices.push_back(box);
    }
    exam.metadata.questions.push_back(std::move(question));
  }
  round_pixels(ref);

  const Point2 center{config.page_width / 2.0, config.page_height / 2.0};
  for (int s = config.first_sheet; s < config.first_sheet + config.sheets; ++s) {
    Rng rng(mix(config.seed, 1000 + static_cast<std::uint64_t>(s)));
    SyntheticSheet sheet;
    sheet.image_name = config.exam_id + "_" + std::to_string(s) + "_0";
    ColorImage canvas = ref;
    for (int q = 0; q < config.questions; ++q) {
      const Question& question = exam.metadata.questions[q];
      std::vector<AnswerClass> row;
      std::vector<BoxResult> truth;
      for (int c = 0; c < config.choices; ++c) {
        AnswerClass cls = AnswerClass::Empty;
        if (config.perfect_key) {
          cls = c == question.correct_choice ? AnswerClass::Confirmed : AnswerClass::Empty;
        } else {
          const double u = rng.uniform(0.0, 1.0);
          cls = u < mx.confirmed ? AnswerClass::Confirmed
                : u < mx.confirmed + mx.crossed_out ? AnswerClass::CrossedOut
                                                     : AnswerClass::Empty;
        }
        draw_mark(canvas, question.choices[c], cls, rng.engine());
        row.push_back(cls);
        truth.push_back({cls, 1.0});
      }
      sheet.grade += grade_question(q, question, truth).awarded;
      sheet.labels.push_back(std::move(row));
    }
    const double angle = rng.uniform(-config.max_rotation_deg, config.max_rotation_deg) * std::numbers::pi / 180.0;
    const double tx = rng.uniform(-config.max_shift_px, config.max_shift_px);
    const double ty = rng.uniform(-config.max_shift_px, config.max_shift_px);
    const Transform ref_to_sheet = Transform::rigid(angle, center, tx, ty);
    sheet.sheet_to_reference = ref_to_sheet.inverse();
    sheet.image = warp(canvas, ref_to_sheet, canvas.size());
    if (config.noise_sigma > 0) {
      for (float& v : sheet.image.data()) v += static_cast<float>(rng.normal(config.noise_sigma));
    }
    round_pixels(sheet.image);
    exam.sheets.push_back(std::move(sheet));
  }
  return exam;
}

std::vector<LabeledSample> collect_labeled_samples(const std::vector<std::pair<std::string, ColorImage>>& sheets,
                                                   const ExamMetadata& metadata, const LabelTable& labels,
                                                   int first_id) {
  std::vector<LabeledSample> out;
  int id = first_id;
  for (const auto& [name, image] : sheets) {
    for (int q = 0; q < static_cast<int>(metadata.questions.size()); ++q) {
      for (RoiImage& roi : extract_rois(image, metadata, q)) {
        const auto label = labels.find(name, q, roi.source.choice_index);
        if (!label) {
          throw Error(ErrorCode::LabelMissing, name + " question " + std::to_string(q) + " choice " +
                                                   std::to_string(roi.source.choice_index));
        }
        LabeledSample s;
        s.roi = std::move(roi);
        s.label = *label;
        s.exam_id = metadata.exam_id;
        s.image_name = name;
        s.id = id++;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

void append_augmented(std::vector<LabeledSample>& samples, const AugmentationConfig& config) {
  int next_id = 0;
  for (const auto& s : samples) next_id = std::max(next_id, s.id + 1);
  const std::size_t originals = samples.size();
  for (std::size_t i = 0; i < originals; ++i) {
    if (samples[i].augmented || samples[i].label != AnswerClass::CrossedOut) continue;
    for (ColorImage& variant : augment_crossed_out(samples[i].roi.pixels, config)) {
      LabeledSample a;
      a.roi = RoiImage{std::move(variant), samples[i].roi.source};
      a.label = samples[i].label;
      a.exam_id = samples[i].exam_id;
      a.image_name = samples[i].image_name;
      a.id = next_id++;
      a.augmented = true;
      a.source_id = samples[i].id;
      samples.push_back(std::move(a));
    }
  }
}

void write_synthetic_exam(const std::filesystem::path& dir, const SyntheticExam& exam) {
  std::filesystem::create_directories(dir / "sheets");
  write_png(dir / "reference.png", exam.reference);
  save_metadata(dir / "metadata.json", exam.metadata);
  save_labels(dir / "labels.csv", exam.labels());
  for (const auto& s : exam.sheets) write_png(dir / "sheets" / (s.image_name + ".png"), s.image);
}

}  // namespace omr
