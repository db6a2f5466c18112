#include "doctest.h"

#include <filesystem>

#include "omr/draw.hpp"
#include "omr/error.hpp"
#include "omr/png_io.hpp"
#include "reference/reference.hpp"
#include "unit/fixtures.hpp"

using namespace omr;

namespace {

using enum AnswerClass;

const std::filesystem::path kGolden = OMR_GOLDEN_DIR;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

std::string minimal_metadata(int answer) {
  return R"({"examId": "m", "examNumberOfPages": 1, "totalNumberOfQuestions": 1, "numberOfQuestionsPerPage": [1],
  "isThereAStudentId": false, "studentIdRect": null,
  "questions": [{"pageNumber": 0, "questionWeight": 3.0, "questionAnswer": )" +
         std::to_string(answer) + R"(, "questionChoices": 2,
    "questionRect": [[10, 10, 20, 20], [40, 10, 20, 20]]}]})";
}

float max_diff(const ColorImage& a, const ColorImage& b) {
  float d = 0.0f;
  for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

bool identical(const ColorImage& a, const ColorImage& b) {
  return a.width() == b.width() && a.height() == b.height() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST_CASE("minimal metadata loads") {
  const ExamMetadata m = parse_metadata(minimal_metadata(1));
  CHECK(m.exam_id == "m");
  REQUIRE(m.questions.size() == 1);
  CHECK(m.questions[0].choices.size() == 2);
  CHECK(m.total_weight() == 3.0);
  CHECK(m.questions_per_page() == std::vector<int>{1});
  CHECK_FALSE(m.student_id_rect.has_value());
}

TEST_CASE("metadata validation names the question") {
  try {
    parse_metadata(minimal_metadata(2));
    FAIL("expected ValidationError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ValidationError);
    CHECK(std::string(e.what()).find("question 0") != std::string::npos);
  }
  ExamMetadata m = parse_metadata(minimal_metadata(0));
  m.questions[0].weight = 0.0;
  CHECK(code_of([&] { validate_metadata(m); }) == ErrorCode::ValidationError);
  m = parse_metadata(minimal_metadata(0));
  m.questions[0].page = 1;
  CHECK(code_of([&] { validate_metadata(m); }) == ErrorCode::ValidationError);
  m = parse_metadata(minimal_metadata(0));
  m.questions[0].choices.pop_back();
  CHECK(code_of([&] { validate_metadata(m); }) == ErrorCode::ValidationError);
}

TEST_CASE("metadata syntax errors carry the line") {
  const std::string broken = "{\n  \"examId\": \"m\",\n  \"examNumberOfPages\" 1\n}\n";
  try {
    parse_metadata(broken);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(code_of([] { parse_metadata(R"({"examId": "m"})"); }) == ErrorCode::ParseError);
}

TEST_CASE("metadata golden round trip") {
  const std::string golden = read_text(kGolden / "metadata.json");
  const ExamMetadata m = parse_metadata(golden);
  CHECK(m.exam_id == "exam7");
  CHECK(m.pages == 2);
  REQUIRE(m.student_id_rect.has_value());
  CHECK(m.student_id_rect->w == 200);
  CHECK(m.questions[0].weight == 1.5);
  CHECK(m.questions[1].choices.size() == 3);
  CHECK(format_metadata(m) == golden);

  const auto path = std::filesystem::temp_directory_path() / "omr_metadata_roundtrip.json";
  save_metadata(path, m);
  CHECK(read_text(path) == golden);
  CHECK(load_metadata(path) == m);
  std::filesystem::remove(path);
  CHECK(code_of([] { load_metadata("/nonexistent/metadata.json"); }) == ErrorCode::IoError);
}

TEST_CASE("labels parse and format") {
  const std::string text = "imageName,question,choice,answerType\nexam0_0_0,0,0,1\nexam0_0_0,0,1,3\nexam0_1_0,2,3,2\n";
  const LabelTable t = parse_labels(text);
  CHECK(t.size() == 3);
  CHECK(t.find("exam0_0_0", 0, 0) == Confirmed);
  CHECK(t.find("exam0_1_0", 2, 3) == CrossedOut);
  CHECK_FALSE(t.find("exam0_1_0", 0, 0).has_value());
  CHECK(format_labels(t) == text);
  CHECK(code_of([] { parse_labels("exam0_0_0,0,0,4\n"); }) == ErrorCode::ValidationError);
  CHECK(code_of([] { parse_labels("exam0_0_0,0,0\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_labels("exam0_0_0,a,0,1\n"); }) == ErrorCode::ParseError);
}

TEST_CASE("crossed-out augmentation") {
  ColorImage x(31, 31, kWhite);
  draw::segment(x, {4, 4}, {26, 26}, 2.5, draw::kBlack);
  draw::segment(x, {26, 4}, {4, 26}, 2.5, draw::kBlack);

  const auto variants = augment_crossed_out(x);
  REQUIRE(variants.size() == 24);
  CHECK(AugmentationConfig{}.variants() == 24);
  for (const auto& v : variants) {
    CHECK(v.width() == 31);
    CHECK(v.height() == 31);
  }
  CHECK(identical(variants[0], translate(x, -1, 0)));
  CHECK(identical(variants[1], translate(x, 1, 0)));
  CHECK(identical(variants[2], translate(x, 0, -1)));
  CHECK(identical(variants[3], translate(x, 0, 1)));
  CHECK(identical(variants[15], translate(x, 0, 4)));
  CHECK(identical(variants[22], flip_horizontal(x)));
  CHECK(identical(variants[23], flip_vertical(x)));
  CHECK(max_diff(variants[22], x) <= 1.0f);
  CHECK(max_diff(variants[23], x) <= 1.0f);
  CHECK(max_diff(variants[22], variants[23]) <= 1.0f);
  // Rotations keep the corners white.
  for (int r = 16; r < 22; ++r) CHECK(variants[r].at(0, 0) == kWhite);

  const ColorImage back = translate(translate(x, 1, 0), -1, 0);
  for (int y = 0; y < 31; ++y)
    for (int xx = 0; xx < 30; ++xx) CHECK(back.at(xx, y) == x.at(xx, y));
  for (int y = 0; y < 31; ++y) CHECK(back.at(30, y) == kWhite);

  AugmentationConfig zero;
  zero.rotations_deg = {0.0};
  CHECK(code_of([&] { augment_crossed_out(x, zero); }) == ErrorCode::ConfigInvalid);
  CHECK(code_of([] { augment_crossed_out(ColorImage()); }) == ErrorCode::DegenerateRoi);
}

TEST_CASE("synthetic exam generator") {
  SynthConfig c;
  c.sheets = 3;
  c.seed = 17;
  c.mixture = {0.0, 0.0, 1.0};
  for (const auto& s : generate_synthetic_exam(c).sheets) CHECK(s.grade == 0.0);

  c.perfect_key = true;
  c.max_rotation_deg = 0.0;
  c.max_shift_px = 0.0;
  const SyntheticExam perfect = generate_synthetic_exam(c);
  for (const auto& s : perfect.sheets) CHECK(s.grade == perfect.metadata.total_weight());

  SynthConfig mixed;
  mixed.sheets = 4;
  mixed.seed = 23;
  mixed.mixture = {0.4, 0.3, 0.3};
  const SyntheticExam a = generate_synthetic_exam(mixed);
  const SyntheticExam b = generate_synthetic_exam(mixed);
  CHECK(identical(a.reference, b.reference));
  for (std::size_t i = 0; i < a.sheets.size(); ++i) {
    CHECK(identical(a.sheets[i].image, b.sheets[i].image));
    CHECK(a.sheets[i].labels == b.sheets[i].labels);
    CHECK(a.sheets[i].image_name == "exam0_" + std::to_string(i) + "_0");
  }
  for (const auto& s : a.sheets) {
    double oracle = 0.0;
    for (std::size_t q = 0; q < s.labels.size(); ++q) {
      const Question& question = a.metadata.question(static_cast<int>(q));
      oracle += ref::grade_question(s.labels[q], question.correct_choice, question.weight).awarded;
    }
    CHECK(s.grade == oracle);
  }
  mixed.mixture = {0.5, 0.5, 0.5};
  CHECK(code_of([&] { generate_synthetic_exam(mixed); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("labeled samples") {
  SynthConfig c;
  c.sheets = 2;
  c.questions = 3;
  c.choices = 4;
  c.seed = 9;
  c.mixture = {0.3, 0.3, 0.4};
  const SyntheticExam exam = generate_synthetic_exam(c);
  const auto aligned = fixtures::aligned_sheets(exam);
  const auto samples = collect_labeled_samples(aligned, exam.metadata, exam.labels(), 100);
  REQUIRE(samples.size() == 24);
  std::array<int, 3> counted{}, drawn{};
  for (const auto& s : exam.sheets)
    for (const auto& q : s.labels)
      for (AnswerClass a : q) ++drawn[class_index(a)];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(samples[i].id == static_cast<int>(100 + i));
    CHECK_FALSE(samples[i].augmented);
    ++counted[class_index(samples[i].label)];
    const auto& box = samples[i].roi.source;
    CHECK(samples[i].label == exam.sheets[i / 12].labels[box.question_index][box.choice_index]);
  }
  CHECK(counted == drawn);

  LabelTable partial = exam.labels();
  partial.entries.erase(partial.entries.begin());
  CHECK(code_of([&] { collect_labeled_samples(aligned, exam.metadata, partial); }) == ErrorCode::LabelMissing);

  auto with_aug = samples;
  append_augmented(with_aug);
  const std::size_t crossed = static_cast<std::size_t>(counted[class_index(CrossedOut)]);
  REQUIRE(with_aug.size() == samples.size() + 24 * crossed);
  for (std::size_t i = samples.size(); i < with_aug.size(); ++i) {
    CHECK(with_aug[i].augmented);
    CHECK(with_aug[i].label == CrossedOut);
    REQUIRE(with_aug[i].source_id >= 100);
    CHECK(with_aug[with_aug[i].source_id - 100].label == CrossedOut);
  }
}

TEST_CASE("synthetic exam written to disk loads back") {
  SynthConfig c;
  c.sheets = 2;
  c.seed = 31;
  const SyntheticExam exam = generate_synthetic_exam(c);
  const auto dir = std::filesystem::temp_directory_path() / "omr_synth_write";
  std::filesystem::remove_all(dir);
  write_synthetic_exam(dir, exam);
  CHECK(load_metadata(dir / "metadata.json") == exam.metadata);
  CHECK(load_labels(dir / "labels.csv").entries == exam.labels().entries);
  CHECK(identical(read_png(dir / "reference.png"), exam.reference));
  for (const auto& s : exam.sheets) CHECK(identical(read_png(dir / "sheets" / (s.image_name + ".png")), s.image));
  std::filesystem::remove_all(dir);
}
