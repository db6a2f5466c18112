#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "omr/image.hpp"
#include "omr/types.hpp"

namespace omr {

struct Question {
  int page = 0;
  double weight = 1.0;
  int correct_choice = 0;  // index into `choices`
  std::vector<Rect> choices;

  friend bool operator==(const Question&, const Question&) = default;
};

// Reference-sheet description. Questions are indexed by position.
struct ExamMetadata {
  std::string exam_id;
  int pages = 1;
  bool has_student_id = false;
  std::optional<Rect> student_id_rect;
  std::vector<Question> questions;

  double total_weight() const;
  std::vector<int> questions_per_page() const;
  // Throws Error(QuestionUnknown).
  const Question& question(int index) const;
  std::vector<RoiBox> boxes(int question_index) const;

  friend bool operator==(const ExamMetadata&, const ExamMetadata&) = default;
};

// Throws Error(ValidationError) naming the first violated invariant.
void validate_metadata(const ExamMetadata& m);

// JSON keyed by the dataset variable names (examId, questions[].questionRect, ...).
// Throws Error(ParseError) with the line of a syntax error or the missing field,
// then validates.
ExamMetadata parse_metadata(std::string_view text);
// Canonical formatting: two-space indentation, trailing newline.
std::string format_metadata(const ExamMetadata& m);
ExamMetadata load_metadata(const std::filesystem::path& path);
void save_metadata(const std::filesystem::path& path, const ExamMetadata& m);

// Ground-truth labels: CSV rows imageName,question,choice,answerType.
struct LabelTable {
  std::map<std::tuple<std::string, int, int>, AnswerClass> entries;

  std::optional<AnswerClass> find(const std::string& image, int question, int choice) const;
  void set(const std::string& image, int question, int choice, AnswerClass c) { entries[{image, question, choice}] = c; }
  std::size_t size() const { return entries.size(); }
};

// Throws Error(ParseError) on malformed rows and Error(ValidationError) on unknown answer types.
LabelTable parse_labels(std::string_view text);
std::string format_labels(const LabelTable& labels);
LabelTable load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const LabelTable& labels);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace omr
