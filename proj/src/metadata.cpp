#include "omr/metadata.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "omr/error.hpp"

namespace omr {

using nlohmann::ordered_json;

double ExamMetadata::total_weight() const {
  double total = 0.0;
  for (const auto& q : questions) total += q.weight;
  return total;
}

std::vector<int> ExamMetadata::questions_per_page() const {
  std::vector<int> counts(std::max(pages, 0), 0);
  for (const auto& q : questions)
    if (q.page >= 0 && q.page < pages) ++counts[q.page];
  return counts;
}

const Question& ExamMetadata::question(int index) const {
  if (index < 0 || index >= static_cast<int>(questions.size())) {
    throw Error(ErrorCode::QuestionUnknown, "question " + std::to_string(index) + " of " +
                                                std::to_string(questions.size()));
  }
  return questions[index];
}

std::vector<RoiBox> ExamMetadata::boxes(int question_index) const {
  const Question& q = question(question_index);
  std::vector<RoiBox> out;
  for (int c = 0; c < static_cast<int>(q.choices.size()); ++c) out.push_back({q.choices[c], question_index, c});
  return out;
}

void validate_metadata(const ExamMetadata& m) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ValidationError, what); };
  if (m.exam_id.empty()) fail("examId is empty");
  if (m.pages < 1) fail("examNumberOfPages must be at least 1");
  if (m.has_student_id != m.student_id_rect.has_value()) fail("isThereAStudentId disagrees with studentIdRect");
  if (m.student_id_rect && (m.student_id_rect->w <= 0 || m.student_id_rect->h <= 0)) fail("studentIdRect is empty");
  for (std::size_t i = 0; i < m.questions.size(); ++i) {
    const Question& q = m.questions[i];
    const std::string name = "question " + std::to_string(i);
    if (q.choices.size() < 2) fail(name + ": fewer than 2 choices");
    if (q.correct_choice < 0 || q.correct_choice >= static_cast<int>(q.choices.size())) {
      fail(name + ": questionAnswer " + std::to_string(q.correct_choice) + " outside 0.." +
           std::to_string(q.choices.size() - 1));
    }
    if (!(q.weight > 0.0)) fail(name + ": questionWeight must be positive");
    if (q.page < 0 || q.page >= m.pages) fail(name + ": pageNumber outside the exam");
    for (std::size_t c = 0; c < q.choices.size(); ++c) {
      const Rect& r = q.choices[c];
      if (r.w <= 0 || r.h <= 0) fail(name + ": choice " + std::to_string(c) + " has an empty questionRect");
    }
  }
}

namespace {

ordered_json rect_json(const Rect& r) { return ordered_json::array({r.x, r.y, r.w, r.h}); }

Rect rect_from(const ordered_json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::ParseError, field + ": expected [x, y, w, h]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

const ordered_json& field(const ordered_json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw Error(ErrorCode::ParseError, where + ": missing field " + key);
  return obj.at(key);
}

int line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

ExamMetadata parse_metadata(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text.begin(), text.end());
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_of(text, e.byte > 0 ? e.byte - 1 : 0)) +
                                           ": malformed metadata");
  }
  ExamMetadata m;
  try {
    m.exam_id = field(doc, "examId", "metadata").get<std::string>();
    m.pages = field(doc, "examNumberOfPages", "metadata").get<int>();
    m.has_student_id = field(doc, "isThereAStudentId", "metadata").get<bool>();
    if (doc.contains("studentIdRect") && !doc.at("studentIdRect").is_null()) {
      m.student_id_rect = rect_from(doc.at("studentIdRect"), "studentIdRect");
    }
    const auto& questions = field(doc, "questions", "metadata");
    for (std::size_t i = 0; i < questions.size(); ++i) {
      const std::string where = "questions[" + std::to_string(i) + "]";
      const auto& jq = questions[i];
      Question q;
      q.page = field(jq, "pageNumber", where).get<int>();
      q.weight = field(jq, "questionWeight", where).get<double>();
      q.correct_choice = field(jq, "questionAnswer", where).get<int>();
      const int n_choices = field(jq, "questionChoices", where).get<int>();
      const auto& rects = field(jq, "questionRect", where);
      if (!rects.is_array() || static_cast<int>(rects.size()) != n_choices) {
        throw Error(ErrorCode::ValidationError, "question " + std::to_string(i) + ": questionChoices is " +
                                                    std::to_string(n_choices) + " but questionRect has " +
                                                    std::to_string(rects.size()) + " entries");
      }
      for (const auto& r : rects) q.choices.push_back(rect_from(r, where + ".questionRect"));
      m.questions.push_back(std::move(q));
    }
    if (field(doc, "totalNumberOfQuestions", "metadata").get<int>() != static_cast<int>(m.questions.size())) {
      throw Error(ErrorCode::ValidationError, "totalNumberOfQuestions disagrees with the question list");
    }
    if (field(doc, "numberOfQuestionsPerPage", "metadata").get<std::vector<int>>() != m.questions_per_page()) {
      throw Error(ErrorCode::ValidationError, "numberOfQuestionsPerPage disagrees with the question pages");
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("wrong field type: ") + e.what());
  }
  validate_metadata(m);
  return m;
}

std::string format_metadata(const ExamMetadata& m) {
  ordered_json doc;
  doc["examId"] = m.exam_id;
  doc["examNumberOfPages"] = m.pages;
  doc["totalNumberOfQuestions"] = m.questions.size();
  doc["numberOfQuestionsPerPage"] = m.questions_per_page();
  doc["isThereAStudentId"] = m.has_student_id;
  doc["studentIdRect"] = m.student_id_rect ? rect_json(*m.student_id_rect) : ordered_json(nullptr);
  ordered_json questions = ordered_json::array();
  for (const auto& q : m.questions) {
    ordered_json jq;
    jq["pageNumber"] = q.page;
    jq["questionWeight"] = q.weight;
    jq["questionAnswer"] = q.correct_choice;
    jq["questionChoices"] = q.choices.size();
    ordered_json rects = ordered_json::array();
    for (const auto& r : q.choices) rects.push_back(rect_json(r));
    jq["questionRect"] = rects;
    questions.push_back(jq);
  }
  doc["questions"] = questions;
  return doc.dump(2) + "\n";
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

ExamMetadata load_metadata(const std::filesystem::path& path) { return parse_metadata(read_text(path)); }

void save_metadata(const std::filesystem::path& path, const ExamMetadata& m) {
  validate_metadata(m);
  write_text(path, format_metadata(m));
}

std::optional<AnswerClass> LabelTable::find(const std::string& image, int question, int choice) const {
  const auto it = entries.find({image, question, choice});
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

LabelTable parse_labels(std::string_view text) {
  LabelTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("imageName", 0) == 0) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 4 fields");
    int q = 0, c = 0, type = 0;
    try {
      q = std::stoi(cells[1]);
      c = std::stoi(cells[2]);
      type = std::stoi(cells[3]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": non-numeric field");
    }
    const auto cls = class_from_code(type);
    if (!cls) {
      throw Error(ErrorCode::ValidationError,
                  "line " + std::to_string(line_no) + ": unknown answerType " + std::to_string(type));
    }
    table.set(cells[0], q, c, *cls);
  }
  return table;
}

std::string format_labels(const LabelTable& labels) {
  std::string out = "imageName,question,choice,answerType\n";
  for (const auto& [key, cls] : labels.entries) {
    const auto& [image, q, c] = key;
    out += image + "," + std::to_string(q) + "," + std::to_string(c) + "," + std::to_string(code(cls)) + "\n";
  }
  return out;
}

LabelTable load_labels(const std::filesystem::path& path) { return parse_labels(read_text(path)); }
void save_labels(const std::filesystem::path& path, const LabelTable& labels) { write_text(path, format_labels(labels)); }

}  // namespace omr
