#include "omr/report.hpp"

#include <cmath>
#include <cstdio>

#include "omr/metadata.hpp"

namespace omr {

std::vector<ReportRow> report_rows(const std::vector<SheetGrade>& sheets) {
  std::vector<ReportRow> rows;
  rows.reserve(sheets.size());
  for (const auto& s : sheets) rows.push_back({s.sheet_id, s.total});
  return rows;
}

std::string format_grade(double grade) {
  double rounded = std::round(grade * 100.0) / 100.0;
  if (rounded == 0.0) rounded = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", rounded);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

namespace {

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n\r") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_attr(const std::string& v) {
  std::string out;
  for (char c : v) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_csv(const std::vector<ReportRow>& rows) {
  std::string out = "image,grade\n";
  for (const auto& r : rows) out += csv_field(r.image) + "," + format_grade(r.grade) + "\n";
  return out;
}

std::string render_xml(const std::vector<ReportRow>& rows) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<report>\n";
  for (const auto& r : rows) {
    out += "  <sheet image=\"" + xml_attr(r.image) + "\" grade=\"" + format_grade(r.grade) + "\"/>\n";
  }
  return out + "</report>\n";
}

nlohmann::ordered_json scores_json(const ClassScores& scores) {
  nlohmann::ordered_json j;
  j["predicted"] = class_name(scores.predicted);
  j["confidence"] = scores.confidence;
  nlohmann::ordered_json by_class = nlohmann::ordered_json::object();
  for (AnswerClass c : kAllClasses) by_class[std::string(class_name(c))] = scores.scores[class_index(c)];
  j["scores"] = by_class;
  return j;
}

nlohmann::ordered_json sheet_json(const SheetGrade& sheet) {
  nlohmann::ordered_json j;
  j["image"] = sheet.sheet_id;
  j["total"] = sheet.total;
  nlohmann::ordered_json questions = nlohmann::ordered_json::array();
  for (const auto& q : sheet.questions) {
    nlohmann::ordered_json qj;
    qj["question"] = q.question_index;
    qj["selected_choice"] = q.selected_choice ? nlohmann::ordered_json(*q.selected_choice) : nlohmann::ordered_json();
    qj["confirmed_count"] = q.confirmed_count;
    qj["awarded"] = q.awarded;
    qj["flagged"] = q.flagged_for_review;
    nlohmann::ordered_json boxes = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < q.boxes.size(); ++c) {
      boxes.push_back({{"choice", c}, {"answer", class_name(q.boxes[c].answer)}, {"confidence", q.boxes[c].confidence}});
    }
    qj["boxes"] = boxes;
    questions.push_back(qj);
  }
  j["questions"] = questions;
  nlohmann::ordered_json registration = nlohmann::ordered_json::array();
  for (const auto& r : sheet.registration) {
    registration.push_back({{"matches", r.matches},
                            {"inliers", r.inliers},
                            {"mean_reprojection_error", r.mean_reprojection_error}});
  }
  j["registration"] = registration;
  return j;
}

nlohmann::ordered_json failure_json(const SheetFailure& failure) {
  return {{"image", failure.sheet_id}, {"error", failure.error}, {"message", failure.message}};
}

nlohmann::ordered_json batch_json(const BatchResult& batch) {
  nlohmann::ordered_json sheets = nlohmann::ordered_json::array();
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& s : batch.sheets) {
    if (s.grade) sheets.push_back(sheet_json(*s.grade));
    if (s.failure) failures.push_back(failure_json(*s.failure));
  }
  nlohmann::ordered_json j;
  j["graded"] = batch.report.graded;
  j["sheets"] = sheets;
  j["failures"] = failures;
  return j;
}

void write_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  write_text(path, render_csv(rows));
}

void write_xml(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  write_text(path, render_xml(rows));
}

}  // namespace omr
