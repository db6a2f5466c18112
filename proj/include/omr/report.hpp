#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "omr/grading.hpp"

namespace omr {

struct ReportRow {
  std::string image;
  double grade = 0.0;
};

std::vector<ReportRow> report_rows(const std::vector<SheetGrade>& sheets);

// Rounded to two decimals with trailing zeros (and a bare point) dropped: 7.50 -> "7.5", 3.00 -> "3".
std::string format_grade(double grade);

// Header `image,grade`, LF line endings. Names holding a comma, quote or newline are quoted.
std::string render_csv(const std::vector<ReportRow>& rows);
// <report> root with one <sheet image=".." grade=".."/> per row.
std::string render_xml(const std::vector<ReportRow>& rows);

// Per-question detail shared by the grade command and the HTTP service.
nlohmann::ordered_json sheet_json(const SheetGrade& sheet);
nlohmann::ordered_json failure_json(const SheetFailure& failure);
nlohmann::ordered_json batch_json(const BatchResult& batch);
nlohmann::ordered_json scores_json(const ClassScores& scores);

void write_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);
void write_xml(const std::filesystem::path& path, const std::vector<ReportRow>& rows);

}  // namespace omr
