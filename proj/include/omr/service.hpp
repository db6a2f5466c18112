#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "omr/grading.hpp"
#include "omr/metadata.hpp"
#include "omr/strategy.hpp"

namespace omr {

struct ServiceConfig {
  std::vector<std::filesystem::path> reference_pages;
  std::filesystem::path metadata_path;
  std::filesystem::path sheets_dir;
  std::filesystem::path models_dir;  // strategy.json and model files
  RegistrationConfig registration;
  GradingConfig grading;
  int concurrency = 1;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// The /v1 API over one exam. Transport-free so it can be driven directly;
// serve() puts it behind a local HTTP listener.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body);

  // Blocks until the async grading run, if any, finishes.
  void wait_idle();

 private:
  HttpResponse get_exam();
  HttpResponse get_png(const std::string& path);
  HttpResponse get_metadata();
  HttpResponse put_metadata(const std::string& body);
  HttpResponse classify_preview(const nlohmann::json& req);
  HttpResponse post_grade(const nlohmann::json& req);
  HttpResponse get_progress();
  HttpResponse get_grades();
  HttpResponse get_review_queue();
  HttpResponse post_override(const nlohmann::json& req);

  StrategySpec resolve_strategy(const nlohmann::json& req) const;
  std::vector<ColorImage> registered_pages(const std::string& sheet_id);
  const SheetSource& source(const std::string& sheet_id) const;
  ExamMetadata metadata_snapshot() const;
  void run_grading(StrategySpec spec, ExamMetadata metadata);

  ServiceConfig config_;
  ReferenceSheet reference_;
  std::vector<SheetSource> sources_;

  mutable std::mutex state_mutex_;
  ExamMetadata metadata_;
  std::optional<StrategySpec> strategy_;
  std::optional<BatchResult> grades_;
  std::map<std::string, std::vector<ColorImage>> registered_;

  std::mutex grade_mutex_;  // one grading run at a time
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> done_{0};
  std::atomic<std::size_t> total_{0};
  std::thread worker_;
};

// Error payload: {"error": {"name": ..., "message": ...}}.
HttpResponse error_response(int status, std::string_view name, const std::string& message);

// Local HTTP listener routing /v1 requests to a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port. Throws Error(IoError).
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace omr
