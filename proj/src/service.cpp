#include "omr/service.hpp"

#include <charconv>
#include <fstream>

#include "httplib.h"
#include "omr/error.hpp"
#include "omr/pipeline.hpp"
#include "omr/png_io.hpp"
#include "omr/report.hpp"

namespace omr {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return 400;
    case ErrorCode::IoError:
    case ErrorCode::ModelFormat: return 500;
    default: return 422;
  }
}

HttpResponse json_response(int status, const ordered_json& body) {
  return {status, body.dump(2) + "\n", "application/json"};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 1;
  const std::string clean = path.substr(0, path.find('?'));
  while (start <= clean.size()) {
    const auto end = clean.find('/', start);
    const std::string part = clean.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!part.empty()) parts.push_back(part);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return parts;
}

int parse_index(const std::string& s, const std::string& what) {
  int v = -1;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    throw Error(ErrorCode::ValidationError, what + " must be a non-negative integer");
  }
  return v;
}

template <typename T>
T field(const json& req, const char* name) {
  if (!req.contains(name)) throw Error(ErrorCode::ValidationError, std::string("missing field ") + name);
  try {
    return req.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ValidationError, std::string("field ") + name + " has the wrong type");
  }
}

HttpResponse png_response(const ColorImage& image) {
  const auto bytes = encode_png(image);
  return {200, std::string(bytes.begin(), bytes.end()), "image/png"};
}

}  // namespace

HttpResponse error_response(int status, std::string_view name, const std::string& message) {
  ordered_json body;
  body["error"] = {{"name", std::string(name)}, {"message", message}};
  return json_response(status, body);
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  std::vector<ColorImage> pages;
  for (const auto& p : config_.reference_pages) pages.push_back(read_png(p));
  if (pages.empty()) throw Error(ErrorCode::ConfigInvalid, "no reference pages");
  reference_ = ReferenceSheet::prepare(std::move(pages), config_.registration.detector);
  metadata_ = load_metadata(config_.metadata_path);
  if (metadata_.pages != static_cast<int>(reference_.pages.size())) {
    throw Error(ErrorCode::ValidationError, "metadata has " + std::to_string(metadata_.pages) + " pages, reference has " +
                                                std::to_string(reference_.pages.size()));
  }
  sources_ = discover_sheets(config_.sheets_dir, metadata_.pages);
}

Service::~Service() { wait_idle(); }

void Service::wait_idle() {
  if (worker_.joinable()) worker_.join();
}

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) {
  try {
    const auto parts = split_path(path);
    if (parts.size() < 2 || parts[0] != "v1") return error_response(404, "NotFound", "no route " + path);
    const std::string& head = parts[1];
    auto parse_body = [&body]() {
      try {
        return body.empty() ? json::object() : json::parse(body);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
      }
    };
    if (method == "GET") {
      if (parts.size() == 2 && head == "exam") return get_exam();
      if (head == "reference" || head == "sheets") return get_png(path);
      if (parts.size() == 2 && head == "metadata") return get_metadata();
      if (parts.size() == 3 && head == "grade" && parts[2] == "progress") return get_progress();
      if (parts.size() == 2 && head == "grades") return get_grades();
      if (parts.size() == 2 && head == "review-queue") return get_review_queue();
    } else if (method == "PUT") {
      if (parts.size() == 2 && head == "metadata") return put_metadata(body);
    } else if (method == "POST") {
      if (parts.size() == 2 && head == "classify-preview") return classify_preview(parse_body());
      if (parts.size() == 2 && head == "grade") return post_grade(parse_body());
      if (parts.size() == 2 && head == "override") return post_override(parse_body());
    }
    return error_response(404, "NotFound", "no route " + method + " " + path);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.name(), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "InternalError", e.what());
  }
}

ExamMetadata Service::metadata_snapshot() const {
  std::lock_guard lock(state_mutex_);
  return metadata_;
}

const SheetSource& Service::source(const std::string& sheet_id) const {
  for (const auto& s : sources_) {
    if (s.id == sheet_id) return s;
  }
  throw Error(ErrorCode::ValidationError, "unknown sheet " + sheet_id);
}

HttpResponse Service::get_exam() {
  const ExamMetadata m = metadata_snapshot();
  ordered_json j;
  j["examId"] = m.exam_id;
  j["pages"] = m.pages;
  j["questions"] = m.questions.size();
  ordered_json sheets = ordered_json::array();
  for (const auto& s : sources_) sheets.push_back(s.id);
  j["sheets"] = sheets;
  return json_response(200, j);
}

HttpResponse Service::get_png(const std::string& path) {
  const auto parts = split_path(path);
  if (parts[1] == "reference" && parts.size() == 3) {
    const int page = parse_index(parts[2], "page");
    if (page >= static_cast<int>(reference_.pages.size())) return error_response(404, "NotFound", "no such page");
    return png_response(reference_.pages[page]);
  }
  if (parts[1] == "sheets" && (parts.size() == 3 || parts.size() == 4)) {
    const SheetSource& src = source(parts[2]);
    const int page = parts.size() == 4 ? parse_index(parts[3], "page") : 0;
    if (page >= static_cast<int>(src.page_files.size())) return error_response(404, "NotFound", "no such page");
    return png_response(read_png(src.page_files[page]));
  }
  return error_response(404, "NotFound", "no route GET " + path);
}

HttpResponse Service::get_metadata() {
  return {200, format_metadata(metadata_snapshot()), "application/json"};
}

HttpResponse Service::put_metadata(const std::string& body) {
  ExamMetadata updated = parse_metadata(body);
  if (updated.pages != static_cast<int>(reference_.pages.size())) {
    throw Error(ErrorCode::ValidationError, "examNumberOfPages must be " + std::to_string(reference_.pages.size()));
  }
  const int tol = config_.grading.roi_tolerance_px;
  for (std::size_t q = 0; q < updated.questions.size(); ++q) {
    const Question& question = updated.questions[q];
    const Size size = reference_.pages[question.page].size();
    for (const Rect& r : question.choices) {
      if (r.x < -tol || r.y < -tol || r.x + r.w > size.w + tol || r.y + r.h > size.h + tol) {
        throw Error(ErrorCode::ValidationError, "question " + std::to_string(q) + " has a box outside the reference page");
      }
    }
  }
  std::lock_guard lock(state_mutex_);
  const fs::path tmp = config_.metadata_path.string() + ".tmp";
  write_text(tmp, format_metadata(updated));
  fs::rename(tmp, config_.metadata_path);
  metadata_ = std::move(updated);
  return {200, format_metadata(metadata_), "application/json"};
}

StrategySpec Service::resolve_strategy(const json& req) const {
  if (req.contains("stage1")) {
    const std::string kind = req.value("strategy", "SF");
    StrategySpec spec;
    if (kind == "SF") {
      spec.kind = StrategyKind::StraightForward;
    } else if (kind == "2S") {
      spec.kind = StrategyKind::TwoStage;
    } else {
      throw Error(ErrorCode::SpecInvalid, "strategy must be SF or 2S, got '" + kind + "'");
    }
    spec.stage1 = make_classifier(load_model(config_.models_dir / field<std::string>(req, "stage1")));
    if (req.contains("stage2")) {
      spec.stage2 = make_classifier(load_model(config_.models_dir / field<std::string>(req, "stage2")));
    }
    spec.validate();
    return spec;
  }
  const std::string file = req.value("strategy_file", "strategy.json");
  return load_strategy(config_.models_dir / file);
}

std::vector<ColorImage> Service::registered_pages(const std::string& sheet_id) {
  {
    std::lock_guard lock(state_mutex_);
    const auto it = registered_.find(sheet_id);
    if (it != registered_.end()) return it->second;
  }
  const auto batch = register_sheets({source(sheet_id)}, reference_, config_.registration);
  if (!batch.failures.empty()) throw Error(ErrorCode::RegistrationFailed, batch.failures.front().message);
  std::lock_guard lock(state_mutex_);
  return registered_[sheet_id] = batch.sheets.front().pages;
}

HttpResponse Service::classify_preview(const json& req) {
  const StrategySpec spec = resolve_strategy(req);
  const ExamMetadata m = metadata_snapshot();
  const auto pages = registered_pages(field<std::string>(req, "sheet"));
  ColorImage roi;
  if (req.contains("rect")) {
    const auto r = field<std::vector<int>>(req, "rect");
    if (r.size() != 4 || r[2] <= 0 || r[3] <= 0) throw Error(ErrorCode::ValidationError, "rect must be [x, y, w, h]");
    const int page = req.value("page", 0);
    if (page < 0 || page >= static_cast<int>(pages.size())) throw Error(ErrorCode::ValidationError, "no such page");
    roi = crop(pages[page], Rect{r[0], r[1], r[2], r[3]});
  } else {
    const int q = field<int>(req, "question");
    const int c = field<int>(req, "choice");
    const Question& question = m.question(q);
    if (c < 0 || c >= static_cast<int>(question.choices.size())) {
      throw Error(ErrorCode::ValidationError, "question " + std::to_string(q) + " has no choice " + std::to_string(c));
    }
    roi = std::move(extract_rois(pages[question.page], m, q, config_.grading.roi_tolerance_px)[c].pixels);
  }
  return json_response(200, scores_json(classify_strategy(roi, spec)));
}

void Service::run_grading(StrategySpec spec, ExamMetadata metadata) {
  std::lock_guard grade_lock(grade_mutex_);
  BatchConfig batch;
  batch.grading = config_.grading;
  batch.registration = config_.registration;
  batch.concurrency = config_.concurrency;
  batch.progress = [this](std::size_t done, std::size_t) { done_ = done; };
  BatchResult result = grade_batch(sources_, reference_, metadata, spec, batch);
  {
    std::lock_guard lock(state_mutex_);
    grades_ = std::move(result);
  }
  running_ = false;
}

HttpResponse Service::post_grade(const json& req) {
  StrategySpec spec = resolve_strategy(req);
  bool expected = false;
  if (!running_.compare_exchange_strong(expected, true)) {
    return error_response(409, "Busy", "a grading run is in progress");
  }
  done_ = 0;
  total_ = sources_.size();
  ExamMetadata metadata = metadata_snapshot();
  if (req.value("async", false)) {
    wait_idle();
    worker_ = std::thread([this, spec = std::move(spec), metadata = std::move(metadata)]() mutable {
      try {
        run_grading(std::move(spec), std::move(metadata));
      } catch (...) {
        running_ = false;
      }
    });
    ordered_json j;
    j["running"] = true;
    j["total"] = total_.load();
    return json_response(202, j);
  }
  try {
    run_grading(std::move(spec), std::move(metadata));
  } catch (...) {
    running_ = false;
    throw;
  }
  return get_grades();
}

HttpResponse Service::get_progress() {
  ordered_json j;
  j["running"] = running_.load();
  j["done"] = done_.load();
  j["total"] = total_.load();
  return json_response(200, j);
}

HttpResponse Service::get_grades() {
  std::lock_guard lock(state_mutex_);
  if (!grades_) return error_response(404, "NotFound", "nothing graded yet");
  return json_response(200, batch_json(*grades_));
}

HttpResponse Service::get_review_queue() {
  std::lock_guard lock(state_mutex_);
  ordered_json items = ordered_json::array();
  if (grades_) {
    for (const auto& outcome : grades_->sheets) {
      if (!outcome.grade) continue;
      for (const auto& q : outcome.grade->questions) {
        double min_conf = 1.0;
        for (const auto& b : q.boxes) min_conf = std::min(min_conf, b.confidence);
        if (min_conf >= config_.grading.review_threshold) continue;
        ordered_json item;
        item["image"] = outcome.grade->sheet_id;
        item["question"] = q.question_index;
        item["min_confidence"] = min_conf;
        ordered_json boxes = ordered_json::array();
        for (std::size_t c = 0; c < q.boxes.size(); ++c) {
          boxes.push_back(
              {{"choice", c}, {"answer", class_name(q.boxes[c].answer)}, {"confidence", q.boxes[c].confidence}});
        }
        item["boxes"] = boxes;
        items.push_back(item);
      }
    }
  }
  ordered_json j;
  j["review_threshold"] = config_.grading.review_threshold;
  j["items"] = items;
  return json_response(200, j);
}

HttpResponse Service::post_override(const json& req) {
  const std::string image = field<std::string>(req, "image");
  const int q = field<int>(req, "question");
  const int c = field<int>(req, "choice");
  const auto answer = class_from_name(field<std::string>(req, "answer"));
  if (!answer) throw Error(ErrorCode::ValidationError, "answer must be confirmed, crossed_out or empty");
  if (running_) return error_response(409, "Busy", "a grading run is in progress");
  std::lock_guard lock(state_mutex_);
  if (!grades_) return error_response(404, "NotFound", "nothing graded yet");
  for (auto& outcome : grades_->sheets) {
    if (!outcome.grade || outcome.grade->sheet_id != image) continue;
    SheetGrade edited = *outcome.grade;
    auto it = std::find_if(edited.questions.begin(), edited.questions.end(),
                           [q](const QuestionResult& r) { return r.question_index == q; });
    if (it == edited.questions.end()) throw Error(ErrorCode::QuestionUnknown, "question " + std::to_string(q));
    if (c < 0 || c >= static_cast<int>(it->boxes.size())) {
      throw Error(ErrorCode::ValidationError, "question " + std::to_string(q) + " has no choice " + std::to_string(c));
    }
    it->boxes[c] = BoxResult{*answer, 1.0};
    regrade(edited, metadata_, config_.grading);
    *outcome.grade = std::move(edited);
    return json_response(200, sheet_json(*outcome.grade));
  }
  return error_response(404, "NotFound", "no graded sheet " + image);
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>()) {
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  impl_->server.Get(R"(/v1/.*)", route);
  impl_->server.Put(R"(/v1/.*)", route);
  impl_->server.Post(R"(/v1/.*)", route);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace omr
