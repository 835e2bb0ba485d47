#include "wordorder/server.h"

#include <chrono>
#include <ctime>
#include <numeric>

#include "httplib.h"
#include "wordorder/errors.h"
#include "wordorder/random.h"

namespace wordorder {

using nlohmann::ordered_json;

namespace {

HttpReply json_reply(int status, const ordered_json &j) { return {status, j.dump() + "\n"}; }

HttpReply error_reply(int status, std::vector<FieldError> errors) {
  ordered_json j;
  j["schema"] = kSchemaVersion;
  j["errors"] = ordered_json::array();
  for (const FieldError &e : errors) j["errors"].push_back({{"field", e.field}, {"message", e.message}});
  return json_reply(status, j);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

}  // namespace

JudgmentService::JudgmentService(std::vector<JudgmentItem> items, JudgmentStore &store,
                                 std::uint64_t order_seed)
    : items_(std::move(items)), store_(store), order_seed_(order_seed) {
  for (std::size_t i = 0; i < items_.size(); ++i)
    if (!index_.emplace(items_[i].item_id, i).second)
      throw UsageError("duplicate item id '" + items_[i].item_id + "'");
}

std::vector<std::size_t> JudgmentService::order_for(const std::string &rater) const {
  std::vector<std::size_t> order(items_.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(order_seed_, rater));
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

HttpReply JudgmentService::get_items(const std::string &rater) const {
  if (rater.empty()) return error_reply(400, {{"rater", "query parameter is required"}});
  const std::set<std::string> answered = store_.answered_by(rater);
  ordered_json j;
  j["schema"] = kSchemaVersion;
  j["rater_id"] = rater;
  j["total"] = items_.size();
  j["answered"] = answered.size();
  j["items"] = ordered_json::array();
  for (std::size_t i : order_for(rater)) {
    if (answered.contains(items_[i].item_id)) continue;
    j["items"].push_back(public_item_json(items_[i]));
    break;
  }
  return json_reply(200, j);
}

HttpReply JudgmentService::post_judgment(const std::string &body) {
  ordered_json j;
  try {
    j = ordered_json::parse(body);
  } catch (const nlohmann::json::exception &) {
    return error_reply(400, {{"body", "not valid JSON"}});
  }
  std::vector<FieldError> errors;
  auto record = parse_record(j, errors);
  if (!record) return error_reply(400, std::move(errors));
  if (!index_.contains(record->item_id)) return error_reply(400, {{"item_id", "unknown item"}});
  if (record->timestamp.empty()) record->timestamp = utc_now();
  if (store_.append(*record) == JudgmentStore::AppendResult::kDuplicate) {
    ordered_json conflict;
    conflict["schema"] = kSchemaVersion;
    conflict["status"] = "duplicate";
    conflict["item_id"] = record->item_id;
    conflict["rater_id"] = record->rater_id;
    return json_reply(409, conflict);
  }
  ordered_json ok;
  ok["schema"] = kSchemaVersion;
  ok["status"] = "accepted";
  ok["record"] = record_json(*record);
  return json_reply(201, ok);
}

HttpReply JudgmentService::health() const {
  ordered_json j;
  j["schema"] = kSchemaVersion;
  j["status"] = "ok";
  j["items"] = items_.size();
  j["records"] = store_.size();
  return json_reply(200, j);
}

struct JudgmentServer::Impl {
  httplib::Server http;
};

JudgmentServer::JudgmentServer(JudgmentService &service) : impl_(std::make_unique<Impl>()) {
  auto &http = impl_->http;
  const auto send = [](httplib::Response &res, const HttpReply &reply) {
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
  http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                            {"Access-Control-Allow-Headers", "Content-Type"},
                            {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  http.Get("/health", [&service, send](const httplib::Request &, httplib::Response &res) {
    send(res, service.health());
  });
  http.Get("/items", [&service, send](const httplib::Request &req, httplib::Response &res) {
    send(res, service.get_items(req.get_param_value("rater")));
  });
  http.Post("/judgments", [&service, send](const httplib::Request &req, httplib::Response &res) {
    send(res, service.post_judgment(req.body));
  });
  http.Options(R"(/.*)", [](const httplib::Request &, httplib::Response &res) { res.status = 204; });
}

JudgmentServer::~JudgmentServer() { stop(); }

int JudgmentServer::bind(const std::string &host, int port) {
  int bound = -1;
  if (port == 0) bound = impl_->http.bind_to_any_port(host.c_str());
  else if (impl_->http.bind_to_port(host.c_str(), port)) bound = port;
  if (bound < 0) throw UsageError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void JudgmentServer::listen() { impl_->http.listen_after_bind(); }

int JudgmentServer::start(const std::string &host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { listen(); });
  impl_->http.wait_until_ready();
  return bound;
}

void JudgmentServer::stop() {
  impl_->http.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace wordorder
