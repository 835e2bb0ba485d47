#include <set>

#include "doctest.h"
#include "httplib.h"
#include "test_support.h"
#include "wordorder/server.h"

using namespace wordorder;
using namespace wordorder::testing;
using nlohmann::ordered_json;

namespace {

std::vector<JudgmentItem> five_items() {
  std::vector<PairCandidate> pool;
  for (int i = 0; i < 5; ++i) {
    const std::string ref = "s" + std::to_string(i);
    pool.push_back({ref, ref + ".v1", "ctx " + ref, "ref " + ref, "var " + ref,
                    {OrderType::kOsvDoFronted, OrderType::kSov}});
  }
  return export_judgment_items(pool, 5, 4);
}

std::filesystem::path fresh_log(const std::string &name) {
  const auto p = scratch_dir("server") / (name + ".jsonl");
  std::filesystem::remove(p);
  return p;
}

ordered_json body_of(const httplib::Result &res) {
  REQUIRE(res);
  return ordered_json::parse(res->body);
}

std::string judgment(const std::string &item, const std::string &rater, const std::string &choice) {
  return ordered_json{{"schema", 1}, {"item_id", item}, {"rater_id", rater}, {"chosen_option", choice},
                      {"response_ms", 800}}
      .dump();
}

}  // namespace

TEST_CASE("service without a transport") {
  JudgmentStore store(fresh_log("service"));
  JudgmentService service(five_items(), store, 21);
  CHECK(service.order_for("alice") == service.order_for("alice"));
  const auto order = service.order_for("alice");
  const std::set<std::size_t> perm(order.begin(), order.end());
  CHECK(perm.size() == 5);
  CHECK(service.get_items("").status == 400);
  CHECK(service.post_judgment("{not json").status == 400);
  const auto unknown = service.post_judgment(judgment("item-0099", "alice", "A"));
  CHECK(unknown.status == 400);
  CHECK(ordered_json::parse(unknown.body)["errors"][0]["field"] == "item_id");
  const auto h = ordered_json::parse(service.health().body);
  CHECK(h["status"] == "ok");
  CHECK(h["items"] == 5);
}

TEST_CASE("HTTP round trip") {
  const auto log = fresh_log("http");
  JudgmentStore store(log);
  JudgmentService service(five_items(), store, 21);
  JudgmentServer server(service);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);

  const auto health = body_of(client.Get("/health"));
  CHECK(health["schema"] == 1);
  CHECK(health["status"] == "ok");

  std::vector<std::string> seen;
  for (int round = 0; round < 5; ++round) {
    const auto res = client.Get("/items?rater=alice");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto page = ordered_json::parse(res->body);
    CHECK(page["schema"] == 1);
    CHECK(page["answered"] == round);
    REQUIRE(page["items"].size() == 1);
    const auto &item = page["items"][0];
    std::set<std::string> keys;
    for (const auto &[k, v] : item.items()) keys.insert(k);
    CHECK(keys == std::set<std::string>{"schema", "item_id", "context_text", "option_a_text", "option_b_text"});
    CHECK(res->body.find("hidden_mapping") == std::string::npos);
    CHECK(res->body.find(".v1") == std::string::npos);
    const std::string id = item["item_id"];
    seen.push_back(id);
    const auto post = client.Post("/judgments", judgment(id, "alice", round % 2 ? "A" : "B"), "application/json");
    REQUIRE(post);
    CHECK(post->status == 201);
    CHECK(ordered_json::parse(post->body)["status"] == "accepted");
  }
  // presentation order follows the rater's permutation
  std::vector<std::string> expected;
  for (std::size_t i : service.order_for("alice")) expected.push_back(service.items()[i].item_id);
  CHECK(seen == expected);

  const auto done = body_of(client.Get("/items?rater=alice"));
  CHECK(done["items"].empty());
  CHECK(done["answered"] == 5);
  CHECK(store.size() == 5);

  const auto dup = client.Post("/judgments", judgment(seen[0], "alice", "A"), "application/json");
  REQUIRE(dup);
  CHECK(dup->status == 409);
  CHECK(store.size() == 5);

  const auto bad = client.Post("/judgments", R"({"schema":1,"item_id":"item-0001","rater_id":"bob","chosen_option":"X"})",
                               "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  const auto errs = ordered_json::parse(bad->body);
  CHECK(errs["schema"] == 1);
  CHECK(errs["errors"][0]["field"] == "chosen_option");

  const auto other = body_of(client.Get("/items?rater=bob"));
  CHECK(other["items"].size() == 1);
  CHECK(other["answered"] == 0);
  server.stop();

  // log on disk has exactly the accepted judgments, with server timestamps
  std::ifstream in(log);
  const auto records = read_judgment_log(in);
  REQUIRE(records.size() == 5);
  for (const auto &r : records) {
    CHECK(r.rater_id == "alice");
    CHECK(r.timestamp.size() == 24);
    CHECK(r.timestamp.back() == 'Z');
    CHECK(r.response_ms == 800);
  }
}
