// HTTP endpoint for the judgment task: GET /items, POST /judgments,
// GET /health. JSON bodies carry `schema: 1`.

#ifndef WORDORDER_SERVER_H_
#define WORDORDER_SERVER_H_

#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "wordorder/judgments.h"

namespace wordorder {

struct HttpReply {
  int status = 200;
  std::string body;
};

// Request handling, independent of the transport.
class JudgmentService {
 public:
  JudgmentService(std::vector<JudgmentItem> items, JudgmentStore &store, std::uint64_t order_seed);

  // The next unanswered item for `rater` in that rater's own item order, or
  // an empty `items` array once everything is answered.
  HttpReply get_items(const std::string &rater) const;
  // 201 on success, 400 with field errors, 409 on a repeated (item, rater).
  HttpReply post_judgment(const std::string &body);
  HttpReply health() const;

  // Presentation order for a rater, derived from the order seed and rater id.
  std::vector<std::size_t> order_for(const std::string &rater) const;
  const std::vector<JudgmentItem> &items() const { return items_; }

 private:
  std::vector<JudgmentItem> items_;
  std::map<std::string, std::size_t> index_;
  JudgmentStore &store_;
  std::uint64_t order_seed_;
};

class JudgmentServer {
 public:
  explicit JudgmentServer(JudgmentService &service);
  ~JudgmentServer();
  JudgmentServer(const JudgmentServer &) = delete;
  JudgmentServer &operator=(const JudgmentServer &) = delete;

  // Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string &host, int port);
  // Serves until stop(); call after bind().
  void listen();
  // bind() + listen() on a background thread.
  int start(const std::string &host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace wordorder

#endif  // WORDORDER_SERVER_H_
