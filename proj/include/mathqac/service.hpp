#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "mathqac/evalharness.hpp"
#include "mathqac/fst_index.hpp"
#include "mathqac/strategies.hpp"

#include "json.hpp"

namespace httplib {
class Server;
}

namespace mathqac {

struct ServiceConfig {
  std::string corpus_path;
  std::string index_path;  // prebuilt FST; takes precedence over corpus
  int port = 8080;
  std::string host = "127.0.0.1";
  std::size_t default_k = mathqac::default_k;
  StrategyKind default_strategy = StrategyKind::prefix;
  int default_max_edits = 1;
  int rel_threshold = 1;
  ApMode ap_mode = ApMode::trec;

  /// Throws invalid_argument on port outside [1, 65535] or default_k == 0.
  void validate() const;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

nlohmann::ordered_json suggestion_list_json(const SuggestionList& list, std::size_t k,
                                            double latency_ms);

/// Answers GET /suggest given its decoded query parameters. Never throws;
/// every error path yields a JSON body.
HttpResponse handle_suggest(const FstIndex& index, const ServiceConfig& config,
                            const std::multimap<std::string, std::string>& params);

/// Read-only HTTP front end over one immutable index.
class SuggestService {
 public:
  SuggestService(std::shared_ptr<const FstIndex> index, ServiceConfig config);
  ~SuggestService();
  SuggestService(const SuggestService&) = delete;
  SuggestService& operator=(const SuggestService&) = delete;

  /// Binds and serves until stop(). Returns false if binding failed.
  bool listen();
  /// Binds to an ephemeral port on config.host; returns it (or -1).
  int bind_any_port();
  /// Serves on a socket already bound by bind_any_port().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  std::shared_ptr<const FstIndex> index_;
  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace mathqac
