#include "mathqac/service.hpp"

#include <charconv>
#include <chrono>

#include "httplib.h"

#include "mathqac/error.hpp"

namespace mathqac {

namespace {

constexpr std::size_t max_k = 10000;

HttpResponse error_response(int status, std::string_view message) {
  return {status, "application/json", nlohmann::ordered_json{{"error", message}}.dump()};
}

std::optional<long long> to_int(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

const std::string* param(const std::multimap<std::string, std::string>& params,
                         const std::string& name) {
  auto it = params.find(name);
  return it == params.end() ? nullptr : &it->second;
}

}  // namespace

void ServiceConfig::validate() const {
  if (port < 1 || port > 65535) throw Error(ErrorCode::invalid_argument, "port must be in [1, 65535]");
  if (default_k == 0) throw Error(ErrorCode::invalid_argument, "default k must be >= 1");
  if (default_max_edits < 0 || default_max_edits > FstIndex::max_fuzzy_edits) {
    throw Error(ErrorCode::invalid_argument, "default max_edits must be in [0, 2]");
  }
  if (rel_threshold < 1) throw Error(ErrorCode::invalid_argument, "rel_threshold must be >= 1");
}

nlohmann::ordered_json suggestion_list_json(const SuggestionList& list, std::size_t k,
                                            double latency_ms) {
  nlohmann::ordered_json j;
  j["query"] = list.query;
  j["normalized"] = list.normalized_query;
  j["strategy"] = strategy_name(list.strategy.kind);
  j["k"] = k;
  j["latency_ms"] = latency_ms;
  auto& items = j["suggestions"];
  items = nlohmann::ordered_json::array();
  for (const auto& s : list.items) {
    items.push_back({{"completion", s.completion},
                     {"score", s.score},
                     {"formula_ids", s.formula_ids},
                     {"distance", s.distance ? nlohmann::ordered_json(*s.distance) : nullptr},
                     {"latex", s.latex}});
  }
  return j;
}

HttpResponse handle_suggest(const FstIndex& index, const ServiceConfig& config,
                            const std::multimap<std::string, std::string>& params) {
  const auto* q = param(params, "q");
  if (q == nullptr || q->empty()) return error_response(400, "invalid query");

  StrategySpec spec{config.default_strategy, config.default_max_edits};
  if (const auto* s = param(params, "strategy")) {
    const auto kind = parse_strategy(*s);
    if (!kind) return error_response(400, "unknown strategy");
    spec.kind = *kind;
  }
  std::size_t k = config.default_k;
  if (const auto* ks = param(params, "k")) {
    const auto v = to_int(*ks);
    if (!v || *v < 1 || static_cast<std::size_t>(*v) > max_k) return error_response(400, "invalid k");
    k = static_cast<std::size_t>(*v);
  }
  if (const auto* e = param(params, "max_edits")) {
    const auto v = to_int(*e);
    if (!v || *v < 0 || *v > FstIndex::max_fuzzy_edits) return error_response(400, "invalid max_edits");
    spec.max_edits = static_cast<int>(*v);
  }

  try {
    const auto start = std::chrono::steady_clock::now();
    const auto list = suggest(index, spec, *q, k);
    const double latency =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return {200, "application/json", suggestion_list_json(list, k, latency).dump()};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_query) return error_response(400, "invalid query");
    if (e.code() == ErrorCode::invalid_argument) return error_response(400, "invalid argument");
    return error_response(500, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

SuggestService::SuggestService(std::shared_ptr<const FstIndex> index, ServiceConfig config)
    : index_(std::move(index)), config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  config_.validate();
  install_routes();
}

SuggestService::~SuggestService() { stop(); }

void SuggestService::install_routes() {
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, OPTIONS"}});

  server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  server_->Get("/suggest", [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = handle_suggest(*index_, config_, req.params);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  });

  server_->Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  // Runs for every status >= 400; keep bodies that handlers already set.
  server_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const auto message = res.status == 404 ? "not found" : "request failed";
    res.set_content(nlohmann::ordered_json{{"error", message}}.dump(), "application/json");
  });

  server_->set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        res.status = 500;
        res.set_content(R"({"error":"internal error"})", "application/json");
      });
}

bool SuggestService::listen() { return server_->listen(config_.host, config_.port); }

int SuggestService::bind_any_port() { return server_->bind_to_any_port(config_.host); }

bool SuggestService::listen_after_bind() { return server_->listen_after_bind(); }

void SuggestService::stop() {
  if (server_) server_->stop();
}

void SuggestService::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace mathqac
