#include <atomic>
#include <memory>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"
#include "json.hpp"
#include "mathqac/error.hpp"
#include "mathqac/service.hpp"
#include "testing.hpp"

namespace mathqac {
namespace {

using Params = std::multimap<std::string, std::string>;

class HandleSuggest : public ::testing::Test {
 protected:
  FstIndex fst{testing::quadratic_corpus()};
  ServiceConfig config;

  nlohmann::json ok(const Params& params) {
    const auto res = handle_suggest(fst, config, params);
    EXPECT_EQ(res.status, 200) << res.body;
    EXPECT_EQ(res.content_type, "application/json");
    return nlohmann::json::parse(res.body);
  }

  std::string error(const Params& params) {
    const auto res = handle_suggest(fst, config, params);
    EXPECT_EQ(res.status, 400);
    return nlohmann::json::parse(res.body).at("error");
  }
};

TEST_F(HandleSuggest, QuadraticPrefix) {
  const auto j = ok({{"q", "ax^{"}, {"strategy", "prm"}, {"k", "10"}});
  ASSERT_EQ(j["suggestions"].size(), 4u);
  EXPECT_EQ(j["suggestions"][0]["score"], 2);
  EXPECT_EQ(j["suggestions"][0]["completion"], "ax^{2}+bx+c=0");
  EXPECT_EQ(j["suggestions"][0]["formula_ids"].size(), 2u);
  EXPECT_TRUE(j["suggestions"][0]["distance"].is_null());
  EXPECT_EQ(j["query"], "ax^{");
  EXPECT_EQ(j["normalized"], "ax^{");
  EXPECT_EQ(j["strategy"], "prm");
  EXPECT_EQ(j["k"], 10);
  EXPECT_GE(j["latency_ms"].get<double>(), 0.0);
}

TEST_F(HandleSuggest, DefaultsAndStrategies) {
  EXPECT_EQ(ok({{"q", "ax^{"}})["strategy"], "prm");
  EXPECT_EQ(ok({{"q", "ax^{"}, {"k", "1"}})["suggestions"].size(), 1u);
  EXPECT_EQ(ok({{"q", "bx+c"}, {"strategy", "pam"}})["suggestions"].size(), 1u);
  EXPECT_EQ(ok({{"q", "Ax^{n}=Q"}, {"strategy", "em"}})["suggestions"].size(), 1u);
  const auto fuzzy = ok({{"q", "ax^2}+bx=c"}, {"strategy", "fuzzy"}});
  ASSERT_EQ(fuzzy["suggestions"].size(), 1u);
  EXPECT_EQ(fuzzy["suggestions"][0]["distance"], 1);
  EXPECT_TRUE(ok({{"q", "ax^2}+bx=c"}, {"strategy", "fuzzy"}, {"max_edits", "0"}})["suggestions"].empty());
  EXPECT_TRUE(ok({{"q", "zzz"}})["suggestions"].empty());
}

TEST_F(HandleSuggest, BadRequests) {
  EXPECT_EQ(error({}), "invalid query");
  EXPECT_EQ(error({{"q", ""}}), "invalid query");
  EXPECT_EQ(error({{"q", "   "}}), "invalid query");
  EXPECT_EQ(error({{"q", "a\xff"}}), "invalid query");
  EXPECT_EQ(error({{"q", "a"}, {"strategy", "nope"}}), "unknown strategy");
  EXPECT_EQ(error({{"q", "a"}, {"k", "0"}}), "invalid k");
  EXPECT_EQ(error({{"q", "a"}, {"k", "-3"}}), "invalid k");
  EXPECT_EQ(error({{"q", "a"}, {"k", "ten"}}), "invalid k");
  EXPECT_EQ(error({{"q", "a"}, {"k", "10001"}}), "invalid k");
  EXPECT_EQ(error({{"q", "a"}, {"strategy", "fuzzy"}, {"max_edits", "3"}}), "invalid max_edits");
}

TEST(ServiceConfig, Validation) {
  ServiceConfig c;
  EXPECT_NO_THROW(c.validate());
  c.port = 0;
  EXPECT_THROW(c.validate(), Error);
  c.port = 65536;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.default_k = 0;
  EXPECT_THROW(c.validate(), Error);
}

class LiveService : public ::testing::Test {
 protected:
  void SetUp() override {
    index = std::make_shared<const FstIndex>(testing::quadratic_corpus());
    service = std::make_unique<SuggestService>(index, ServiceConfig{});
    port = service->bind_any_port();
    ASSERT_GT(port, 0);
    thread = std::thread([this] { service->listen_after_bind(); });
    service->wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  void TearDown() override {
    service->stop();
    if (thread.joinable()) thread.join();
  }

  std::shared_ptr<const FstIndex> index;
  std::unique_ptr<SuggestService> service;
  std::unique_ptr<httplib::Client> client;
  std::thread thread;
  int port = -1;
};

TEST_F(LiveService, Health) {
  const auto res = client->Get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "ok");
}

TEST_F(LiveService, SuggestMatchesInProcessHandler) {
  const auto res = client->Get("/suggest?q=ax%5E%7B&strategy=prm&k=10");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
  auto j = nlohmann::json::parse(res->body);
  ASSERT_EQ(j["suggestions"].size(), 4u);
  EXPECT_EQ(j["suggestions"][0]["score"], 2);
  auto direct = nlohmann::json::parse(
      handle_suggest(*index, ServiceConfig{}, {{"q", "ax^{"}, {"strategy", "prm"}, {"k", "10"}}).body);
  j.erase("latency_ms");
  direct.erase("latency_ms");
  EXPECT_EQ(j, direct);
}

TEST_F(LiveService, ErrorsAreJson) {
  auto res = client->Get("/suggest?q=");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(nlohmann::json::parse(res->body)["error"], "invalid query");
  res = client->Get("/suggest?q=a&strategy=xyz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(nlohmann::json::parse(res->body)["error"], "unknown strategy");
  res = client->Get("/nowhere");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(nlohmann::json::parse(res->body)["error"], "not found");
}

TEST_F(LiveService, Preflight) {
  const auto res = client->Options("/suggest");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(LiveService, ConcurrentReaders) {
  std::vector<std::thread> workers;
  std::atomic<int> good{0};
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&] {
      httplib::Client c("127.0.0.1", port);
      for (int i = 0; i < 20; ++i) {
        const auto res = c.Get("/suggest?q=ax");
        if (res && res->status == 200 && nlohmann::json::parse(res->body)["suggestions"].size() == 4) ++good;
      }
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(good.load(), 80);
}

}  // namespace
}  // namespace mathqac
