#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "mathqac/cli.hpp"
#include "testing.hpp"

namespace mathqac {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("mathqac_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path dir;
  std::string quadratic = testing::data_path("quadratic_corpus.tsv");
  std::string eval10 = testing::data_path("eval10");
};

TEST_F(Cli, BuildIsByteIdentical) {
  const auto a = dir / "a.mqf", b = dir / "b.mqf";
  const auto ra = run({"build", "--corpus", quadratic, "--out", a.string()});
  const auto rb = run({"build", "--corpus", quadratic, "--out", b.string()});
  ASSERT_EQ(ra.code, cli::exit_ok) << ra.err;
  ASSERT_EQ(rb.code, cli::exit_ok) << rb.err;
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NE(ra.out.find("key_count=4"), std::string::npos) << ra.out;
  EXPECT_NE(ra.out.find("records=5"), std::string::npos);
}

TEST_F(Cli, BuildTrieReportsNodes) {
  const auto r = run({"build", "--corpus", quadratic, "--structure", "trie"});
  ASSERT_EQ(r.code, cli::exit_ok) << r.err;
  EXPECT_NE(r.out.find("structure=trie"), std::string::npos);
  EXPECT_NE(r.out.find("node_count="), std::string::npos);
}

TEST_F(Cli, BuildErrors) {
  const auto empty = dir / "empty.tsv";
  std::ofstream(empty).close();
  EXPECT_EQ(run({"build", "--corpus", empty.string(), "--out", (dir / "x").string()}).code,
            cli::exit_data_error);
  EXPECT_EQ(run({"build", "--corpus", (dir / "missing.tsv").string(), "--out", (dir / "x").string()}).code,
            cli::exit_data_error);
  EXPECT_EQ(run({"build"}).code, cli::exit_usage_error);
  EXPECT_EQ(run({"build", "--corpus", quadratic, "--structure", "btree"}).code, cli::exit_usage_error);
  EXPECT_EQ(run({"frobnicate"}).code, cli::exit_usage_error);
  EXPECT_EQ(run({}).code, cli::exit_usage_error);
  EXPECT_EQ(run({"--help"}).code, cli::exit_ok);
}

TEST_F(Cli, SuggestLines) {
  const auto r = run({"suggest", "--corpus", quadratic, "--query", "ax^{", "-k", "10"});
  ASSERT_EQ(r.code, cli::exit_ok) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], "1\tax^{2}+bx+c=0\t2\tMonic_polynomial:1,Periodic_points_of_complex_quadratic_mappings:38");
  EXPECT_EQ(ls[3], "4\tax^{n}=q\t1\tIndian_mathematics:38");
  const auto trie = run({"suggest", "--corpus", quadratic, "--query", "ax^{", "--backend", "trie"});
  EXPECT_EQ(trie.out, r.out);
}

TEST_F(Cli, SuggestFromPrebuiltIndex) {
  const auto idx = dir / "f1.mqf";
  ASSERT_EQ(run({"build", "--corpus", quadratic, "--out", idx.string()}).code, cli::exit_ok);
  const auto a = run({"suggest", "--index", idx.string(), "-q", "bx+c", "--strategy", "pam"});
  const auto b = run({"suggest", "--corpus", quadratic, "-q", "bx+c", "--strategy", "pam"});
  ASSERT_EQ(a.code, cli::exit_ok) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(lines(a.out).size(), 1u);
}

TEST_F(Cli, SuggestFuzzyAndJson) {
  const auto r = run({"suggest", "--corpus", quadratic, "-q", "ax^2}+bx=c", "--strategy", "fuzzy", "--max-edits", "1"});
  ASSERT_EQ(r.code, cli::exit_ok) << r.err;
  EXPECT_EQ(r.out, "1\tax^{2}+bx=c\t1\tIndian_mathematics:21\t1\n");
  const auto j = run({"suggest", "--corpus", quadratic, "-q", "ax^{", "--json"});
  ASSERT_EQ(j.code, cli::exit_ok);
  const auto doc = nlohmann::json::parse(j.out);
  EXPECT_EQ(doc["suggestions"].size(), 4u);
  EXPECT_EQ(doc["suggestions"][0]["score"], 2);
}

TEST_F(Cli, SuggestUsageErrors) {
  EXPECT_EQ(run({"suggest", "--corpus", quadratic, "--query", ""}).code, cli::exit_usage_error);
  EXPECT_EQ(run({"suggest", "--corpus", quadratic, "--query", "a", "--strategy", "x"}).code, cli::exit_usage_error);
  EXPECT_EQ(run({"suggest", "--corpus", quadratic, "--query", "a", "--max-edits", "3", "--strategy", "fuzzy"}).code,
            cli::exit_usage_error);
  EXPECT_EQ(run({"suggest", "--corpus", quadratic, "--query", "a", "-k", "0"}).code, cli::exit_usage_error);
  EXPECT_EQ(run({"suggest", "--query", "a"}).code, cli::exit_usage_error);
  EXPECT_EQ(run({"suggest", "--corpus", quadratic, "--query", "a", "--backend", "trie", "--strategy", "pam"}).code,
            cli::exit_usage_error);
}

TEST_F(Cli, EvalIsDeterministic) {
  const auto a = dir / "a.json", b = dir / "b.json";
  std::vector<std::string> base = {"eval", "--corpus", eval10 + "/corpus.tsv", "--topics", eval10 + "/topics.tsv",
                                   "--qrels", eval10 + "/qrels.txt", "--strategies", "prm,pam,em,fuzzy"};
  auto args_a = base, args_b = base;
  args_a.insert(args_a.end(), {"--out-json", a.string(), "--out-csv", (dir / "rows.csv").string(),
                               "--out-text", (dir / "table.txt").string()});
  args_b.insert(args_b.end(), {"--out-json", b.string()});
  const auto ra = run(args_a);
  const auto rb = run(args_b);
  ASSERT_EQ(ra.code, cli::exit_ok) << ra.err;
  ASSERT_EQ(rb.code, cli::exit_ok) << rb.err;
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(dir / "rows.csv").empty());
  EXPECT_FALSE(slurp(dir / "table.txt").empty());
  EXPECT_NE(ra.out.find("prm\tMRR="), std::string::npos);
  EXPECT_NE(ra.out.find("warning: no qrels for topic T10"), std::string::npos);
}

TEST_F(Cli, EvalRatioCardinality) {
  const auto out = dir / "r.json";
  const auto r = run({"eval", "--corpus", eval10 + "/corpus.tsv", "--topics", eval10 + "/topics.tsv", "--qrels",
                      eval10 + "/qrels.txt", "--ratios", "1.0", "--out-json", out.string()});
  ASSERT_EQ(r.code, cli::exit_ok) << r.err;
  const auto doc = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(doc["rows"].size(), 10u);
  EXPECT_EQ(doc["aggregates"]["prm"]["per_ratio"].size(), 1u);
}

TEST_F(Cli, LiteralApChangesOnlyAp) {
  const auto t = dir / "t.json", l = dir / "l.json";
  std::vector<std::string> base = {"eval", "--corpus", eval10 + "/corpus.tsv", "--topics", eval10 + "/topics.tsv",
                                   "--qrels", eval10 + "/qrels.txt"};
  auto at = base, al = base;
  at.insert(at.end(), {"--out-json", t.string()});
  al.insert(al.end(), {"--ap-mode", "literal", "--out-json", l.string()});
  ASSERT_EQ(run(at).code, cli::exit_ok);
  ASSERT_EQ(run(al).code, cli::exit_ok);
  const auto jt = nlohmann::json::parse(slurp(t));
  const auto jl = nlohmann::json::parse(slurp(l));
  ASSERT_EQ(jt["rows"].size(), jl["rows"].size());
  bool some_ap_differs = false;
  for (std::size_t i = 0; i < jt["rows"].size(); ++i) {
    auto rt = jt["rows"][i], rl = jl["rows"][i];
    EXPECT_EQ(rt["rr"], rl["rr"]);
    EXPECT_LE(rt["ap"].get<double>(), rl["ap"].get<double>() + 1e-15);
    some_ap_differs |= rt["ap"] != rl["ap"];
    rt.erase("ap");
    rl.erase("ap");
    EXPECT_EQ(rt, rl);
  }
  EXPECT_TRUE(some_ap_differs);
  EXPECT_EQ(jt["aggregates"]["prm"]["all"]["mrr"], jl["aggregates"]["prm"]["all"]["mrr"]);
}

TEST_F(Cli, EvalErrors) {
  EXPECT_EQ(run({"eval", "--corpus", quadratic}).code, cli::exit_usage_error);
  EXPECT_EQ(run({"eval", "--corpus", quadratic, "--topics", eval10 + "/topics.tsv", "--qrels", eval10 + "/qrels.txt",
                 "--ratios", "0"})
                .code,
            cli::exit_usage_error);
  EXPECT_EQ(run({"eval", "--corpus", quadratic, "--topics", (dir / "nope").string(), "--qrels",
                 eval10 + "/qrels.txt"})
                .code,
            cli::exit_data_error);
  EXPECT_EQ(run({"eval", "--corpus", quadratic, "--topics", eval10 + "/topics.tsv", "--qrels",
                 eval10 + "/corpus.tsv"})
                .code,
            cli::exit_data_error);
}

TEST_F(Cli, BenchSynthetic) {
  const auto out = dir / "bench.json";
  const auto r = run({"bench", "--synthetic", "500", "--queries", "200", "--runs", "1", "--out-json", out.string()});
  ASSERT_EQ(r.code, cli::exit_ok) << r.err;
  const auto doc = nlohmann::json::parse(slurp(out));
  ASSERT_EQ(doc.size(), 2u);
  EXPECT_EQ(doc[0]["structure"], "trie");
  EXPECT_EQ(doc[1]["structure"], "fst");
  EXPECT_NE(r.out.find("index_MB"), std::string::npos);
}

}  // namespace
}  // namespace mathqac
