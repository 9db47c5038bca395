#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mathqac/corpus.hpp"
#include "mathqac/fst_index.hpp"
#include "mathqac/strategies.hpp"

#include "json.hpp"

namespace mathqac {

struct Topic {
  std::string topic_id;
  std::string latex;
};

std::vector<Topic> load_topics(std::istream& in);
std::vector<Topic> load_topics(const std::filesystem::path& path);

/// Graded judgments; unjudged (topic, formula) pairs are grade 0.
class Qrels {
 public:
  void set(const std::string& topic_id, const std::string& formula_id, int grade);
  int grade(const std::string& topic_id, const std::string& formula_id) const;
  bool has_topic(const std::string& topic_id) const;
  /// Formula ids with grade >= threshold for this topic.
  std::size_t relevant_count(const std::string& topic_id, int threshold) const;

 private:
  std::map<std::string, std::map<std::string, int>> judgments_;
};

/// TREC layout: "<topic_id> <iteration> <formula_id> <grade>" per line.
Qrels load_qrels(std::istream& in);
Qrels load_qrels(const std::filesystem::path& path);

/// Fraction of a topic string typed so far. `label` is what reports print.
struct Ratio {
  double value = 1.0;
  std::string label = "1";

  bool operator==(const Ratio&) const = default;
};

/// Accepts "a/b" or a decimal in (0, 1].
Ratio parse_ratio(std::string_view text);
std::vector<Ratio> default_ratios();

struct PartialQuery {
  std::string topic_id;
  Ratio ratio;
  std::string prefix;
};

/// Length of the partial query for a string of `length` code points:
/// ceil(ratio * length), clamped to [1, length].
std::size_t partial_length(double ratio, std::size_t length);

struct PartialQuerySet {
  std::vector<PartialQuery> queries;
  std::vector<std::string> skipped_topics;  // normalized to empty
};

PartialQuerySet make_partial_queries(const std::vector<Topic>& topics,
                                     const std::vector<Ratio>& ratios);

enum class ApMode { trec, literal };
enum class JudgeMode {
  any_id,     // a suggestion is relevant if any of its formula ids is
  expand_ids  // each formula id is its own ranked row
};

std::optional<ApMode> parse_ap_mode(std::string_view text) noexcept;
std::optional<JudgeMode> parse_judge_mode(std::string_view text) noexcept;

std::vector<bool> judge(const SuggestionList& suggestions, const Qrels& qrels,
                        const std::string& topic_id, int rel_threshold = 1,
                        JudgeMode mode = JudgeMode::any_id);

double reciprocal_rank(const std::vector<bool>& relevance) noexcept;
double average_precision(const std::vector<bool>& relevance,
                         std::size_t total_relevant,
                         ApMode mode = ApMode::trec) noexcept;

struct EvalConfig {
  std::vector<StrategySpec> strategies{StrategySpec{}};
  std::vector<Ratio> ratios = default_ratios();
  std::size_t k = eval_k;
  int rel_threshold = 1;
  ApMode ap_mode = ApMode::trec;
  JudgeMode judge_mode = JudgeMode::any_id;
};

struct EvalRow {
  std::string topic_id;
  Ratio ratio;
  std::string strategy;
  std::string prefix;
  double rr = 0.0;
  double ap = 0.0;
  std::size_t retrieved = 0;
  std::size_t relevant_retrieved = 0;
  bool missing_qrels = false;
};

struct MetricSummary {
  double mrr = 0.0;
  double map = 0.0;
  std::size_t rows = 0;
};

struct StrategyAggregate {
  std::string strategy;
  MetricSummary all;
  MetricSummary answered;  // rows with retrieved > 0
  std::vector<std::pair<std::string, MetricSummary>> per_ratio;
};

struct EvalReport {
  EvalConfig config;
  std::vector<EvalRow> rows;
  std::vector<StrategyAggregate> aggregates;
  std::vector<std::string> skipped_topics;
  std::vector<std::string> missing_qrels_topics;

  nlohmann::ordered_json to_json() const;
  std::string to_text() const;
  std::string to_csv() const;
};

/// Mean of rr and ap over `rows`; zeros when empty.
MetricSummary summarize(const std::vector<const EvalRow*>& rows);

EvalReport evaluate(const FstIndex& index, const std::vector<Topic>& topics,
                    const Qrels& qrels, const EvalConfig& config);

std::string strategy_label(const StrategySpec& spec);

// --- benchmarking -----------------------------------------------------------

enum class Structure { trie, fst };
std::string_view structure_name(Structure s) noexcept;
std::optional<Structure> parse_structure(std::string_view text) noexcept;

struct BenchReport {
  std::string structure;
  double build_ms = 0.0;       // median of build_runs
  double mean_query_ms = 0.0;
  double p95_query_ms = 0.0;
  std::size_t query_samples = 0;
  std::size_t index_bytes = 0;     // serialized size
  std::size_t estimated_bytes = 0; // analytic in-memory estimate
  std::size_t node_or_state_count = 0;
  std::size_t key_count = 0;
};

struct BenchConfig {
  std::vector<Structure> structures{Structure::trie, Structure::fst};
  std::size_t build_runs = 3;
  std::size_t min_query_samples = 1000;
  std::size_t k = default_k;
};

/// Times builds and top-k prefix queries; the workload is cycled until at
/// least min_query_samples queries ran.
std::vector<BenchReport> bench(const Corpus& corpus,
                               const std::vector<std::string>& workload,
                               const BenchConfig& config = {});

nlohmann::ordered_json bench_to_json(const std::vector<BenchReport>& reports);
std::string bench_to_text(const std::vector<BenchReport>& reports);

}  // namespace mathqac
