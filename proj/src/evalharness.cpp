#include "mathqac/evalharness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <set>
#include <sstream>
#include <type_traits>

#include "mathqac/error.hpp"
#include "mathqac/trie_index.hpp"
#include "mathqac/utf8.hpp"

namespace mathqac {

namespace {

std::string_view trim(std::string_view s) noexcept {
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; };
  while (!s.empty() && space(s.front())) s.remove_prefix(1);
  while (!s.empty() && space(s.back())) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_line(std::string_view what, std::size_t line) {
  throw Error(ErrorCode::format_error, std::string(what) + " at line " + std::to_string(line));
}

std::ifstream open_input(const std::filesystem::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io_error, "cannot open " + std::string(what) + " file: " + path.string());
  }
  return in;
}

std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::ordered_json summary_json(const MetricSummary& s) {
  return {{"mrr", s.mrr}, {"map", s.map}, {"rows", s.rows}};
}

}  // namespace

// --- inputs ------------------------------------------------------------------

std::vector<Topic> load_topics(std::istream& in) {
  std::vector<Topic> topics;
  std::set<std::string> ids;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (trim(view).empty()) continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos) bad_line("topic line without tab", number);
    Topic t{std::string(trim(view.substr(0, tab))), std::string(view.substr(tab + 1))};
    if (t.topic_id.empty() || trim(t.latex).empty()) bad_line("empty topic id or formula", number);
    if (!ids.insert(t.topic_id).second) bad_line("duplicate topic id " + t.topic_id, number);
    topics.push_back(std::move(t));
  }
  if (in.bad()) throw Error(ErrorCode::io_error, "failed reading topics");
  return topics;
}

std::vector<Topic> load_topics(const std::filesystem::path& path) {
  auto in = open_input(path, "topics");
  return load_topics(in);
}

void Qrels::set(const std::string& topic_id, const std::string& formula_id, int grade) {
  auto& g = judgments_[topic_id][formula_id];
  g = std::max(g, grade);
}

int Qrels::grade(const std::string& topic_id, const std::string& formula_id) const {
  auto t = judgments_.find(topic_id);
  if (t == judgments_.end()) return 0;
  auto f = t->second.find(formula_id);
  return f == t->second.end() ? 0 : f->second;
}

bool Qrels::has_topic(const std::string& topic_id) const {
  return judgments_.contains(topic_id);
}

std::size_t Qrels::relevant_count(const std::string& topic_id, int threshold) const {
  auto t = judgments_.find(topic_id);
  if (t == judgments_.end()) return 0;
  return static_cast<std::size_t>(std::count_if(
      t->second.begin(), t->second.end(), [&](const auto& kv) { return kv.second >= threshold; }));
}

Qrels load_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream fields(line);
    std::vector<std::string> parts;
    for (std::string f; fields >> f;) parts.push_back(std::move(f));
    if (parts.empty()) continue;
    if (parts.size() != 4) bad_line("qrels line needs 4 fields", number);
    const auto grade = parse_int(parts[3]);
    if (!grade || *grade < 0 || *grade > 1000) bad_line("invalid relevance grade", number);
    qrels.set(parts[0], parts[2], static_cast<int>(*grade));
  }
  if (in.bad()) throw Error(ErrorCode::io_error, "failed reading qrels");
  return qrels;
}

Qrels load_qrels(const std::filesystem::path& path) {
  auto in = open_input(path, "qrels");
  return load_qrels(in);
}

// --- partial queries ---------------------------------------------------------

Ratio parse_ratio(std::string_view text) {
  const auto t = trim(text);
  const auto invalid = [&] {
    return Error(ErrorCode::invalid_argument, "invalid ratio: " + std::string(text));
  };
  double value = 0.0;
  if (const auto slash = t.find('/'); slash != std::string_view::npos) {
    const auto num = parse_int(t.substr(0, slash));
    const auto den = parse_int(t.substr(slash + 1));
    if (!num || !den || *den <= 0) throw invalid();
    value = static_cast<double>(*num) / static_cast<double>(*den);
  } else {
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size()) throw invalid();
  }
  if (!(value > 0.0 && value <= 1.0)) throw invalid();
  return Ratio{value, std::string(t)};
}

std::vector<Ratio> default_ratios() {
  return {parse_ratio("1/3"), parse_ratio("1/2"), parse_ratio("1")};
}

std::size_t partial_length(double ratio, std::size_t length) {
  if (length == 0) return 0;
  // The epsilon absorbs binary rounding (1/3 * 12 must give 4, not 5).
  const auto n = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(length) - 1e-9));
  return std::clamp<std::size_t>(n, 1, length);
}

PartialQuerySet make_partial_queries(const std::vector<Topic>& topics,
                                     const std::vector<Ratio>& ratios) {
  if (topics.empty()) throw Error(ErrorCode::invalid_argument, "no topics");
  if (ratios.empty()) throw Error(ErrorCode::invalid_argument, "no ratios");
  PartialQuerySet out;
  for (const auto& topic : topics) {
    std::string normalized;
    if (utf8::try_decode(topic.latex)) normalized = normalize(topic.latex);
    if (normalized.empty()) {
      out.skipped_topics.push_back(topic.topic_id);
      continue;
    }
    const auto length = utf8::length(normalized);
    for (const auto& ratio : ratios) {
      out.queries.push_back(
          {topic.topic_id, ratio, utf8::take(normalized, partial_length(ratio.value, length))});
    }
  }
  return out;
}

// --- metrics -----------------------------------------------------------------

std::optional<ApMode> parse_ap_mode(std::string_view text) noexcept {
  if (text == "trec") return ApMode::trec;
  if (text == "literal") return ApMode::literal;
  return std::nullopt;
}

std::optional<JudgeMode> parse_judge_mode(std::string_view text) noexcept {
  if (text == "any") return JudgeMode::any_id;
  if (text == "expand") return JudgeMode::expand_ids;
  return std::nullopt;
}

std::vector<bool> judge(const SuggestionList& suggestions, const Qrels& qrels,
                        const std::string& topic_id, int rel_threshold, JudgeMode mode) {
  std::vector<bool> relevance;
  relevance.reserve(suggestions.items.size());
  for (const auto& s : suggestions.items) {
    if (mode == JudgeMode::any_id) {
      relevance.push_back(std::any_of(s.formula_ids.begin(), s.formula_ids.end(), [&](const auto& id) {
        return qrels.grade(topic_id, id) >= rel_threshold;
      }));
    } else {
      for (const auto& id : s.formula_ids) {
        relevance.push_back(qrels.grade(topic_id, id) >= rel_threshold);
      }
    }
  }
  return relevance;
}

double reciprocal_rank(const std::vector<bool>& relevance) noexcept {
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    if (relevance[i]) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double average_precision(const std::vector<bool>& relevance, std::size_t total_relevant,
                         ApMode mode) noexcept {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    if (!relevance[i]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  const std::size_t denominator = mode == ApMode::trec ? total_relevant : hits;
  if (denominator == 0) return 0.0;
  return sum / static_cast<double>(denominator);
}

MetricSummary summarize(const std::vector<const EvalRow*>& rows) {
  MetricSummary s;
  s.rows = rows.size();
  if (rows.empty()) return s;
  double rr = 0.0, ap = 0.0;
  for (const auto* r : rows) {
    rr += r->rr;
    ap += r->ap;
  }
  s.mrr = rr / static_cast<double>(rows.size());
  s.map = ap / static_cast<double>(rows.size());
  return s;
}

std::string strategy_label(const StrategySpec& spec) {
  std::string label(strategy_name(spec.kind));
  if (spec.kind == StrategyKind::fuzzy) label += "-" + std::to_string(spec.max_edits);
  if (spec.kind == StrategyKind::pattern &&
      spec.tokenization == PatternTokenization::control_sequences) {
    label += "-cs";
  }
  return label;
}

EvalReport evaluate(const FstIndex& index, const std::vector<Topic>& topics, const Qrels& qrels,
                    const EvalConfig& config) {
  if (config.strategies.empty()) throw Error(ErrorCode::invalid_argument, "no strategies");
  if (config.k == 0) throw Error(ErrorCode::invalid_argument, "k must be positive");
  if (config.rel_threshold < 1) throw Error(ErrorCode::invalid_argument, "rel_threshold must be >= 1");

  EvalReport report;
  report.config = config;
  const auto partials = make_partial_queries(topics, config.ratios);
  report.skipped_topics = partials.skipped_topics;
  for (const auto& t : topics) {
    if (!qrels.has_topic(t.topic_id)) report.missing_qrels_topics.push_back(t.topic_id);
  }

  for (const auto& pq : partials.queries) {
    const auto total_relevant = qrels.relevant_count(pq.topic_id, config.rel_threshold);
    for (const auto& spec : config.strategies) {
      EvalRow row;
      row.topic_id = pq.topic_id;
      row.ratio = pq.ratio;
      row.strategy = strategy_label(spec);
      row.prefix = pq.prefix;
      row.missing_qrels = !qrels.has_topic(pq.topic_id);
      std::vector<bool> relevance;
      try {
        const auto list = suggest(index, spec, pq.prefix, config.k);
        relevance = judge(list, qrels, pq.topic_id, config.rel_threshold, config.judge_mode);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::invalid_query) throw;
      }
      row.retrieved = relevance.size();
      row.relevant_retrieved = static_cast<std::size_t>(std::count(relevance.begin(), relevance.end(), true));
      row.rr = reciprocal_rank(relevance);
      row.ap = average_precision(relevance, total_relevant, config.ap_mode);
      report.rows.push_back(std::move(row));
    }
  }

  for (const auto& spec : config.strategies) {
    StrategyAggregate agg;
    agg.strategy = strategy_label(spec);
    std::vector<const EvalRow*> all, answered;
    for (const auto& r : report.rows) {
      if (r.strategy != agg.strategy) continue;
      all.push_back(&r);
      if (r.retrieved > 0) answered.push_back(&r);
    }
    agg.all = summarize(all);
    agg.answered = summarize(answered);
    for (const auto& ratio : config.ratios) {
      std::vector<const EvalRow*> subset;
      for (const auto* r : all) {
        if (r->ratio == ratio) subset.push_back(r);
      }
      agg.per_ratio.emplace_back(ratio.label, summarize(subset));
    }
    report.aggregates.push_back(std::move(agg));
  }
  return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  auto& cfg = j["config"];
  cfg["strategies"] = nlohmann::ordered_json::array();
  for (const auto& s : config.strategies) cfg["strategies"].push_back(strategy_label(s));
  cfg["ratios"] = nlohmann::ordered_json::array();
  for (const auto& r : config.ratios) cfg["ratios"].push_back(r.label);
  cfg["k"] = config.k;
  cfg["rel_threshold"] = config.rel_threshold;
  cfg["ap_mode"] = config.ap_mode == ApMode::trec ? "trec" : "literal";
  cfg["judge_mode"] = config.judge_mode == JudgeMode::any_id ? "any" : "expand";

  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"topic_id", r.topic_id},
                         {"ratio", r.ratio.label},
                         {"strategy", r.strategy},
                         {"prefix", r.prefix},
                         {"rr", r.rr},
                         {"ap", r.ap},
                         {"retrieved", r.retrieved},
                         {"relevant_retrieved", r.relevant_retrieved},
                         {"missing_qrels", r.missing_qrels}});
  }
  auto& aggs = j["aggregates"];
  aggs = nlohmann::ordered_json::object();
  for (const auto& a : aggregates) {
    nlohmann::ordered_json per_ratio = nlohmann::ordered_json::object();
    for (const auto& [label, s] : a.per_ratio) per_ratio[label] = summary_json(s);
    aggs[a.strategy] = {{"all", summary_json(a.all)},
                        {"answered", summary_json(a.answered)},
                        {"per_ratio", per_ratio}};
  }
  j["skipped_topics"] = skipped_topics;
  j["missing_qrels_topics"] = missing_qrels_topics;
  return j;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(12) << "topic" << std::setw(7) << "ratio" << std::setw(10)
     << "strategy" << std::right << std::setw(9) << "rr" << std::setw(9) << "ap" << std::setw(11)
     << "retrieved" << std::setw(10) << "relevant" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(12) << r.topic_id << std::setw(7) << r.ratio.label
       << std::setw(10) << r.strategy << std::right << std::setw(9) << fixed(r.rr, 4)
       << std::setw(9) << fixed(r.ap, 4) << std::setw(11) << r.retrieved << std::setw(10)
       << r.relevant_retrieved << (r.missing_qrels ? "  (no qrels)" : "") << '\n';
  }
  os << '\n'
     << std::left << std::setw(10) << "strategy" << std::right << std::setw(10) << "MRR"
     << std::setw(10) << "MAP" << std::setw(7) << "rows" << std::setw(14) << "MRR(answered)"
     << std::setw(14) << "MAP(answered)" << std::setw(10) << "answered" << '\n';
  for (const auto& a : aggregates) {
    os << std::left << std::setw(10) << a.strategy << std::right << std::setw(10)
       << fixed(a.all.mrr, 4) << std::setw(10) << fixed(a.all.map, 4) << std::setw(7)
       << a.all.rows << std::setw(14) << fixed(a.answered.mrr, 4) << std::setw(14)
       << fixed(a.answered.map, 4) << std::setw(10) << a.answered.rows << '\n';
  }
  return os.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "topic_id,ratio,strategy,prefix,rr,ap,retrieved,relevant_retrieved\n";
  for (const auto& r : rows) {
    os << csv_field(r.topic_id) << ',' << csv_field(r.ratio.label) << ',' << r.strategy << ','
       << csv_field(r.prefix) << ',' << fixed(r.rr, 6) << ',' << fixed(r.ap, 6) << ','
       << r.retrieved << ',' << r.relevant_retrieved << '\n';
  }
  return os.str();
}

// --- bench -------------------------------------------------------------------

std::string_view structure_name(Structure s) noexcept {
  return s == Structure::trie ? "trie" : "fst";
}

std::optional<Structure> parse_structure(std::string_view text) noexcept {
  if (text == "trie") return Structure::trie;
  if (text == "fst") return Structure::fst;
  return std::nullopt;
}

namespace {

template <typename Index>
BenchReport run_bench(std::string_view name, const Corpus& corpus,
                      const std::vector<std::string>& workload, const BenchConfig& config) {
  BenchReport report;
  report.structure = std::string(name);

  std::vector<double> builds;
  std::optional<Index> index;
  for (std::size_t run = 0; run < std::max<std::size_t>(1, config.build_runs); ++run) {
    index.reset();
    const auto start = Clock::now();
    index.emplace(corpus);
    builds.push_back(elapsed_ms(start));
  }
  std::sort(builds.begin(), builds.end());
  report.build_ms = builds[builds.size() / 2];

  std::vector<double> samples;
  if (!workload.empty()) {
    const auto total = std::max(config.min_query_samples, workload.size());
    samples.reserve(total);
    // One untimed pass warms caches and the allocator.
    for (const auto& q : workload) {
      try {
        (void)prefix_match(*index, q, config.k);
      } catch (const Error&) {
      }
    }
    for (std::size_t i = 0; i < total; ++i) {
      const auto& q = workload[i % workload.size()];
      const auto start = Clock::now();
      try {
        (void)prefix_match(*index, q, config.k);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::invalid_query) throw;
        continue;
      }
      samples.push_back(elapsed_ms(start));
    }
  }
  report.query_samples = samples.size();
  if (!samples.empty()) {
    double sum = 0.0;
    for (double s : samples) sum += s;
    report.mean_query_ms = sum / static_cast<double>(samples.size());
    std::sort(samples.begin(), samples.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size())));
    report.p95_query_ms = samples[std::max<std::size_t>(rank, 1) - 1];
  }

  report.index_bytes = index->serialize().size();
  report.key_count = index->key_count();
  if constexpr (std::is_same_v<Index, TrieIndex>) {
    report.node_or_state_count = index->node_count();
    report.estimated_bytes = index->node_count() * TrieIndex::bytes_per_node;
  } else {
    report.node_or_state_count = index->state_count();
    report.estimated_bytes = index->state_count() * sizeof(DafsaState) +
                             index->transition_count() * sizeof(std::pair<char32_t, std::uint32_t>);
  }
  return report;
}

}  // namespace

std::vector<BenchReport> bench(const Corpus& corpus, const std::vector<std::string>& workload,
                               const BenchConfig& config) {
  if (corpus.empty()) throw Error(ErrorCode::empty_corpus, "cannot bench an empty corpus");
  std::vector<BenchReport> reports;
  for (const auto s : config.structures) {
    if (s == Structure::trie) {
      reports.push_back(run_bench<TrieIndex>("trie", corpus, workload, config));
    } else {
      reports.push_back(run_bench<FstIndex>("fst", corpus, workload, config));
    }
  }
  return reports;
}

nlohmann::ordered_json bench_to_json(const std::vector<BenchReport>& reports) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    j.push_back({{"structure", r.structure},
                 {"build_ms", r.build_ms},
                 {"mean_query_ms", r.mean_query_ms},
                 {"p95_query_ms", r.p95_query_ms},
                 {"index_MB", static_cast<double>(r.index_bytes) / 1e6},
                 {"index_bytes", r.index_bytes},
                 {"estimated_bytes", r.estimated_bytes},
                 {"node_or_state_count", r.node_or_state_count},
                 {"key_count", r.key_count},
                 {"query_samples", r.query_samples}});
  }
  return j;
}

std::string bench_to_text(const std::vector<BenchReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "structure" << std::right << std::setw(12) << "build_ms"
     << std::setw(15) << "mean_query_ms" << std::setw(14) << "p95_query_ms" << std::setw(11)
     << "index_MB" << std::setw(14) << "nodes/states" << '\n';
  for (const auto& r : reports) {
    os << std::left << std::setw(10) << r.structure << std::right << std::setw(12)
       << fixed(r.build_ms, 2) << std::setw(15) << fixed(r.mean_query_ms, 4) << std::setw(14)
       << fixed(r.p95_query_ms, 4) << std::setw(11)
       << fixed(static_cast<double>(r.index_bytes) / 1e6, 3) << std::setw(14)
       << r.node_or_state_count << '\n';
  }
  return os.str();
}

}  // namespace mathqac
