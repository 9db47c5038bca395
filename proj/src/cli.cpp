#include "mathqac/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"

#include "mathqac/corpus.hpp"
#include "mathqac/error.hpp"
#include "mathqac/evalharness.hpp"
#include "mathqac/fst_index.hpp"
#include "mathqac/service.hpp"
#include "mathqac/strategies.hpp"
#include "mathqac/synthetic.hpp"
#include "mathqac/trie_index.hpp"

namespace mathqac::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open for writing: " + path);
  out << content;
  if (!out) throw Error(ErrorCode::io_error, "write failed: " + path);
}

std::shared_ptr<const FstIndex> load_fst(const std::string& corpus_path,
                                         const std::string& index_path) {
  if (!index_path.empty()) return std::make_shared<const FstIndex>(FstIndex::load(index_path));
  if (corpus_path.empty()) throw UsageError("one of --corpus or --index is required");
  return std::make_shared<const FstIndex>(load_corpus(corpus_path));
}

StrategySpec strategy_from(const std::string& name, int max_edits, const std::string& tokenization) {
  const auto kind = parse_strategy(name);
  if (!kind) throw UsageError("unknown strategy: " + name + " (expected em|prm|pam|fuzzy)");
  StrategySpec spec{*kind, max_edits};
  if (tokenization == "cs") {
    spec.tokenization = PatternTokenization::control_sequences;
  } else if (tokenization != "whole") {
    throw UsageError("unknown pattern tokenization: " + tokenization);
  }
  return spec;
}

double ms_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

// --- subcommand options ------------------------------------------------------

struct BuildOptions {
  std::string corpus, out, structure = "fst";
};

struct SuggestOptions {
  std::string corpus, index, query, strategy = "prm", backend = "fst", tokenization = "whole";
  std::size_t k = default_k;
  int max_edits = 1;
  bool json = false;
};

struct EvalOptions {
  std::string corpus, index, topics, qrels, strategies = "prm", ratios = "1/3,1/2,1";
  std::string ap_mode = "trec", judge = "any", tokenization = "whole";
  std::string out_json, out_text, out_csv;
  std::size_t k = eval_k;
  int rel_threshold = 1;
  int max_edits = 1;
};

struct BenchOptions {
  std::string corpus, topics, structures = "trie,fst", out_json;
  std::size_t synthetic = 0, queries = 1000, runs = 3, k = default_k;
  std::uint64_t seed = 42;
};

struct ServeOptions {
  std::string corpus, index, host = "127.0.0.1", strategy = "prm", ap_mode = "trec";
  int port = 8080, max_edits = 1, rel_threshold = 1;
  std::size_t k = default_k;
};

// --- subcommands -------------------------------------------------------------

int cmd_build(const BuildOptions& o, std::ostream& out) {
  const auto structure = parse_structure(o.structure);
  if (!structure) throw UsageError("unknown structure: " + o.structure);
  const Corpus corpus = load_corpus(o.corpus);
  const auto start = std::chrono::steady_clock::now();
  if (*structure == Structure::trie) {
    const TrieIndex trie(corpus);
    const double build_ms = ms_since(start);
    const auto stats = trie.stats();
    out << "structure=trie records=" << corpus.total_records << " malformed=" << corpus.malformed_lines
        << " key_count=" << stats.key_count << " node_count=" << stats.node_count
        << " bytes=" << stats.serialized_bytes << " estimated_bytes=" << stats.estimated_bytes
        << " build_ms=" << std::fixed << std::setprecision(2) << build_ms << '\n';
    return exit_ok;
  }
  if (o.out.empty()) throw UsageError("--out is required for --structure fst");
  const FstIndex fst(corpus);
  const double build_ms = ms_since(start);
  const std::string bytes = fst.serialize();
  write_file(o.out, bytes);
  out << "structure=fst records=" << corpus.total_records << " malformed=" << corpus.malformed_lines
      << " key_count=" << fst.key_count() << " state_count=" << fst.state_count()
      << " transition_count=" << fst.transition_count() << " bytes=" << bytes.size()
      << " build_ms=" << std::fixed << std::setprecision(2) << build_ms << '\n';
  return exit_ok;
}

int cmd_suggest(const SuggestOptions& o, std::ostream& out) {
  const auto spec = strategy_from(o.strategy, o.max_edits, o.tokenization);
  if (o.k == 0) throw UsageError("-k must be >= 1");
  SuggestionList list;
  const auto start = std::chrono::steady_clock::now();
  if (o.backend == "trie") {
    if (o.corpus.empty()) throw UsageError("--backend trie needs --corpus");
    if (spec.kind != StrategyKind::prefix && spec.kind != StrategyKind::exact) {
      throw UsageError("--backend trie supports only em and prm");
    }
    const TrieIndex trie(load_corpus(o.corpus));
    list = spec.kind == StrategyKind::prefix ? prefix_match(trie, o.query, o.k)
                                             : exact_match(trie, o.query);
  } else if (o.backend == "fst") {
    const auto fst = load_fst(o.corpus, o.index);
    list = suggest(*fst, spec, o.query, o.k);
  } else {
    throw UsageError("unknown backend: " + o.backend);
  }
  if (o.json) {
    out << suggestion_list_json(list, o.k, ms_since(start)).dump() << '\n';
    return exit_ok;
  }
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    const auto& s = list.items[i];
    out << (i + 1) << '\t' << s.completion << '\t' << s.score << '\t';
    for (std::size_t j = 0; j < s.formula_ids.size(); ++j) {
      out << (j ? "," : "") << s.formula_ids[j];
    }
    if (s.distance) out << '\t' << *s.distance;
    out << '\n';
  }
  return exit_ok;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  EvalConfig config;
  config.strategies.clear();
  for (const auto& name : split_list(o.strategies)) {
    config.strategies.push_back(strategy_from(name, o.max_edits, o.tokenization));
  }
  if (config.strategies.empty()) throw UsageError("--strategies is empty");
  config.ratios.clear();
  for (const auto& r : split_list(o.ratios)) {
    try {
      config.ratios.push_back(parse_ratio(r));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (config.ratios.empty()) throw UsageError("--ratios is empty");
  config.k = o.k;
  if (config.k == 0) throw UsageError("-k must be >= 1");
  config.rel_threshold = o.rel_threshold;
  if (config.rel_threshold < 1) throw UsageError("--rel-threshold must be >= 1");
  const auto ap = parse_ap_mode(o.ap_mode);
  if (!ap) throw UsageError("unknown --ap-mode: " + o.ap_mode);
  config.ap_mode = *ap;
  const auto judge_mode = parse_judge_mode(o.judge);
  if (!judge_mode) throw UsageError("unknown --judge: " + o.judge);
  config.judge_mode = *judge_mode;

  const auto fst = load_fst(o.corpus, o.index);
  const auto topics = load_topics(o.topics);
  const auto qrels = load_qrels(o.qrels);
  const auto report = evaluate(*fst, topics, qrels, config);

  if (!o.out_json.empty()) write_file(o.out_json, report.to_json().dump(2) + "\n");
  if (!o.out_text.empty()) write_file(o.out_text, report.to_text());
  if (!o.out_csv.empty()) write_file(o.out_csv, report.to_csv());

  out << std::fixed << std::setprecision(4);
  for (const auto& a : report.aggregates) {
    out << a.strategy << "\tMRR=" << a.all.mrr << "\tMAP=" << a.all.map << "\trows=" << a.all.rows
        << "\tanswered_MRR=" << a.answered.mrr << "\tanswered_MAP=" << a.answered.map
        << "\tanswered_rows=" << a.answered.rows << '\n';
  }
  for (const auto& t : report.missing_qrels_topics) out << "warning: no qrels for topic " << t << '\n';
  for (const auto& t : report.skipped_topics) out << "warning: skipped empty topic " << t << '\n';
  return exit_ok;
}

int cmd_bench(const BenchOptions& o, std::ostream& out) {
  BenchConfig config;
  config.structures.clear();
  for (const auto& name : split_list(o.structures)) {
    const auto s = parse_structure(name);
    if (!s) throw UsageError("unknown structure: " + name);
    config.structures.push_back(*s);
  }
  config.build_runs = o.runs;
  config.k = o.k;
  if (config.k == 0) throw UsageError("-k must be >= 1");

  Corpus corpus;
  if (o.synthetic > 0) {
    corpus = synthetic::formula_corpus(o.synthetic, o.seed);
  } else if (!o.corpus.empty()) {
    corpus = load_corpus(o.corpus);
  } else {
    throw UsageError("one of --corpus or --synthetic is required");
  }

  std::vector<std::string> workload;
  if (!o.topics.empty()) {
    for (const auto& pq : make_partial_queries(load_topics(o.topics), default_ratios()).queries) {
      workload.push_back(pq.prefix);
    }
  } else {
    workload = synthetic::prefix_workload(corpus, o.queries, o.seed + 1);
  }
  config.min_query_samples = std::max<std::size_t>(o.queries, 1);

  const auto reports = bench(corpus, workload, config);
  out << "keys=" << corpus.size() << " records=" << corpus.total_records
      << " workload=" << workload.size() << '\n'
      << bench_to_text(reports);
  if (!o.out_json.empty()) write_file(o.out_json, bench_to_json(reports).dump(2) + "\n");
  return exit_ok;
}

int cmd_serve(ServeOptions o, std::ostream& out, std::ostream& err) {
  if (const char* env = std::getenv("MATHQAC_PORT"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      o.port = std::stoi(env, &used);
      if (used != std::string_view(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("invalid MATHQAC_PORT: ") + env);
    }
  }
  ServiceConfig config;
  config.corpus_path = o.corpus;
  config.index_path = o.index;
  config.port = o.port;
  config.host = o.host;
  config.default_k = o.k;
  config.default_max_edits = o.max_edits;
  config.rel_threshold = o.rel_threshold;
  const auto kind = parse_strategy(o.strategy);
  if (!kind) throw UsageError("unknown strategy: " + o.strategy);
  config.default_strategy = *kind;
  const auto ap = parse_ap_mode(o.ap_mode);
  if (!ap) throw UsageError("unknown --ap-mode: " + o.ap_mode);
  config.ap_mode = *ap;
  try {
    config.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const auto index = load_fst(o.corpus, o.index);
  SuggestService service(index, config);
  out << "serving " << index->key_count() << " keys on http://" << config.host << ':'
      << config.port << std::endl;
  if (!service.listen()) {
    err << "error: cannot listen on " << config.host << ':' << config.port << '\n';
    return exit_data_error;
  }
  return exit_ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Autocompletion engine for LaTeX formula queries", "mathqac"};
  app.require_subcommand(1);

  BuildOptions build;
  auto* b = app.add_subcommand("build", "Build an index from a corpus file");
  b->add_option("--corpus", build.corpus, "Corpus TSV (<formula_id>\\t<latex>)")->required();
  b->add_option("--out", build.out, "Output file for the serialized automaton");
  b->add_option("--structure", build.structure, "trie | fst")->capture_default_str();

  SuggestOptions sug;
  auto* s = app.add_subcommand("suggest", "Print ranked completions for one query");
  s->add_option("--corpus", sug.corpus, "Corpus TSV");
  s->add_option("--index", sug.index, "Prebuilt automaton file");
  s->add_option("--query,-q", sug.query, "Query prefix (raw LaTeX)")->required();
  s->add_option("--strategy", sug.strategy, "em | prm | pam | fuzzy")->capture_default_str();
  s->add_option("-k", sug.k, "Maximum suggestions")->capture_default_str();
  s->add_option("--max-edits", sug.max_edits, "Fuzzy edit bound (0-2)")->capture_default_str();
  s->add_option("--backend", sug.backend, "fst | trie (trie: em/prm only)")->capture_default_str();
  s->add_option("--pam-tokenization", sug.tokenization, "whole | cs")->capture_default_str();
  s->add_flag("--json", sug.json, "Print the same JSON document the HTTP service returns");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Run the MRR/MAP evaluation protocol");
  e->add_option("--corpus", ev.corpus, "Corpus TSV");
  e->add_option("--index", ev.index, "Prebuilt automaton file");
  e->add_option("--topics", ev.topics, "Topics TSV (<topic_id>\\t<latex>)")->required();
  e->add_option("--qrels", ev.qrels, "TREC-style qrels")->required();
  e->add_option("--strategies", ev.strategies, "Comma list of em,prm,pam,fuzzy")->capture_default_str();
  e->add_option("--ratios", ev.ratios, "Comma list of prefix ratios")->capture_default_str();
  e->add_option("-k", ev.k, "Retrieval depth")->capture_default_str();
  e->add_option("--rel-threshold", ev.rel_threshold, "Minimum relevant grade")->capture_default_str();
  e->add_option("--ap-mode", ev.ap_mode, "trec | literal")->capture_default_str();
  e->add_option("--judge", ev.judge, "any | expand")->capture_default_str();
  e->add_option("--max-edits", ev.max_edits, "Fuzzy edit bound (0-2)")->capture_default_str();
  e->add_option("--pam-tokenization", ev.tokenization, "whole | cs")->capture_default_str();
  e->add_option("--out-json", ev.out_json, "Write the JSON report here");
  e->add_option("--out-text", ev.out_text, "Write the plain-text table here");
  e->add_option("--out-csv", ev.out_csv, "Write per-row CSV here");

  BenchOptions bo;
  auto* be = app.add_subcommand("bench", "Measure build time, query latency and index size");
  be->add_option("--corpus", bo.corpus, "Corpus TSV");
  be->add_option("--synthetic", bo.synthetic, "Generate a synthetic corpus with this many keys");
  be->add_option("--seed", bo.seed, "Seed for synthetic data")->capture_default_str();
  be->add_option("--topics", bo.topics, "Use partial queries of these topics as the workload");
  be->add_option("--queries", bo.queries, "Minimum number of timed queries")->capture_default_str();
  be->add_option("--structures", bo.structures, "Comma list of trie,fst")->capture_default_str();
  be->add_option("--runs", bo.runs, "Build repetitions (median reported)")->capture_default_str();
  be->add_option("-k", bo.k, "Completions per query")->capture_default_str();
  be->add_option("--out-json", bo.out_json, "Write the JSON report here");

  ServeOptions so;
  auto* sv = app.add_subcommand("serve", "Serve GET /suggest and /health over HTTP");
  sv->add_option("--corpus", so.corpus, "Corpus TSV");
  sv->add_option("--index", so.index, "Prebuilt automaton file");
  sv->add_option("--port", so.port, "TCP port (MATHQAC_PORT overrides)")->capture_default_str();
  sv->add_option("--host", so.host, "Bind address")->capture_default_str();
  sv->add_option("-k", so.k, "Default k")->capture_default_str();
  sv->add_option("--strategy", so.strategy, "Default strategy")->capture_default_str();
  sv->add_option("--max-edits", so.max_edits, "Default fuzzy edit bound")->capture_default_str();
  sv->add_option("--rel-threshold", so.rel_threshold, "Relevance threshold")->capture_default_str();
  sv->add_option("--ap-mode", so.ap_mode, "trec | literal")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? exit_ok : exit_usage_error;
  }

  try {
    if (b->parsed()) return cmd_build(build, out);
    if (s->parsed()) return cmd_suggest(sug, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (be->parsed()) return cmd_bench(bo, out);
    if (sv->parsed()) return cmd_serve(so, out, err);
  } catch (const UsageError& ue) {
    err << "error: " << ue.what() << '\n';
    return exit_usage_error;
  } catch (const Error& ex) {
    err << "error: " << to_string(ex.code()) << ": " << ex.what() << '\n';
    const bool usage = ex.code() == ErrorCode::invalid_query || ex.code() == ErrorCode::invalid_argument;
    return usage ? exit_usage_error : exit_data_error;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_data_error;
  }
  return exit_usage_error;
}

}  // namespace mathqac::cli
