#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mathqac/corpus.hpp"
#include "mathqac/fst_index.hpp"
#include "mathqac/trie_index.hpp"

namespace mathqac {

enum class StrategyKind { exact, prefix, pattern, fuzzy };

/// How pattern matching splits the query into substring tokens.
enum class PatternTokenization {
  whole_query,       // one token: the normalized query
  control_sequences  // a new token starts at every backslash (experimental)
};

struct StrategySpec {
  StrategyKind kind = StrategyKind::prefix;
  int max_edits = 0;  // fuzzy only, in [0, 2]
  PatternTokenization tokenization = PatternTokenization::whole_query;

  bool operator==(const StrategySpec&) const = default;
};

/// "em", "prm", "pam", "fuzzy".
std::string_view strategy_name(StrategyKind kind) noexcept;
std::optional<StrategyKind> parse_strategy(std::string_view name) noexcept;

struct Suggestion {
  std::string completion;
  std::uint32_t score = 0;
  std::vector<std::string> formula_ids;
  std::optional<int> distance;
  std::string latex;  // raw LaTeX of the first formula id

  bool operator==(const Suggestion&) const = default;
};

struct SuggestionList {
  std::string query;
  std::string normalized_query;
  StrategySpec strategy;
  std::vector<Suggestion> items;
  bool truncated = false;
};

inline constexpr std::size_t default_k = 10;
inline constexpr std::size_t eval_k = 1000;
inline constexpr std::size_t unbounded_k = FstIndex::unbounded;

/// Normalizes `query`; throws invalid_query when nothing is left.
std::string normalize_query(std::string_view query);

/// Pattern tokens for a normalized query; throws invalid_query when the
/// query contains only separators.
std::vector<std::string> pattern_tokens(std::string_view normalized,
                                         PatternTokenization mode);

SuggestionList exact_match(const FstIndex& index, std::string_view query);
SuggestionList exact_match(const TrieIndex& index, std::string_view query);

SuggestionList prefix_match(const FstIndex& index, std::string_view query,
                            std::size_t k);
SuggestionList prefix_match(const TrieIndex& index, std::string_view query,
                            std::size_t k);

/// Entries containing every query token as a substring. Runs a KMP matcher
/// in lockstep with automaton traversal and enumerates whole sub-automata
/// once all tokens have been seen.
SuggestionList pattern_match(const FstIndex& index, std::string_view query,
                             std::size_t k,
                             PatternTokenization mode = PatternTokenization::whole_query);

SuggestionList fuzzy_suggest(const FstIndex& index, std::string_view query,
                             int max_edits, std::size_t k);

/// Dispatches on `spec` against the automaton.
SuggestionList suggest(const FstIndex& index, const StrategySpec& spec,
                       std::string_view query, std::size_t k);

/// Linear-scan oracle: applies each strategy's predicate literally to every
/// corpus entry, sorts fully, truncates to k.
SuggestionList brute_force(const Corpus& corpus, const StrategySpec& spec,
                           std::string_view query, std::size_t k);

/// Strict weak ordering used by every strategy: distance asc (fuzzy),
/// score desc, completion asc.
bool ranks_before(const Suggestion& a, const Suggestion& b) noexcept;

}  // namespace mathqac
