#include "mathqac/strategies.hpp"

#include <algorithm>

#include "mathqac/error.hpp"
#include "mathqac/utf8.hpp"

namespace mathqac {

namespace {

Suggestion to_suggestion(const CorpusEntry& e, std::optional<int> distance = std::nullopt) {
  return Suggestion{e.key, e.frequency, e.formula_ids, distance, e.latex};
}

SuggestionList make_list(std::string_view query, std::string normalized,
                         const StrategySpec& spec) {
  SuggestionList list;
  list.query = std::string(query);
  list.normalized_query = std::move(normalized);
  list.strategy = spec;
  return list;
}

void require_k(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::invalid_argument, "k must be positive");
}

void require_edits(int max_edits) {
  if (max_edits < 0 || max_edits > FstIndex::max_fuzzy_edits) {
    throw Error(ErrorCode::invalid_argument, "max_edits must be in [0, 2]");
  }
}

// Sorts by the shared ranking and keeps the first k.
void rank_and_truncate(SuggestionList& list, std::size_t k) {
  if (list.items.size() > k) {
    std::partial_sort(list.items.begin(), list.items.begin() + static_cast<std::ptrdiff_t>(k),
                      list.items.end(), ranks_before);
    list.items.resize(k);
    list.truncated = true;
  } else {
    std::sort(list.items.begin(), list.items.end(), ranks_before);
  }
}

constexpr bool is_separator(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// KMP matcher over code points.
struct TokenMatcher {
  std::u32string token;
  std::vector<std::size_t> failure;

  explicit TokenMatcher(std::u32string t) : token(std::move(t)), failure(token.size(), 0) {
    for (std::size_t i = 1, q = 0; i < token.size(); ++i) {
      while (q > 0 && token[i] != token[q]) q = failure[q - 1];
      if (token[i] == token[q]) ++q;
      failure[i] = q;
    }
  }

  std::size_t step(std::size_t q, char32_t c) const {
    while (q > 0 && token[q] != c) q = failure[q - 1];
    if (token[q] == c) ++q;
    return q;
  }
};

}  // namespace

std::string_view strategy_name(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::exact: return "em";
    case StrategyKind::prefix: return "prm";
    case StrategyKind::pattern: return "pam";
    case StrategyKind::fuzzy: return "fuzzy";
  }
  return "?";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) noexcept {
  if (name == "em") return StrategyKind::exact;
  if (name == "prm") return StrategyKind::prefix;
  if (name == "pam") return StrategyKind::pattern;
  if (name == "fuzzy") return StrategyKind::fuzzy;
  return std::nullopt;
}

bool ranks_before(const Suggestion& a, const Suggestion& b) noexcept {
  const int da = a.distance.value_or(0);
  const int db = b.distance.value_or(0);
  if (da != db) return da < db;
  if (a.score != b.score) return a.score > b.score;
  return a.completion < b.completion;
}

std::string normalize_query(std::string_view query) {
  std::string normalized = normalize(query);
  if (normalized.empty()) throw Error(ErrorCode::invalid_query, "invalid query");
  return normalized;
}

std::vector<std::string> pattern_tokens(std::string_view normalized, PatternTokenization mode) {
  std::vector<std::string_view> pieces;
  if (mode == PatternTokenization::whole_query) {
    pieces.push_back(normalized);
  } else {
    std::size_t start = 0;
    for (std::size_t i = 1; i <= normalized.size(); ++i) {
      if (i == normalized.size() || normalized[i] == '\\') {
        pieces.push_back(normalized.substr(start, i - start));
        start = i;
      }
    }
  }
  std::vector<std::string> tokens;
  for (auto piece : pieces) {
    while (!piece.empty() && is_separator(piece.front())) piece.remove_prefix(1);
    while (!piece.empty() && is_separator(piece.back())) piece.remove_suffix(1);
    if (!piece.empty()) tokens.emplace_back(piece);
  }
  if (tokens.empty()) throw Error(ErrorCode::invalid_query, "query has no pattern tokens");
  return tokens;
}

SuggestionList exact_match(const FstIndex& index, std::string_view query) {
  const StrategySpec spec{StrategyKind::exact};
  auto list = make_list(query, normalize_query(query), spec);
  if (index.contains(list.normalized_query)) {
    list.items.push_back(to_suggestion(*index.find(list.normalized_query)));
  }
  return list;
}

SuggestionList exact_match(const TrieIndex& index, std::string_view query) {
  const StrategySpec spec{StrategyKind::exact};
  auto list = make_list(query, normalize_query(query), spec);
  if (const auto* entry = index.lookup_exact(list.normalized_query)) {
    list.items.push_back(to_suggestion(*entry));
  }
  return list;
}

SuggestionList prefix_match(const FstIndex& index, std::string_view query, std::size_t k) {
  require_k(k);
  auto list = make_list(query, normalize_query(query), StrategySpec{StrategyKind::prefix});
  auto top = index.complete_topk(list.normalized_query, k);
  list.items.reserve(top.items.size());
  for (const auto& c : top.items) list.items.push_back(to_suggestion(*c.entry));
  list.truncated = top.truncated;
  return list;
}

SuggestionList prefix_match(const TrieIndex& index, std::string_view query, std::size_t k) {
  require_k(k);
  auto list = make_list(query, normalize_query(query), StrategySpec{StrategyKind::prefix});
  index.enumerate_prefix(list.normalized_query, [&](const CorpusEntry& e) {
    list.items.push_back(to_suggestion(e));
    return true;
  });
  rank_and_truncate(list, k);
  return list;
}

SuggestionList pattern_match(const FstIndex& index, std::string_view query, std::size_t k,
                             PatternTokenization mode) {
  require_k(k);
  StrategySpec spec{StrategyKind::pattern};
  spec.tokenization = mode;
  auto list = make_list(query, normalize_query(query), spec);

  std::vector<TokenMatcher> matchers;
  for (const auto& t : pattern_tokens(list.normalized_query, mode)) {
    matchers.emplace_back(utf8::decode(t));
  }
  const auto& states = index.states();
  std::u32string path;
  std::vector<std::size_t> progress(matchers.size(), 0);
  std::size_t pending = matchers.size();

  auto collect_below = [&](std::uint32_t state) {
    index.for_each_below(state, path, [&](std::u32string_view key) {
      list.items.push_back(to_suggestion(*index.find(utf8::encode(key))));
    });
  };

  auto visit = [&](auto&& self, std::uint32_t state) -> void {
    if (pending == 0) {
      collect_below(state);
      return;
    }
    const auto saved = progress;
    const auto saved_pending = pending;
    for (const auto& [label, target] : states[state].transitions) {
      for (std::size_t i = 0; i < matchers.size(); ++i) {
        if (progress[i] == matchers[i].token.size()) continue;
        progress[i] = matchers[i].step(progress[i], label);
        if (progress[i] == matchers[i].token.size()) --pending;
      }
      path.push_back(label);
      self(self, target);
      path.pop_back();
      progress = saved;
      pending = saved_pending;
    }
  };
  visit(visit, FstIndex::start_id);

  rank_and_truncate(list, k);
  return list;
}

SuggestionList fuzzy_suggest(const FstIndex& index, std::string_view query, int max_edits,
                             std::size_t k) {
  require_k(k);
  require_edits(max_edits);
  StrategySpec spec{StrategyKind::fuzzy, max_edits};
  auto list = make_list(query, normalize_query(query), spec);
  const auto matches = index.fuzzy(list.normalized_query, max_edits);
  const auto keep = std::min(k, matches.size());
  list.items.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    list.items.push_back(to_suggestion(*matches[i].entry, matches[i].distance));
  }
  list.truncated = matches.size() > k;
  return list;
}

SuggestionList suggest(const FstIndex& index, const StrategySpec& spec, std::string_view query,
                       std::size_t k) {
  switch (spec.kind) {
    case StrategyKind::exact: require_k(k); return exact_match(index, query);
    case StrategyKind::prefix: return prefix_match(index, query, k);
    case StrategyKind::pattern: return pattern_match(index, query, k, spec.tokenization);
    case StrategyKind::fuzzy: return fuzzy_suggest(index, query, spec.max_edits, k);
  }
  throw Error(ErrorCode::internal_error, "unknown strategy");
}

SuggestionList brute_force(const Corpus& corpus, const StrategySpec& spec, std::string_view query,
                           std::size_t k) {
  require_k(k);
  if (spec.kind == StrategyKind::fuzzy) require_edits(spec.max_edits);
  auto list = make_list(query, normalize_query(query), spec);
  const std::string& p = list.normalized_query;

  std::vector<std::string> tokens;
  std::u32string p32;
  if (spec.kind == StrategyKind::pattern) tokens = pattern_tokens(p, spec.tokenization);
  if (spec.kind == StrategyKind::fuzzy) p32 = utf8::decode(p);

  for (const auto& e : corpus.entries) {
    switch (spec.kind) {
      case StrategyKind::exact:
        if (e.key == p) list.items.push_back(to_suggestion(e));
        break;
      case StrategyKind::prefix:
        if (e.key.starts_with(p)) list.items.push_back(to_suggestion(e));
        break;
      case StrategyKind::pattern:
        if (std::all_of(tokens.begin(), tokens.end(),
                        [&](const std::string& t) { return e.key.find(t) != std::string::npos; })) {
          list.items.push_back(to_suggestion(e));
        }
        break;
      case StrategyKind::fuzzy: {
        const auto d = edit_distance(utf8::decode(e.key), p32);
        if (d <= static_cast<std::size_t>(spec.max_edits)) {
          list.items.push_back(to_suggestion(e, static_cast<int>(d)));
        }
        break;
      }
    }
  }
  std::sort(list.items.begin(), list.items.end(), ranks_before);
  if (list.items.size() > k) {
    list.items.resize(k);
    list.truncated = true;
  }
  return list;
}

}  // namespace mathqac
