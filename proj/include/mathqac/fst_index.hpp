#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mathqac/corpus.hpp"

namespace mathqac {

/// A state of the minimal acyclic automaton. `max_weight` bounds the
/// frequency of every accepted key whose path passes through this state.
struct DafsaState {
  std::vector<std::pair<char32_t, std::uint32_t>> transitions;  // sorted by label
  bool is_final = false;
  std::uint32_t max_weight = 0;
};

struct Completion {
  std::string key;
  const CorpusEntry* entry = nullptr;
};

struct FuzzyMatch {
  std::string key;
  const CorpusEntry* entry = nullptr;
  int distance = 0;
};

struct TopK {
  std::vector<Completion> items;
  bool truncated = false;  // more completions existed beyond k
};

/// Minimal deterministic acyclic acceptor over the corpus key set, plus a
/// side table from accepted key to its CorpusEntry.
///
/// States are numbered breadth-first from the start state (id 0) following
/// transitions in label order, so identical key sets give identical layouts.
class FstIndex {
 public:
  static constexpr std::uint32_t start_id = 0;
  static constexpr int max_fuzzy_edits = 2;
  static constexpr std::size_t unbounded = std::numeric_limits<std::size_t>::max();

  /// Incremental construction over sorted keys with a register of
  /// equivalent states (minimal after every insertion).
  explicit FstIndex(const Corpus& corpus);

  bool contains(std::string_view key) const;
  const CorpusEntry* find(std::string_view key) const;

  /// Top-k completions of `prefix` by (frequency desc, key asc), found by
  /// best-first search bounded by the per-state max_weight.
  TopK complete_topk(std::string_view prefix, std::size_t k) const;

  /// Every accepted key within `max_edits` Levenshtein edits of `query`,
  /// ordered by (distance asc, frequency desc, key asc).
  std::vector<FuzzyMatch> fuzzy(std::string_view query, int max_edits) const;

  /// Calls `visit(path)` for every accepted string below `state` in
  /// ascending order; `path` holds the labels reaching `state` on entry.
  template <typename Visit>
  void for_each_below(std::uint32_t state, std::u32string& path, Visit&& visit) const;

  /// State reached from `from` by reading `labels`, or npos.
  static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t walk(std::uint32_t from, std::u32string_view labels) const;

  std::size_t state_count() const noexcept { return states_.size(); }
  std::size_t transition_count() const noexcept;
  std::size_t key_count() const noexcept { return entries_.size(); }
  const std::vector<DafsaState>& states() const noexcept { return states_; }
  const std::vector<CorpusEntry>& entries() const noexcept { return entries_; }

  /// Binary image: "MQF1", u32 state count, per state (u8 final, u16 arc
  /// count, arcs as u32 label, u32 target, u32 target max_weight), then the
  /// value table. All integers little-endian.
  std::string serialize() const;
  static FstIndex deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static FstIndex load(const std::filesystem::path& path);

 private:
  FstIndex() = default;
  void annotate_weights();
  void validate() const;

  std::vector<DafsaState> states_;
  std::vector<CorpusEntry> entries_;  // ascending by key
};

FstIndex build_fst(const Corpus& corpus);

/// Levenshtein distance over code points (reference DP, full matrix rows).
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

template <typename Visit>
void FstIndex::for_each_below(std::uint32_t state, std::u32string& path,
                              Visit&& visit) const {
  const DafsaState& s = states_[state];
  if (s.is_final) {
    visit(std::u32string_view(path));
  }
  for (const auto& [label, target] : s.transitions) {
    path.push_back(label);
    for_each_below(target, path, visit);
    path.pop_back();
  }
}

}  // namespace mathqac
