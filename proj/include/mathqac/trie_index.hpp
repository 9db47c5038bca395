#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mathqac/corpus.hpp"

namespace mathqac {

/// A trie node; children are kept sorted by code point.
struct TrieNode {
  static constexpr std::int32_t no_entry = -1;

  std::vector<std::pair<char32_t, std::uint32_t>> children;
  std::int32_t entry = no_entry;  // index into TrieIndex::entries()
};

struct TrieStats {
  std::size_t node_count = 0;
  std::size_t key_count = 0;
  std::size_t estimated_bytes = 0;   // node_count * bytes_per_node
  std::size_t serialized_bytes = 0;
};

/// Character trie over normalized keys; every key is a root-to-node path.
class TrieIndex {
 public:
  /// Accounting constant used for the analytic memory estimate: one node
  /// record plus the parent's child edge that points at it.
  static constexpr std::size_t bytes_per_node =
      sizeof(TrieNode) + sizeof(std::pair<char32_t, std::uint32_t>);

  static constexpr std::uint32_t root_id = 0;

  explicit TrieIndex(const Corpus& corpus);

  const CorpusEntry* lookup_exact(std::string_view key) const;

  /// Calls `visit` for each entry under `prefix` in ascending key order.
  /// Returns false from `visit` to stop early.
  void enumerate_prefix(std::string_view prefix,
                        const std::function<bool(const CorpusEntry&)>& visit) const;
  std::vector<const CorpusEntry*> prefix_entries(std::string_view prefix) const;

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t key_count() const noexcept { return entries_.size(); }
  const std::vector<TrieNode>& nodes() const noexcept { return nodes_; }
  const std::vector<CorpusEntry>& entries() const noexcept { return entries_; }

  /// Compact binary image ("MQT1"), used only for size measurement.
  std::string serialize() const;
  TrieStats stats() const;

 private:
  void insert(std::u32string_view key, std::int32_t entry);
  std::int32_t find_node(std::u32string_view path) const;

  std::vector<TrieNode> nodes_;
  std::vector<CorpusEntry> entries_;
};

TrieIndex build_trie(const Corpus& corpus);

}  // namespace mathqac
