#include "mathqac/trie_index.hpp"

#include <algorithm>

#include "mathqac/error.hpp"
#include "mathqac/utf8.hpp"

namespace mathqac {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_bytes(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

}  // namespace

TrieIndex::TrieIndex(const Corpus& corpus) {
  if (corpus.empty()) throw Error(ErrorCode::empty_corpus, "cannot build trie from empty corpus");
  nodes_.emplace_back();
  entries_ = corpus.entries;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    insert(utf8::decode(entries_[i].key), static_cast<std::int32_t>(i));
  }
}

void TrieIndex::insert(std::u32string_view key, std::int32_t entry) {
  std::uint32_t node = root_id;
  for (char32_t c : key) {
    auto& children = nodes_[node].children;
    auto it = std::lower_bound(children.begin(), children.end(), c,
                               [](const auto& edge, char32_t label) { return edge.first < label; });
    if (it != children.end() && it->first == c) {
      node = it->second;
      continue;
    }
    const auto child = static_cast<std::uint32_t>(nodes_.size());
    children.insert(it, {c, child});
    nodes_.emplace_back();  // invalidates `children`
    node = child;
  }
  nodes_[node].entry = entry;
}

std::int32_t TrieIndex::find_node(std::u32string_view path) const {
  std::uint32_t node = root_id;
  for (char32_t c : path) {
    const auto& children = nodes_[node].children;
    auto it = std::lower_bound(children.begin(), children.end(), c,
                               [](const auto& edge, char32_t label) { return edge.first < label; });
    if (it == children.end() || it->first != c) return -1;
    node = it->second;
  }
  return static_cast<std::int32_t>(node);
}

const CorpusEntry* TrieIndex::lookup_exact(std::string_view key) const {
  if (key.empty()) throw Error(ErrorCode::invalid_query, "empty lookup key");
  const auto node = find_node(utf8::decode(key));
  if (node < 0 || nodes_[node].entry == TrieNode::no_entry) return nullptr;
  return &entries_[nodes_[node].entry];
}

void TrieIndex::enumerate_prefix(std::string_view prefix,
                                 const std::function<bool(const CorpusEntry&)>& visit) const {
  if (prefix.empty()) throw Error(ErrorCode::invalid_query, "empty prefix");
  const auto start = find_node(utf8::decode(prefix));
  if (start < 0) return;
  // Explicit stack: pre-order with children pushed in reverse gives
  // ascending key order.
  std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(start)};
  while (!stack.empty()) {
    const auto node = stack.back();
    stack.pop_back();
    const auto& n = nodes_[node];
    if (n.entry != TrieNode::no_entry && !visit(entries_[n.entry])) return;
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
      stack.push_back(it->second);
    }
  }
}

std::vector<const CorpusEntry*> TrieIndex::prefix_entries(std::string_view prefix) const {
  std::vector<const CorpusEntry*> out;
  enumerate_prefix(prefix, [&](const CorpusEntry& e) {
    out.push_back(&e);
    return true;
  });
  return out;
}

std::string TrieIndex::serialize() const {
  std::string out = "MQT1";
  put_u32(out, static_cast<std::uint32_t>(nodes_.size()));
  for (const auto& n : nodes_) {
    put_u32(out, static_cast<std::uint32_t>(n.entry));
    put_u32(out, static_cast<std::uint32_t>(n.children.size()));
    for (const auto& [label, child] : n.children) {
      put_u32(out, label);
      put_u32(out, child);
    }
  }
  put_u32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    put_bytes(out, e.key);
    put_u32(out, e.frequency);
    put_u32(out, static_cast<std::uint32_t>(e.formula_ids.size()));
    for (const auto& id : e.formula_ids) put_bytes(out, id);
    put_bytes(out, e.latex);
  }
  return out;
}

TrieStats TrieIndex::stats() const {
  TrieStats s;
  s.node_count = node_count();
  s.key_count = key_count();
  s.estimated_bytes = s.node_count * bytes_per_node;
  s.serialized_bytes = serialize().size();
  return s;
}

TrieIndex build_trie(const Corpus& corpus) { return TrieIndex(corpus); }

}  // namespace mathqac
