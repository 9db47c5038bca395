#include "mathqac/fst_index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "mathqac/error.hpp"
#include "mathqac/utf8.hpp"

namespace mathqac {

namespace {

constexpr char magic[4] = {'M', 'Q', 'F', '1'};

// Signature of a registered state: finality plus its outgoing arcs.
std::string signature(const DafsaState& s) {
  std::string sig;
  sig.reserve(1 + s.transitions.size() * 8);
  sig.push_back(s.is_final ? '\1' : '\0');
  for (const auto& [label, target] : s.transitions) {
    sig.append(reinterpret_cast<const char*>(&label), sizeof label);
    sig.append(reinterpret_cast<const char*>(&target), sizeof target);
  }
  return sig;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void bytes(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(next(1)[0]); }
  std::uint16_t u16() {
    const auto b = next(2);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) |
                                      (static_cast<unsigned char>(b[1]) << 8));
  }
  std::uint32_t u32() {
    const auto b = next(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  std::string bytes() {
    const auto n = u32();
    return std::string(next(n));
  }
  std::string_view next(std::size_t n) {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::format_error, "truncated index data");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const noexcept { return pos_ == data_.size(); }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

[[noreturn]] void bad_format(const std::string& what) {
  throw Error(ErrorCode::format_error, "invalid index: " + what);
}

}  // namespace

FstIndex::FstIndex(const Corpus& corpus) {
  if (corpus.empty()) throw Error(ErrorCode::empty_corpus, "cannot build automaton from empty corpus");

  std::vector<DafsaState> work(1);
  std::vector<bool> dead(1, false);
  std::vector<std::uint32_t> free_slots;  // replaced states, reused for new ones
  std::unordered_map<std::string, std::uint32_t> register_;
  std::size_t total_length = 0;
  for (const auto& e : corpus.entries) total_length += e.key.size();
  register_.reserve(total_length / 2);
  std::vector<std::uint32_t> path{0};  // states along the previous key
  std::u32string previous;

  // Replaces every state deeper than `depth` on the current path with its
  // registered equivalent, deepest first.
  auto minimize_to = [&](std::size_t depth) {
    while (path.size() > depth + 1) {
      const auto child = path.back();
      path.pop_back();
      auto [it, inserted] = register_.try_emplace(signature(work[child]), child);
      if (!inserted) {
        work[path.back()].transitions.back().second = it->second;
        dead[child] = true;
        work[child] = DafsaState{};
        free_slots.push_back(child);
      }
    }
  };

  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& key = corpus.entries[i].key;
    if (key.empty()) throw Error(ErrorCode::internal_error, "empty key in corpus");
    if (i > 0 && !(corpus.entries[i - 1].key < key)) {
      throw Error(ErrorCode::internal_error, "corpus keys are not strictly ascending");
    }
    const std::u32string cps = utf8::decode(key);
    const auto common = static_cast<std::size_t>(
        std::mismatch(previous.begin(), previous.end(), cps.begin(), cps.end()).first -
        previous.begin());
    minimize_to(common);
    for (std::size_t j = common; j < cps.size(); ++j) {
      std::uint32_t state;
      if (!free_slots.empty()) {
        state = free_slots.back();
        free_slots.pop_back();
        dead[state] = false;
      } else {
        state = static_cast<std::uint32_t>(work.size());
        work.emplace_back();
        dead.push_back(false);
      }
      work[path.back()].transitions.emplace_back(cps[j], state);
      path.push_back(state);
    }
    work[path.back()].is_final = true;
    previous = cps;
  }
  minimize_to(0);

  // Renumber breadth-first from the start state, dropping replaced states.
  std::vector<std::uint32_t> renumber(work.size(), npos);
  std::vector<std::uint32_t> order{0};
  renumber[0] = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (const auto& [label, target] : work[order[head]].transitions) {
      if (dead[target]) throw Error(ErrorCode::internal_error, "arc into replaced state");
      if (renumber[target] == npos) {
        renumber[target] = static_cast<std::uint32_t>(order.size());
        order.push_back(target);
      }
    }
  }
  states_.resize(order.size());
  for (std::size_t id = 0; id < order.size(); ++id) {
    auto& s = work[order[id]];
    for (auto& arc : s.transitions) arc.second = renumber[arc.second];
    states_[id] = std::move(s);
  }
  entries_ = corpus.entries;
  annotate_weights();
}

void FstIndex::annotate_weights() {
  for (auto& s : states_) s.max_weight = 0;
  for (const auto& e : entries_) {
    std::uint32_t state = start_id;
    states_[state].max_weight = std::max(states_[state].max_weight, e.frequency);
    for (char32_t c : utf8::decode(e.key)) {
      state = walk(state, std::u32string_view(&c, 1));
      if (state == npos) throw Error(ErrorCode::internal_error, "value table key not accepted");
      states_[state].max_weight = std::max(states_[state].max_weight, e.frequency);
    }
  }
}

std::uint32_t FstIndex::walk(std::uint32_t from, std::u32string_view labels) const {
  std::uint32_t state = from;
  for (char32_t c : labels) {
    const auto& arcs = states_[state].transitions;
    auto it = std::lower_bound(arcs.begin(), arcs.end(), c,
                               [](const auto& arc, char32_t label) { return arc.first < label; });
    if (it == arcs.end() || it->first != c) return npos;
    state = it->second;
  }
  return state;
}

std::size_t FstIndex::transition_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : states_) n += s.transitions.size();
  return n;
}

const CorpusEntry* FstIndex::find(std::string_view key) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const CorpusEntry& e, std::string_view k) { return e.key < k; });
  if (it == entries_.end() || it->key != key) return nullptr;
  return &*it;
}

bool FstIndex::contains(std::string_view key) const {
  if (key.empty()) throw Error(ErrorCode::invalid_query, "empty key");
  const auto state = walk(start_id, utf8::decode(key));
  return state != npos && states_[state].is_final;
}

TopK FstIndex::complete_topk(std::string_view prefix, std::size_t k) const {
  if (prefix.empty()) throw Error(ErrorCode::invalid_query, "empty prefix");
  if (k == 0) throw Error(ErrorCode::invalid_argument, "k must be positive");

  TopK result;
  const auto origin = walk(start_id, utf8::decode(prefix));
  if (origin == npos) return result;

  // A queue item is either a partial path or a complete key (bound = its
  // frequency). A shared state's max_weight can exceed its predecessor's, so
  // a partial path is bounded by the minimum weight seen along it. Pop order: bound desc, path asc,
  // complete before partial at equal path. Every completion reachable from
  // a remaining item therefore ranks after a popped complete key.
  struct Item {
    std::uint32_t bound;
    std::string path;
    std::uint32_t state;  // npos for complete keys
    const CorpusEntry* entry;
  };
  auto worse = [](const Item& a, const Item& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    if (a.path != b.path) return a.path > b.path;
    return a.state == npos ? false : b.state == npos;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(worse)> queue(worse);
  queue.push({states_[origin].max_weight, std::string(prefix), origin, nullptr});

  while (!queue.empty()) {
    Item item = queue.top();
    queue.pop();
    if (item.state == npos) {
      result.items.push_back({std::move(item.path), item.entry});
      if (result.items.size() == k) {
        result.truncated = !queue.empty();
        break;
      }
      continue;
    }
    const auto& s = states_[item.state];
    if (s.is_final) {
      const CorpusEntry* entry = find(item.path);
      if (entry == nullptr) throw Error(ErrorCode::internal_error, "final state without value");
      queue.push({entry->frequency, item.path, npos, entry});
    }
    for (const auto& [label, target] : s.transitions) {
      std::string next = item.path;
      utf8::append(next, label);
      queue.push({std::min(item.bound, states_[target].max_weight), std::move(next), target, nullptr});
    }
  }
  return result;
}

std::vector<FuzzyMatch> FstIndex::fuzzy(std::string_view query, int max_edits) const {
  if (query.empty()) throw Error(ErrorCode::invalid_query, "empty query");
  if (max_edits < 0 || max_edits > max_fuzzy_edits) {
    throw Error(ErrorCode::invalid_argument, "max_edits must be in [0, 2]");
  }
  const std::u32string q = utf8::decode(query);
  const std::size_t m = q.size();
  const int d = max_edits;
  const int cap = d + 1;  // any value > d is equivalent to "too far"

  std::vector<FuzzyMatch> out;
  std::u32string path;
  // rows[depth] is the edit-distance row for the path of that length; only
  // cells within `d` of the diagonal are computed, the rest hold `cap`.
  // A path longer than m + d cannot survive pruning, so this never grows.
  std::vector<std::vector<int>> rows(m + d + 2, std::vector<int>(m + 1, cap));
  for (std::size_t j = 0; j <= m && j <= static_cast<std::size_t>(d); ++j) {
    rows[0][j] = static_cast<int>(j);
  }

  auto visit = [&](auto&& self, std::uint32_t state) -> void {
    const auto depth = path.size();
    const auto& row = rows[depth];
    const auto& s = states_[state];
    if (s.is_final && row[m] <= d) {
      const std::string key = utf8::encode(path);
      out.push_back({key, find(key), row[m]});
    }
    if (s.transitions.empty() || depth + 1 >= rows.size()) return;
    const std::size_t next_depth = depth + 1;
    const std::size_t lo = next_depth > static_cast<std::size_t>(d) ? next_depth - d : 0;
    const std::size_t hi = std::min(m, next_depth + d);
    for (const auto& [label, target] : s.transitions) {
      auto& next = rows[next_depth];
      std::fill(next.begin(), next.end(), cap);
      int best = cap;
      if (lo == 0) {
        next[0] = std::min(row[0] + 1, cap);
        best = next[0];
      }
      for (std::size_t j = std::max<std::size_t>(lo, 1); j <= hi; ++j) {
        const int v = std::min({row[j] + 1, next[j - 1] + 1,
                                row[j - 1] + (q[j - 1] == label ? 0 : 1)});
        next[j] = std::min(v, cap);
        best = std::min(best, next[j]);
      }
      if (best > d) continue;
      path.push_back(label);
      self(self, target);
      path.pop_back();
    }
  };
  visit(visit, start_id);

  std::sort(out.begin(), out.end(), [](const FuzzyMatch& a, const FuzzyMatch& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.entry->frequency != b.entry->frequency) return a.entry->frequency > b.entry->frequency;
    return a.key < b.key;
  });
  return out;
}

std::string FstIndex::serialize() const {
  Writer w;
  w.raw(std::string_view(magic, sizeof magic));
  w.u32(static_cast<std::uint32_t>(states_.size()));
  for (const auto& s : states_) {
    if (s.transitions.size() > 0xFFFF) {
      throw Error(ErrorCode::format_error, "state fan-out exceeds serialized format limit");
    }
    w.u8(s.is_final ? 1 : 0);
    w.u16(static_cast<std::uint16_t>(s.transitions.size()));
    for (const auto& [label, target] : s.transitions) {
      w.u32(static_cast<std::uint32_t>(label));
      w.u32(target);
      w.u32(states_[target].max_weight);
    }
  }
  w.u32(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    w.bytes(e.key);
    w.u32(e.frequency);
    w.u32(static_cast<std::uint32_t>(e.formula_ids.size()));
    for (const auto& id : e.formula_ids) w.bytes(id);
    w.bytes(e.latex);
  }
  return w.take();
}

FstIndex FstIndex::deserialize(std::string_view bytes) {
  Reader r(bytes);
  if (r.next(sizeof magic) != std::string_view(magic, sizeof magic)) bad_format("bad magic");
  FstIndex index;
  const auto state_count = r.u32();
  if (state_count == 0) bad_format("no states");
  // Each state occupies at least 3 bytes; reject absurd counts early.
  if (state_count > r.remaining() / 3) bad_format("state count exceeds data size");
  index.states_.resize(state_count);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> stored_weights;  // (target, weight)
  for (auto& s : index.states_) {
    const auto final_byte = r.u8();
    if (final_byte > 1) bad_format("finality byte");
    s.is_final = final_byte == 1;
    const auto arcs = r.u16();
    s.transitions.reserve(arcs);
    for (std::uint16_t a = 0; a < arcs; ++a) {
      const auto label = r.u32();
      const auto target = r.u32();
      const auto weight = r.u32();
      if (target >= state_count) bad_format("arc target out of range");
      if (label > 0x10FFFF || (label >= 0xD800 && label <= 0xDFFF)) bad_format("arc label");
      if (!s.transitions.empty() && s.transitions.back().first >= label) {
        bad_format("arcs not strictly ascending");
      }
      s.transitions.emplace_back(static_cast<char32_t>(label), target);
      stored_weights.emplace_back(target, weight);
    }
  }
  const auto entry_count = r.u32();
  if (entry_count == 0) bad_format("empty value table");
  if (entry_count > r.remaining() / 16) bad_format("entry count exceeds data size");
  index.entries_.resize(entry_count);
  for (auto& e : index.entries_) {
    e.key = r.bytes();
    e.frequency = r.u32();
    const auto ids = r.u32();
    if (ids != e.frequency || ids == 0) bad_format("frequency does not match id count");
    if (ids > r.remaining() / 4) bad_format("id count exceeds data size");
    e.formula_ids.reserve(ids);
    for (std::uint32_t i = 0; i < ids; ++i) e.formula_ids.push_back(r.bytes());
    e.latex = r.bytes();
    if (e.key.empty() || !utf8::try_decode(e.key)) bad_format("value table key");
  }
  if (!r.at_end()) bad_format("trailing bytes");
  for (std::size_t i = 1; i < index.entries_.size(); ++i) {
    if (!(index.entries_[i - 1].key < index.entries_[i].key)) bad_format("value table order");
  }
  index.validate();
  index.annotate_weights();
  for (const auto& [target, weight] : stored_weights) {
    if (index.states_[target].max_weight != weight) bad_format("max_weight annotation mismatch");
  }
  return index;
}

// Acyclic, every entry accepted, and the number of accepted strings equals
// the value table size (so the language is exactly the table's keys).
void FstIndex::validate() const {
  const auto n = states_.size();
  std::vector<std::uint32_t> indegree(n, 0);
  for (const auto& s : states_) {
    for (const auto& arc : s.transitions) ++indegree[arc.second];
  }
  if (indegree[start_id] != 0 || std::count(indegree.begin(), indegree.end(), 0u) != 1) {
    bad_format("start state is not the unique source");
  }
  std::vector<std::uint32_t> topo;
  topo.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) topo.push_back(i);
  }
  for (std::size_t head = 0; head < topo.size(); ++head) {
    for (const auto& arc : states_[topo[head]].transitions) {
      if (--indegree[arc.second] == 0) topo.push_back(arc.second);
    }
  }
  if (topo.size() != n) bad_format("automaton has a cycle");

  // Accepted-path count, saturating.
  constexpr std::uint64_t saturated = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> paths(n, 0);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const auto& s = states_[*it];
    std::uint64_t total = s.is_final ? 1 : 0;
    for (const auto& arc : s.transitions) {
      const auto add = paths[arc.second];
      total = (saturated - total < add) ? saturated : total + add;
    }
    if (total == 0) bad_format("dead state");
    paths[*it] = total;
  }
  if (paths[start_id] != entries_.size()) bad_format("accepted set size differs from value table");
  for (const auto& e : entries_) {
    const auto state = walk(start_id, utf8::decode(e.key));
    if (state == npos || !states_[state].is_final) bad_format("value table key not accepted");
  }
}

void FstIndex::save(const std::filesystem::path& path) const {
  const std::string data = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open for writing: " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::io_error, "write failed: " + path.string());
}

FstIndex FstIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open index file: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::io_error, "read failed: " + path.string());
  return deserialize(data);
}

FstIndex build_fst(const Corpus& corpus) { return FstIndex(corpus); }

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace mathqac
