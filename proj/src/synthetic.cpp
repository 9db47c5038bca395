#include "mathqac/synthetic.hpp"

#include <array>
#include <string_view>
#include <unordered_set>

#include "mathqac/error.hpp"
#include "mathqac/utf8.hpp"

namespace mathqac::synthetic {

std::uint64_t next(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t uniform(std::uint64_t& state, std::uint64_t bound) noexcept {
  return bound == 0 ? 0 : next(state) % bound;
}

namespace {

constexpr std::array<std::string_view, 14> variables = {
    "a", "b", "c", "x", "y", "z", "n", "k", "A", "B", "X", "f(x)", "e", "i"};
constexpr std::array<std::string_view, 9> symbols = {
    "\\alpha", "\\beta", "\\pi", "\\theta", "\\lambda", "\\Sigma", "\\infty", "\\mu", "\\omega"};
constexpr std::array<std::string_view, 6> operators = {"+", "-", "=", "\\cdot ", "\\leq ", "/"};
constexpr std::array<std::string_view, 5> functions = {"\\sin", "\\cos", "\\log", "\\exp", "\\ln"};

template <std::size_t N>
std::string_view pick(std::uint64_t& s, const std::array<std::string_view, N>& from) {
  return from[uniform(s, N)];
}

std::string atom(std::uint64_t& s, int depth);

std::string expression(std::uint64_t& s, int depth) {
  std::string out = atom(s, depth);
  const auto terms = uniform(s, depth > 1 ? 2 : 4);
  for (std::uint64_t t = 0; t < terms; ++t) {
    out += pick(s, operators);
    out += atom(s, depth);
  }
  return out;
}

std::string atom(std::uint64_t& s, int depth) {
  const auto roll = uniform(s, depth >= 2 ? 5 : 10);
  switch (roll) {
    case 0: case 1: return std::string(pick(s, variables));
    case 2: return std::to_string(uniform(s, 20));
    case 3: return std::string(pick(s, symbols));
    case 4: return std::string(pick(s, variables)) + "^{" + std::to_string(uniform(s, 5) + 2) + "}";
    case 5: return "\\frac{" + expression(s, depth + 1) + "}{" + expression(s, depth + 1) + "}";
    case 6: return "\\sqrt{" + expression(s, depth + 1) + "}";
    case 7: return std::string(pick(s, functions)) + "(" + expression(s, depth + 1) + ")";
    case 8: return std::string(pick(s, variables)) + "_{" + std::string(pick(s, variables)) + "}";
    default: return std::string(pick(s, variables)) + "^{" + expression(s, depth + 1) + "}";
  }
}

}  // namespace

std::string random_formula(std::uint64_t& state) { return expression(state, 0); }

std::vector<FormulaRecord> formula_records(std::size_t records, std::size_t distinct,
                                           std::uint64_t seed) {
  if (distinct == 0 || distinct > records) {
    throw Error(ErrorCode::invalid_argument, "need 0 < distinct <= records");
  }
  std::uint64_t s = seed;
  std::vector<std::string> raw;
  std::unordered_set<std::string> seen;
  raw.reserve(distinct);
  std::size_t attempts = 0;
  while (raw.size() < distinct) {
    if (++attempts > distinct * 50 + 1000) {
      throw Error(ErrorCode::internal_error, "formula grammar exhausted");
    }
    auto f = random_formula(s);
    // Tag a share of formulas so large corpora stay distinct.
    if (uniform(s, 4) == 0) f += "+" + std::to_string(uniform(s, 1000));
    if (seen.insert(normalize(f)).second) raw.push_back(std::move(f));
  }

  std::vector<FormulaRecord> out;
  out.reserve(records);
  for (std::size_t i = 0; i < records; ++i) {
    // Every key appears once; the surplus is skewed toward low indices.
    const std::size_t key = i < distinct ? i : uniform(s, uniform(s, distinct) + 1);
    FormulaRecord r;
    r.formula_id = "Synthetic_" + std::to_string(i / 16) + ":" + std::to_string(i % 16);
    r.latex = raw[key];
    out.push_back(std::move(r));
  }
  return out;
}

Corpus formula_corpus(std::size_t keys, std::uint64_t seed) {
  return build_corpus(formula_records(keys + keys / 2, keys, seed));
}

std::vector<std::string> prefix_workload(const Corpus& corpus, std::size_t count,
                                         std::uint64_t seed) {
  std::uint64_t s = seed;
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count && !corpus.empty(); ++i) {
    const auto& key = corpus.entries[uniform(s, corpus.size())].key;
    const auto len = utf8::length(key);
    out.push_back(utf8::take(key, 1 + uniform(s, len)));
  }
  return out;
}

}  // namespace mathqac::synthetic
