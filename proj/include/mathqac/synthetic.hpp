#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mathqac/corpus.hpp"

namespace mathqac::synthetic {

/// LaTeX-looking formula built from a small token grammar (fractions,
/// powers, Greek letters, operators). Deterministic for a given seed.
std::string random_formula(std::uint64_t& state);

/// `records` formula records over exactly `distinct` normalized keys
/// (distinct <= records). Ids are "Synthetic_<n>:<ordinal>".
std::vector<FormulaRecord> formula_records(std::size_t records,
                                           std::size_t distinct,
                                           std::uint64_t seed);

/// Corpus of `keys` distinct formulas with skewed frequencies.
Corpus formula_corpus(std::size_t keys, std::uint64_t seed);

/// Random prefixes of random keys, for latency workloads.
std::vector<std::string> prefix_workload(const Corpus& corpus,
                                         std::size_t count,
                                         std::uint64_t seed);

/// splitmix64 step; used so generated data is identical on every platform.
std::uint64_t next(std::uint64_t& state) noexcept;
std::uint64_t uniform(std::uint64_t& state, std::uint64_t bound) noexcept;

}  // namespace mathqac::synthetic
