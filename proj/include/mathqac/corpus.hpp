#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mathqac {

/// One line of the corpus file: "PageName:ordinal" TAB raw LaTeX.
struct FormulaRecord {
  std::string formula_id;
  std::string latex;
  std::string normalized;

  bool operator==(const FormulaRecord&) const = default;
};

/// All records sharing one normalized key.
struct CorpusEntry {
  std::string key;
  std::vector<std::string> formula_ids;  // ascending, unique
  std::uint32_t frequency = 0;           // == formula_ids.size()
  std::string latex;                     // raw LaTeX of formula_ids.front()

  bool operator==(const CorpusEntry&) const = default;
};

struct Corpus {
  std::vector<CorpusEntry> entries;  // strictly ascending by key
  std::size_t total_records = 0;
  std::size_t malformed_lines = 0;

  bool operator==(const Corpus&) const = default;

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }
};

/// Lowercases every code point that has a simple lowercase mapping and trims
/// surrounding whitespace. Everything else passes through byte-for-byte.
/// LaTeX control words are not exempt: "\Sigma" becomes "\sigma".
std::string normalize(std::string_view latex);

/// All non-empty prefixes of `s`, shortest first, split on code points.
std::vector<std::string> prefix_set(std::string_view s);

/// True for "PageName:ordinal" with exactly one ':' and a decimal ordinal.
bool is_valid_formula_id(std::string_view id);

/// Groups records by normalized key. Records with a repeated formula_id are
/// dropped (all but the smallest by (normalized, latex)) and counted as
/// malformed so the result does not depend on input order.
Corpus build_corpus(std::vector<FormulaRecord> records,
                    std::size_t malformed_lines = 0);

Corpus load_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace mathqac
