#include "mathqac/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <tuple>

#include <unicode/uchar.h>

#include "mathqac/error.hpp"
#include "mathqac/utf8.hpp"

namespace mathqac {

namespace {

constexpr bool is_space(char32_t c) noexcept {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' ||
         c == U'\f';
}

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

char32_t to_lower(char32_t c) noexcept {
  if (c < 0x80) {
    return (c >= U'A' && c <= U'Z') ? c + (U'a' - U'A') : c;
  }
  return static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
}

}  // namespace

std::string normalize(std::string_view latex) {
  const std::u32string decoded = utf8::decode(trim(latex));
  std::string out;
  out.reserve(latex.size());
  for (char32_t c : decoded) utf8::append(out, to_lower(c));
  return out;
}

std::vector<std::string> prefix_set(std::string_view s) {
  if (s.empty()) throw Error(ErrorCode::invalid_query, "prefix_set of empty string");
  const std::u32string cps = utf8::decode(s);
  std::vector<std::string> out;
  out.reserve(cps.size());
  std::string current;
  for (char32_t c : cps) {
    utf8::append(current, c);
    out.push_back(current);
  }
  return out;
}

bool is_valid_formula_id(std::string_view id) {
  const auto colon = id.find(':');
  if (colon == std::string_view::npos || colon == 0) return false;
  if (id.find(':', colon + 1) != std::string_view::npos) return false;
  const auto ordinal = id.substr(colon + 1);
  return !ordinal.empty() &&
         std::all_of(ordinal.begin(), ordinal.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

Corpus build_corpus(std::vector<FormulaRecord> records, std::size_t malformed_lines) {
  std::vector<FormulaRecord> valid;
  valid.reserve(records.size());
  for (auto& r : records) {
    const auto raw = trim(r.latex);
    if (!is_valid_formula_id(r.formula_id) || raw.empty() || !utf8::try_decode(raw)) {
      ++malformed_lines;
      continue;
    }
    r.normalized = normalize(raw);
    valid.push_back(std::move(r));
  }

  // Resolve repeated ids independently of input order.
  std::sort(valid.begin(), valid.end(), [](const auto& a, const auto& b) {
    return std::tie(a.formula_id, a.normalized, a.latex) <
           std::tie(b.formula_id, b.normalized, b.latex);
  });
  const auto before = valid.size();
  valid.erase(std::unique(valid.begin(), valid.end(),
                          [](const auto& a, const auto& b) {
                            return a.formula_id == b.formula_id;
                          }),
              valid.end());
  malformed_lines += before - valid.size();

  if (valid.empty()) throw Error(ErrorCode::empty_corpus, "corpus has no valid records");

  std::sort(valid.begin(), valid.end(), [](const auto& a, const auto& b) {
    return std::tie(a.normalized, a.formula_id) < std::tie(b.normalized, b.formula_id);
  });

  Corpus corpus;
  corpus.total_records = valid.size();
  corpus.malformed_lines = malformed_lines;
  for (auto& r : valid) {
    if (corpus.entries.empty() || corpus.entries.back().key != r.normalized) {
      CorpusEntry entry;
      entry.key = r.normalized;
      entry.latex = std::string(trim(r.latex));
      corpus.entries.push_back(std::move(entry));
    }
    auto& entry = corpus.entries.back();
    entry.formula_ids.push_back(std::move(r.formula_id));
    ++entry.frequency;
  }
  return corpus;
}

Corpus load_corpus(std::istream& in) {
  std::vector<FormulaRecord> records;
  std::size_t malformed = 0;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::string_view view(line);
    if (first && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    first = false;
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (trim(view).empty()) continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos) {
      ++malformed;
      continue;
    }
    FormulaRecord r;
    r.formula_id = std::string(trim(view.substr(0, tab)));
    r.latex = std::string(view.substr(tab + 1));
    records.push_back(std::move(r));
  }
  if (in.bad()) throw Error(ErrorCode::io_error, "failed reading corpus stream");
  return build_corpus(std::move(records), malformed);
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open corpus file: " + path.string());
  return load_corpus(in);
}

}  // namespace mathqac
