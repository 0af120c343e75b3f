#include "sga/lexicon.hpp"

#include <algorithm>

#include "sga/error.hpp"
#include "sga/io.hpp"
#include "sga/text.hpp"

namespace sga {

std::optional<Foundation> foundation_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFoundationNames.size(); ++i)
    if (name == kFoundationNames[i]) return static_cast<Foundation>(i);
  return std::nullopt;
}

const char* foundation_name(Foundation f) { return kFoundationNames[static_cast<std::size_t>(f)]; }

void MoralLexicon::add(const std::string& pattern, Foundation tag) {
  if (pattern.empty()) throw format_error("empty lexicon pattern");
  std::string lowered = to_lower(pattern);
  bool wildcard = lowered.back() == '*';
  std::string stem = wildcard ? lowered.substr(0, lowered.size() - 1) : lowered;
  if (stem.empty()) throw format_error("bare wildcard pattern");
  if (wildcard) {
    for (const auto& [p, t] : prefixes_)
      if (p == stem) throw format_error("duplicate lexicon pattern: " + pattern);
    prefixes_.emplace_back(stem, tag);
    std::stable_sort(prefixes_.begin(), prefixes_.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  } else {
    if (!exact_.emplace(stem, tag).second)
      throw format_error("duplicate lexicon pattern: " + pattern);
  }
}

std::optional<Foundation> MoralLexicon::match(std::string_view token) const {
  auto it = exact_.find(std::string(token));
  if (it != exact_.end()) return it->second;
  for (const auto& [stem, tag] : prefixes_)
    if (token.size() >= stem.size() && token.substr(0, stem.size()) == stem) return tag;
  return std::nullopt;
}

MoralLexicon load_moral_lexicon(const std::string& path) {
  MoralLexicon lex;
  for (const auto& row : read_tsv(path)) {
    if (row.size() != 2) throw format_error(path + ": expected pattern<TAB>foundation, got " +
                                            std::to_string(row.size()) + " fields");
    auto tag = foundation_from_name(to_lower(trim(row[1])));
    if (!tag) throw format_error(path + ": unknown foundation tag '" + row[1] + "'");
    lex.add(trim(row[0]), *tag);
  }
  return lex;
}

int mf_score(std::string_view text, const MoralLexicon& lexicon) {
  int count = 0;
  for (const auto& token : split_words(text))
    if (lexicon.match(token)) ++count;
  return count;
}

std::map<Foundation, int> mf_profile(std::string_view text, const MoralLexicon& lexicon) {
  std::map<Foundation, int> profile;
  for (const auto& token : split_words(text))
    if (auto tag = lexicon.match(token)) ++profile[*tag];
  return profile;
}

}  // namespace sga
