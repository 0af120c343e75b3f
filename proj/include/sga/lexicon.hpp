#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sga {

enum class Foundation {
  Care,
  Harm,
  Fairness,
  Cheating,
  Loyalty,
  Betrayal,
  Authority,
  Subversion,
  Purity,
  Degradation,
};

inline constexpr std::array<const char*, 10> kFoundationNames = {
    "care",      "harm",       "fairness", "cheating", "loyalty",
    "betrayal",  "authority",  "subversion", "purity", "degradation"};

std::optional<Foundation> foundation_from_name(std::string_view name);
const char* foundation_name(Foundation f);

// Word list mapping exact tokens or stem prefixes (trailing '*') to a moral
// foundation. Scoring counts matched tokens; the tags are kept for reports.
class MoralLexicon {
 public:
  void add(const std::string& pattern, Foundation tag);  // throws on duplicates

  std::size_t size() const { return exact_.size() + prefixes_.size(); }

  // Foundation of `token` if any entry matches; exact entries win over
  // prefixes, longer prefixes over shorter.
  std::optional<Foundation> match(std::string_view token) const;

 private:
  std::unordered_map<std::string, Foundation> exact_;
  std::vector<std::pair<std::string, Foundation>> prefixes_;  // longest first
};

// Tab-separated file: pattern<TAB>foundation, one per line, '#' comments.
MoralLexicon load_moral_lexicon(const std::string& path);

// Number of tokens of `text` matching the lexicon. Tokenization lowercases
// and splits on non-alphanumerics; a token counts at most once no matter how
// many patterns it matches.
int mf_score(std::string_view text, const MoralLexicon& lexicon);

// Same count, broken down by foundation of the first matching entry.
std::map<Foundation, int> mf_profile(std::string_view text, const MoralLexicon& lexicon);

}  // namespace sga
