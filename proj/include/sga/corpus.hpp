#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sga {

enum class JudgmentCode { YTA, NTA, ESH, NAH, INFO };
enum class Judgment { Acceptable, Unacceptable };
enum class Source { D, DPlus };
enum class Split { Train, Valid, Test };
enum class RotProvenance { Original, Flipped, Padded };

const char* code_name(JudgmentCode c);
const char* judgment_name(Judgment j);
const char* split_name(Split s);
std::optional<JudgmentCode> code_from_name(std::string_view s);
std::optional<Judgment> judgment_from_name(std::string_view s);
std::optional<Split> split_from_name(std::string_view s);

struct Situation {
  std::string id;
  std::string text;
  Source source = Source::D;
  std::optional<Split> split;
};

struct Comment {
  std::string id;
  std::string annotator_id;
  std::string situation_id;
  std::string text;
  std::optional<JudgmentCode> code;  // set by coding
  std::optional<Judgment> label;     // present iff code is a judgment code
};

struct RuleOfThumb {
  std::string id;
  std::string situation_id;
  std::string text;
  std::optional<Judgment> polarity;  // absent when no judgment phrase matches
  RotProvenance provenance = RotProvenance::Original;
};

// Phrase pairs like "It is okay" <-> "It is not okay", each row tagged with
// the polarity of its first phrase. Both columns act as entries; flipping
// swaps a leading phrase for its counterpart.
class JudgmentPhraseLexicon {
 public:
  struct Entry {
    std::string phrase;
    std::string counterpart;
    Judgment polarity;  // of `phrase`; counterpart carries the opposite
  };

  void add(Entry e);
  std::size_t size() const { return entries_.size(); }

  // Polarity of the leading judgment phrase (longest match wins).
  std::optional<Judgment> polarity_of(std::string_view rot_text) const;

  // Counterpart text with the leading phrase replaced; nullopt if unmatched.
  std::optional<std::string> flip(std::string_view rot_text) const;

 private:
  struct Indexed {
    std::string phrase;       // lowercase not needed; matching is case-insensitive
    std::string replacement;  // counterpart as written in the table
    Judgment polarity;
  };
  std::vector<Entry> entries_;
  std::vector<Indexed> index_;  // longest phrase first
};

JudgmentPhraseLexicon load_judgment_phrases(const std::string& path);

// First judgment code token in reading order, if any.
std::optional<JudgmentCode> parse_judgment_code(std::string_view comment_text);

// NTA/NAH -> Acceptable, YTA/ESH -> Unacceptable, INFO -> absent.
std::optional<Judgment> code_to_label(JudgmentCode code);

// Polarity of the RoT's leading judgment phrase; throws Error("unclassifiable-rot")
// when no phrase matches.
Judgment rot_polarity(std::string_view rot_text, const JudgmentPhraseLexicon& lexicon);

// Extends a situation's rules-of-thumb to exactly k entries: originals first,
// then polarity flips, padded with duplicates of the lowest-id flip (or the
// lowest-id original when nothing matches the phrase lexicon). Guarantees both
// polarities whenever any original matched. Idempotent on its own output.
std::vector<RuleOfThumb> extend_rots(std::vector<RuleOfThumb> rots,
                                     const JudgmentPhraseLexicon& lexicon, int k = 5);

struct Roster {
  std::vector<std::string> annotator_ids;                     // descending comment count
  std::unordered_map<std::string, std::size_t> comment_counts;
  bool contains(const std::string& id) const { return comment_counts.count(id) > 0; }
};

struct CorpusStats {
  std::size_t instances = 0;
  std::size_t unique_situations = 0;  // situations with at least one retained instance
  std::size_t max_per_annotator = 0;
  std::size_t min_per_annotator = 0;
  std::size_t acceptable = 0;
  std::size_t unacceptable = 0;
};

// One coded corpus: situations plus retained (coded, non-INFO) comments, and
// for D the extended rules-of-thumb.
struct Corpus {
  Source source = Source::D;
  std::vector<Situation> situations;  // ordered by id
  std::vector<Comment> comments;      // retained instances, ordered by id
  std::vector<RuleOfThumb> rots;      // D only; grouped per situation, K each

  std::size_t discarded_info = 0;    // INFO-coded comments dropped
  std::size_t discarded_uncoded = 0; // comments with no judgment code
  std::size_t dropped_overlap = 0;   // DPlus situations removed for D valid/test overlap

  const Situation* find_situation(const std::string& id) const;
  std::vector<const RuleOfThumb*> rots_of(const std::string& situation_id) const;
  std::optional<Split> split_of_situation(const std::string& id) const;

  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> situation_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> rot_index_;
};

CorpusStats corpus_stats(const Corpus& corpus);

// ---- ingestion ----

struct IngestPaths {
  std::string d_situations, d_comments, d_rots;
  std::string dplus_situations, dplus_comments;
  std::string judgment_phrases;
};

struct IngestResult {
  Corpus d;
  Corpus dplus;
  Roster roster;
};

// Full pipeline: load + validate, code comments, select the M most active
// annotators in D, filter both corpora to the roster, extend rules-of-thumb
// to K, and assign splits (D keeps its file-provided splits, DPlus gets a
// seeded 80/10/10 with D valid/test overlap dropped from its training data).
IngestResult ingest(const IngestPaths& paths, std::size_t roster_size, int rots_per_situation,
                    std::uint64_t seed);

// Split assignment alone, for tests: D splits preserved, DPlus shuffled
// 80/10/10 by situation id, overlap with D valid/test dropped from DPlus.
void make_splits(Corpus& d, Corpus& dplus, std::uint64_t seed);

}  // namespace sga
