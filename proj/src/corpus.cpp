#include "sga/corpus.hpp"

#include <algorithm>
#include <set>

#include "sga/error.hpp"
#include "sga/io.hpp"
#include "sga/rng.hpp"
#include "sga/text.hpp"

namespace sga {

namespace {

constexpr std::array<const char*, 5> kCodeNames = {"YTA", "NTA", "ESH", "NAH", "INFO"};

}  // namespace

const char* code_name(JudgmentCode c) { return kCodeNames[static_cast<int>(c)]; }

const char* judgment_name(Judgment j) {
  return j == Judgment::Acceptable ? "acceptable" : "unacceptable";
}

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    default: return "test";
  }
}

std::optional<JudgmentCode> code_from_name(std::string_view s) {
  for (int i = 0; i < 5; ++i)
    if (iequals(s, kCodeNames[i])) return static_cast<JudgmentCode>(i);
  return std::nullopt;
}

std::optional<Judgment> judgment_from_name(std::string_view s) {
  if (iequals(s, "acceptable")) return Judgment::Acceptable;
  if (iequals(s, "unacceptable")) return Judgment::Unacceptable;
  return std::nullopt;
}

std::optional<Split> split_from_name(std::string_view s) {
  if (iequals(s, "train")) return Split::Train;
  if (iequals(s, "valid")) return Split::Valid;
  if (iequals(s, "test")) return Split::Test;
  return std::nullopt;
}

std::optional<JudgmentCode> parse_judgment_code(std::string_view comment_text) {
  for (const auto& token : split_words(comment_text)) {
    if (auto code = code_from_name(token)) return code;
  }
  return std::nullopt;
}

std::optional<Judgment> code_to_label(JudgmentCode code) {
  switch (code) {
    case JudgmentCode::NTA:
    case JudgmentCode::NAH:
      return Judgment::Acceptable;
    case JudgmentCode::YTA:
    case JudgmentCode::ESH:
      return Judgment::Unacceptable;
    case JudgmentCode::INFO:
      return std::nullopt;
  }
  throw validation_error("unknown judgment code");
}

// ---- judgment phrase lexicon ----

void JudgmentPhraseLexicon::add(Entry e) {
  if (e.phrase.empty() || e.counterpart.empty())
    throw format_error("judgment phrase entries must be non-empty");
  Judgment opposite =
      e.polarity == Judgment::Acceptable ? Judgment::Unacceptable : Judgment::Acceptable;
  index_.push_back({e.phrase, e.counterpart, e.polarity});
  index_.push_back({e.counterpart, e.phrase, opposite});
  std::stable_sort(index_.begin(), index_.end(),
                   [](const Indexed& a, const Indexed& b) { return a.phrase.size() > b.phrase.size(); });
  entries_.push_back(std::move(e));
}

std::optional<Judgment> JudgmentPhraseLexicon::polarity_of(std::string_view rot_text) const {
  for (const auto& e : index_)
    if (istarts_with_phrase(rot_text, e.phrase)) return e.polarity;
  return std::nullopt;
}

std::optional<std::string> JudgmentPhraseLexicon::flip(std::string_view rot_text) const {
  for (const auto& e : index_) {
    if (istarts_with_phrase(rot_text, e.phrase)) {
      std::string out = e.replacement;
      out += rot_text.substr(e.phrase.size());
      return out;
    }
  }
  return std::nullopt;
}

JudgmentPhraseLexicon load_judgment_phrases(const std::string& path) {
  JudgmentPhraseLexicon lex;
  for (const auto& row : read_tsv(path)) {
    if (row.size() != 3)
      throw format_error(path + ": expected phrase<TAB>flipped<TAB>polarity");
    auto pol = judgment_from_name(trim(row[2]));
    if (!pol) throw format_error(path + ": unknown polarity '" + row[2] + "'");
    lex.add({trim(row[0]), trim(row[1]), *pol});
  }
  if (lex.size() == 0) throw format_error(path + ": empty judgment phrase lexicon");
  return lex;
}

Judgment rot_polarity(std::string_view rot_text, const JudgmentPhraseLexicon& lexicon) {
  auto pol = lexicon.polarity_of(rot_text);
  if (!pol)
    throw Error("unclassifiable-rot",
                "no judgment phrase matches: \"" + std::string(rot_text.substr(0, 60)) + "\"");
  return *pol;
}

// ---- rule-of-thumb extension ----

namespace {

bool has_both_polarities(const std::vector<RuleOfThumb>& rots) {
  bool acc = false, unacc = false;
  for (const auto& r : rots) {
    if (r.polarity == Judgment::Acceptable) acc = true;
    if (r.polarity == Judgment::Unacceptable) unacc = true;
  }
  return acc && unacc;
}

}  // namespace

std::vector<RuleOfThumb> extend_rots(std::vector<RuleOfThumb> rots,
                                     const JudgmentPhraseLexicon& lexicon, int k) {
  if (rots.empty()) throw validation_error("extend_rots: situation has no rules-of-thumb");
  std::stable_sort(rots.begin(), rots.end(),
                   [](const RuleOfThumb& a, const RuleOfThumb& b) { return a.id < b.id; });

  for (auto& r : rots) r.polarity = lexicon.polarity_of(r.text);
  bool any_match = std::any_of(rots.begin(), rots.end(),
                               [](const RuleOfThumb& r) { return r.polarity.has_value(); });

  // Fixpoint: an already-extended set is returned unchanged.
  if (static_cast<int>(rots.size()) == k && (!any_match || has_both_polarities(rots)))
    return rots;

  std::vector<RuleOfThumb> out = rots;
  std::vector<RuleOfThumb> flips;
  for (const auto& r : rots) {
    auto flipped_text = lexicon.flip(r.text);
    if (!flipped_text) continue;
    RuleOfThumb f;
    f.id = r.id + "-flip";
    f.situation_id = r.situation_id;
    f.text = *flipped_text;
    f.polarity = r.polarity ? std::optional<Judgment>(r.polarity == Judgment::Acceptable
                                                          ? Judgment::Unacceptable
                                                          : Judgment::Acceptable)
                            : std::nullopt;
    f.provenance = RotProvenance::Flipped;
    flips.push_back(std::move(f));
  }
  out.insert(out.end(), flips.begin(), flips.end());

  // Pad with duplicates of the lowest-id flip, falling back to the lowest-id
  // original when no judgment phrase matched anything.
  int pad = 0;
  while (static_cast<int>(out.size()) < k) {
    const RuleOfThumb& src = flips.empty() ? rots.front() : flips.front();
    RuleOfThumb p = src;
    p.id = src.id + "-pad" + std::to_string(pad++);
    p.provenance = RotProvenance::Padded;
    out.push_back(std::move(p));
  }

  if (static_cast<int>(out.size()) > k) out.resize(static_cast<std::size_t>(k));

  // Truncation may have cut away every flip; restore one so both sides of the
  // judgment are represented whenever the lexicon matched at all.
  if (any_match && !flips.empty() && !has_both_polarities(out)) out.back() = flips.front();

  return out;
}

// ---- corpus container ----

const Situation* Corpus::find_situation(const std::string& id) const {
  auto it = situation_index_.find(id);
  return it == situation_index_.end() ? nullptr : &situations[it->second];
}

std::vector<const RuleOfThumb*> Corpus::rots_of(const std::string& situation_id) const {
  std::vector<const RuleOfThumb*> out;
  auto it = rot_index_.find(situation_id);
  if (it == rot_index_.end()) return out;
  out.reserve(it->second.size());
  for (std::size_t i : it->second) out.push_back(&rots[i]);
  return out;
}

std::optional<Split> Corpus::split_of_situation(const std::string& id) const {
  const Situation* s = find_situation(id);
  return s ? s->split : std::nullopt;
}

void Corpus::reindex() {
  situation_index_.clear();
  rot_index_.clear();
  for (std::size_t i = 0; i < situations.size(); ++i) situation_index_[situations[i].id] = i;
  for (std::size_t i = 0; i < rots.size(); ++i) rot_index_[rots[i].situation_id].push_back(i);
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats st;
  st.instances = corpus.comments.size();
  std::set<std::string> situations_seen;
  std::map<std::string, std::size_t> per_annotator;
  for (const auto& c : corpus.comments) {
    situations_seen.insert(c.situation_id);
    ++per_annotator[c.annotator_id];
    if (c.label == Judgment::Acceptable) ++st.acceptable;
    if (c.label == Judgment::Unacceptable) ++st.unacceptable;
  }
  st.unique_situations = situations_seen.size();
  for (const auto& [id, n] : per_annotator) {
    st.max_per_annotator = std::max(st.max_per_annotator, n);
    st.min_per_annotator = st.min_per_annotator == 0 ? n : std::min(st.min_per_annotator, n);
  }
  return st;
}

// ---- ingestion ----

namespace {

std::string require_string(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty())
    throw validation_error(where + ": missing or empty field '" + key + "'");
  return j.at(key).get<std::string>();
}

std::vector<Situation> load_situations(const std::string& path, Source source) {
  std::vector<Situation> out;
  std::set<std::string> ids;
  read_jsonl(path, [&](std::size_t lineno, const Json& j) {
    std::string where = path + ":" + std::to_string(lineno);
    Situation s;
    s.id = require_string(j, "id", where);
    s.text = require_string(j, "text", where);
    s.source = source;
    if (!ids.insert(s.id).second) throw validation_error(where + ": duplicate situation id " + s.id);
    if (j.contains("split") && !j.at("split").is_null()) {
      auto sp = split_from_name(j.at("split").get<std::string>());
      if (!sp) throw validation_error(where + ": unknown split '" + j.at("split").get<std::string>() + "'");
      s.split = sp;
    }
    out.push_back(std::move(s));
  });
  std::sort(out.begin(), out.end(), [](const Situation& a, const Situation& b) { return a.id < b.id; });
  return out;
}

std::vector<Comment> load_comments(const std::string& path) {
  std::vector<Comment> out;
  std::set<std::string> ids;
  read_jsonl(path, [&](std::size_t lineno, const Json& j) {
    std::string where = path + ":" + std::to_string(lineno);
    Comment c;
    c.id = require_string(j, "id", where);
    c.annotator_id = require_string(j, "annotator_id", where);
    c.situation_id = require_string(j, "situation_id", where);
    c.text = j.value("text", std::string());
    if (!ids.insert(c.id).second) throw validation_error(where + ": duplicate comment id " + c.id);
    out.push_back(std::move(c));
  });
  std::sort(out.begin(), out.end(), [](const Comment& a, const Comment& b) { return a.id < b.id; });
  return out;
}

std::vector<RuleOfThumb> load_rots(const std::string& path) {
  std::vector<RuleOfThumb> out;
  std::set<std::string> ids;
  read_jsonl(path, [&](std::size_t lineno, const Json& j) {
    std::string where = path + ":" + std::to_string(lineno);
    RuleOfThumb r;
    r.id = require_string(j, "id", where);
    r.situation_id = require_string(j, "situation_id", where);
    r.text = require_string(j, "text", where);
    if (!ids.insert(r.id).second) throw validation_error(where + ": duplicate rot id " + r.id);
    out.push_back(std::move(r));
  });
  return out;
}

// Codes comments, drops uncoded and INFO instances, and checks referential
// integrity against the situations.
void code_comments(Corpus& corpus) {
  std::vector<Comment> retained;
  for (auto& c : corpus.comments) {
    if (!corpus.find_situation(c.situation_id))
      throw validation_error("comment " + c.id + " references unknown situation " + c.situation_id);
    auto code = parse_judgment_code(c.text);
    if (!code) {
      ++corpus.discarded_uncoded;
      continue;
    }
    auto label = code_to_label(*code);
    if (!label) {
      ++corpus.discarded_info;
      continue;
    }
    c.code = code;
    c.label = label;
    retained.push_back(std::move(c));
  }
  corpus.comments = std::move(retained);
}

Roster select_roster(const Corpus& d, std::size_t m) {
  std::map<std::string, std::size_t> counts;
  for (const auto& c : d.comments) ++counts[c.annotator_id];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() < m)
    throw validation_error("roster: requested " + std::to_string(m) + " annotators but only " +
                           std::to_string(ranked.size()) + " have coded comments in D");
  Roster roster;
  for (std::size_t i = 0; i < m; ++i) {
    roster.annotator_ids.push_back(ranked[i].first);
    roster.comment_counts[ranked[i].first] = ranked[i].second;
  }
  return roster;
}

void filter_to_roster(Corpus& corpus, const Roster& roster) {
  std::vector<Comment> kept;
  for (auto& c : corpus.comments)
    if (roster.contains(c.annotator_id)) kept.push_back(std::move(c));
  corpus.comments = std::move(kept);
}

}  // namespace

void make_splits(Corpus& d, Corpus& dplus, std::uint64_t seed) {
  for (const auto& s : d.situations)
    if (!s.split) throw validation_error("D situation " + s.id + " is missing its split label");

  std::vector<std::string> ids;
  for (auto& s : dplus.situations) {
    if (s.split) throw validation_error("DPlus situation " + s.id + " carries a split label; splits for DPlus are assigned here");
    ids.push_back(s.id);
  }
  std::sort(ids.begin(), ids.end());
  Rng rng(seed ^ fnv1a("dplus-splits"));
  rng.shuffle(ids);

  std::size_t n = ids.size();
  std::size_t n_train = n * 8 / 10;
  std::size_t n_valid = n / 10;
  std::map<std::string, Split> assignment;
  for (std::size_t i = 0; i < n; ++i) {
    Split sp = i < n_train ? Split::Train : (i < n_train + n_valid ? Split::Valid : Split::Test);
    assignment[ids[i]] = sp;
  }

  // D valid/test situations, keyed by id and by exact text, define the
  // leakage set for DPlus training data.
  std::set<std::string> held_ids, held_texts;
  for (const auto& s : d.situations) {
    if (s.split == Split::Valid || s.split == Split::Test) {
      held_ids.insert(s.id);
      held_texts.insert(s.text);
    }
  }

  std::vector<Situation> kept;
  std::set<std::string> dropped;
  for (auto& s : dplus.situations) {
    Split sp = assignment.at(s.id);
    bool overlaps = held_ids.count(s.id) > 0 || held_texts.count(s.text) > 0;
    if (sp == Split::Train && overlaps) {
      dropped.insert(s.id);
      ++dplus.dropped_overlap;
      continue;
    }
    s.split = sp;
    kept.push_back(std::move(s));
  }
  dplus.situations = std::move(kept);

  if (!dropped.empty()) {
    std::vector<Comment> comments;
    for (auto& c : dplus.comments)
      if (!dropped.count(c.situation_id)) comments.push_back(std::move(c));
    dplus.comments = std::move(comments);
  }
  dplus.reindex();

  std::size_t train_left = 0;
  for (const auto& s : dplus.situations)
    if (s.split == Split::Train) ++train_left;
  if (n > 0 && train_left == 0)
    throw validation_error("DPlus training split is empty after removing D valid/test overlap");
}

IngestResult ingest(const IngestPaths& paths, std::size_t roster_size, int rots_per_situation,
                    std::uint64_t seed) {
  IngestResult result;

  result.d.source = Source::D;
  result.d.situations = load_situations(paths.d_situations, Source::D);
  result.d.comments = load_comments(paths.d_comments);
  result.d.reindex();
  code_comments(result.d);

  result.dplus.source = Source::DPlus;
  result.dplus.situations = load_situations(paths.dplus_situations, Source::DPlus);
  result.dplus.comments = load_comments(paths.dplus_comments);
  result.dplus.reindex();
  code_comments(result.dplus);

  result.roster = select_roster(result.d, roster_size);
  filter_to_roster(result.d, result.roster);
  filter_to_roster(result.dplus, result.roster);

  auto phrases = load_judgment_phrases(paths.judgment_phrases);
  auto raw_rots = load_rots(paths.d_rots);
  std::map<std::string, std::vector<RuleOfThumb>> by_situation;
  for (auto& r : raw_rots) {
    if (!result.d.find_situation(r.situation_id))
      throw validation_error("rot " + r.id + " references unknown situation " + r.situation_id);
    by_situation[r.situation_id].push_back(std::move(r));
  }
  for (auto& [sid, rots] : by_situation) {
    auto extended = extend_rots(std::move(rots), phrases, rots_per_situation);
    for (auto& r : extended) result.d.rots.push_back(std::move(r));
  }
  result.d.reindex();

  make_splits(result.d, result.dplus, seed);
  result.d.reindex();

  return result;
}

}  // namespace sga
