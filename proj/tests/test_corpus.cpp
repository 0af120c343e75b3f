#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "sga/corpus.hpp"
#include "sga/error.hpp"
#include "sga/io.hpp"
#include "test_util.hpp"

using namespace sga;

namespace {

JudgmentPhraseLexicon shipped_phrases() {
  return load_judgment_phrases(std::string(SGA_DATA_DIR) + "/judgment_phrases.tsv");
}

RuleOfThumb rot(const std::string& id, const std::string& text) {
  RuleOfThumb r;
  r.id = id;
  r.situation_id = "s1";
  r.text = text;
  return r;
}

}  // namespace

TEST_CASE("parse_judgment_code finds the first code in reading order") {
  CHECK(parse_judgment_code("NTA, you did nothing wrong.") == JudgmentCode::NTA);
  CHECK(parse_judgment_code("") == std::nullopt);
  CHECK(parse_judgment_code("I'd say INFO but leaning YTA") == JudgmentCode::INFO);
  CHECK(parse_judgment_code("nah. that's fine") == JudgmentCode::NAH);  // case-insensitive
  CHECK(parse_judgment_code("the ANTAGONIST here") == std::nullopt);    // word boundary
  CHECK(parse_judgment_code("esh-ish but mostly YTA") == JudgmentCode::ESH);
}

TEST_CASE("parse_judgment_code ignores everything after the first code") {
  std::string head = "Honestly YTA because reasons.";
  CHECK(parse_judgment_code(head + " Also NTA maybe. INFO?") ==
        parse_judgment_code(head + " INFO? Also NTA maybe."));
  CHECK(parse_judgment_code(head + " trailing") == JudgmentCode::YTA);
}

TEST_CASE("code_to_label groups codes per the community scheme") {
  CHECK(code_to_label(JudgmentCode::NTA) == Judgment::Acceptable);
  CHECK(code_to_label(JudgmentCode::NAH) == Judgment::Acceptable);
  CHECK(code_to_label(JudgmentCode::YTA) == Judgment::Unacceptable);
  CHECK(code_to_label(JudgmentCode::ESH) == Judgment::Unacceptable);
  CHECK(code_to_label(JudgmentCode::INFO) == std::nullopt);
}

TEST_CASE("rot_polarity reads the leading judgment phrase") {
  auto lex = shipped_phrases();
  CHECK(rot_polarity("It is okay to keep the dog.", lex) == Judgment::Acceptable);
  CHECK(rot_polarity("It is not okay to keep the dog.", lex) == Judgment::Unacceptable);
  CHECK(rot_polarity("It is rude to ignore guests.", lex) == Judgment::Unacceptable);
  CHECK(rot_polarity("It is polite to greet guests.", lex) == Judgment::Acceptable);
  CHECK_THROWS_WITH_AS(rot_polarity("Dogs are great.", lex), doctest::Contains("no judgment"),
                       Error);
  // prefix must end on a word boundary
  CHECK_THROWS_AS(rot_polarity("It is okayish to do that.", lex), Error);
}

TEST_CASE("extend_rots adds the polarity-flipped counterpart") {
  auto lex = shipped_phrases();
  auto out = extend_rots({rot("r1", "It is okay to not want to randomly make new friends.")}, lex);
  REQUIRE(out.size() == 5);
  CHECK(out[0].text == "It is okay to not want to randomly make new friends.");
  CHECK(out[0].polarity == Judgment::Acceptable);
  CHECK(out[0].provenance == RotProvenance::Original);
  CHECK(out[1].text == "It is not okay to not want to randomly make new friends.");
  CHECK(out[1].polarity == Judgment::Unacceptable);
  CHECK(out[1].provenance == RotProvenance::Flipped);
  for (std::size_t i = 2; i < 5; ++i) CHECK(out[i].provenance == RotProvenance::Padded);
  bool acc = false, unacc = false;
  for (const auto& r : out) {
    acc = acc || r.polarity == Judgment::Acceptable;
    unacc = unacc || r.polarity == Judgment::Unacceptable;
  }
  CHECK(acc);
  CHECK(unacc);
}

TEST_CASE("extend_rots: two originals pad with a duplicate flip") {
  auto lex = shipped_phrases();
  auto out = extend_rots({rot("r1", "It is okay to leave early."),
                          rot("r2", "It is rude to shout at staff.")},
                         lex);
  REQUIRE(out.size() == 5);
  CHECK(out[0].provenance == RotProvenance::Original);
  CHECK(out[1].provenance == RotProvenance::Original);
  CHECK(out[2].provenance == RotProvenance::Flipped);
  CHECK(out[3].provenance == RotProvenance::Flipped);
  CHECK(out[4].provenance == RotProvenance::Padded);
  CHECK(out[4].text == out[2].text);  // duplicate of the lowest-id flip
}

TEST_CASE("extend_rots is idempotent on its own output") {
  auto lex = shipped_phrases();
  std::vector<std::vector<RuleOfThumb>> seeds = {
      {rot("r1", "It is okay to leave early.")},
      {rot("r1", "It is okay to leave early."), rot("r2", "It is rude to shout.")},
      {rot("r1", "No judgment phrase here."), rot("r2", "Plain text again.")},
  };
  for (auto& s : seeds) {
    auto once = extend_rots(s, lex);
    auto twice = extend_rots(once, lex);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(once[i].id == twice[i].id);
      CHECK(once[i].text == twice[i].text);
    }
  }
}

TEST_CASE("extend_rots keeps both polarities under truncation") {
  auto lex = shipped_phrases();
  std::vector<RuleOfThumb> rots;
  for (int i = 0; i < 5; ++i)
    rots.push_back(rot("r" + std::to_string(i), "It is okay to do thing " + std::to_string(i)));
  auto out = extend_rots(rots, lex);
  REQUIRE(out.size() == 5);
  bool unacc = false;
  for (const auto& r : out) unacc = unacc || r.polarity == Judgment::Unacceptable;
  CHECK(unacc);
}

TEST_CASE("extend_rots rejects empty input and leaves unmatched texts unclassified") {
  auto lex = shipped_phrases();
  CHECK_THROWS_AS(extend_rots({}, lex), Error);
  auto out = extend_rots({rot("r1", "Sky is blue.")}, lex);
  REQUIRE(out.size() == 5);
  for (const auto& r : out) CHECK(!r.polarity.has_value());
}

namespace {

Corpus make_d(int n_train = 2, int n_valid = 1, int n_test = 1) {
  Corpus d;
  d.source = Source::D;
  int id = 0;
  auto add = [&](Split split, int count) {
    for (int i = 0; i < count; ++i) {
      Situation s;
      s.id = "d" + std::to_string(id++);
      s.text = "d text " + s.id;
      s.source = Source::D;
      s.split = split;
      d.situations.push_back(std::move(s));
    }
  };
  add(Split::Train, n_train);
  add(Split::Valid, n_valid);
  add(Split::Test, n_test);
  d.reindex();
  return d;
}

Corpus make_dplus(int n) {
  Corpus p;
  p.source = Source::DPlus;
  for (int i = 0; i < n; ++i) {
    Situation s;
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%03d", i);
    s.id = buf;
    s.text = "p text " + s.id;
    s.source = Source::DPlus;
    p.situations.push_back(std::move(s));
  }
  p.reindex();
  return p;
}

}  // namespace

TEST_CASE("make_splits: 80/10/10 and determinism") {
  Corpus d = make_d();
  Corpus p1 = make_dplus(100);
  make_splits(d, p1, 42);
  std::size_t train = 0, valid = 0, test = 0;
  for (const auto& s : p1.situations) {
    if (s.split == Split::Train) ++train;
    if (s.split == Split::Valid) ++valid;
    if (s.split == Split::Test) ++test;
  }
  CHECK(train == 80);
  CHECK(valid == 10);
  CHECK(test == 10);

  Corpus d2 = make_d();
  Corpus p2 = make_dplus(100);
  make_splits(d2, p2, 42);
  for (std::size_t i = 0; i < p1.situations.size(); ++i)
    CHECK(p1.situations[i].split == p2.situations[i].split);

  Corpus d3 = make_d();
  Corpus p3 = make_dplus(100);
  make_splits(d3, p3, 43);
  bool differs = false;
  for (std::size_t i = 0; i < p1.situations.size(); ++i)
    differs = differs || p1.situations[i].split != p3.situations[i].split;
  CHECK(differs);  // different seed, different shuffle
}

TEST_CASE("make_splits drops DPlus training situations that leak D valid/test") {
  Corpus d = make_d();
  // find what D's test situation text is and plant it across DPlus
  std::string held_text;
  for (const auto& s : d.situations)
    if (s.split == Split::Test) held_text = s.text;

  Corpus p = make_dplus(50);
  for (auto& s : p.situations) s.text = held_text;  // every DPlus situation collides
  Comment c;
  c.id = "c1";
  c.annotator_id = "a";
  c.situation_id = p.situations[0].id;
  c.text = "NTA fine";
  p.comments.push_back(c);
  p.reindex();

  CHECK_THROWS_WITH_AS(make_splits(d, p, 1), doctest::Contains("empty"), Error);

  // partial overlap: only one DPlus situation collides
  Corpus d2 = make_d();
  Corpus p2 = make_dplus(50);
  p2.situations[10].text = held_text;
  make_splits(d2, p2, 1);
  for (const auto& s : p2.situations) {
    if (s.id == "p010") CHECK(s.split != Split::Train);
    CHECK(s.split.has_value());
  }
}

TEST_CASE("make_splits validates split preconditions") {
  Corpus d = make_d();
  d.situations[0].split = std::nullopt;
  Corpus p = make_dplus(10);
  CHECK_THROWS_AS(make_splits(d, p, 1), Error);

  Corpus d2 = make_d();
  Corpus p2 = make_dplus(10);
  p2.situations[0].split = Split::Train;
  CHECK_THROWS_AS(make_splits(d2, p2, 1), Error);
}

TEST_CASE("corpus_stats on an empty corpus is all zeros") {
  Corpus c;
  CorpusStats st = corpus_stats(c);
  CHECK(st.instances == 0);
  CHECK(st.unique_situations == 0);
  CHECK(st.max_per_annotator == 0);
  CHECK(st.min_per_annotator == 0);
  CHECK(st.acceptable == 0);
  CHECK(st.unacceptable == 0);
}

TEST_CASE("ingest codes, filters to the roster, and reports stats") {
  std::string dir = test::scratch_dir("ingest");
  // D: 4 situations with splits, comments from 3 annotators (ann2 most active)
  write_jsonl(dir + "/ds.jsonl",
              {Json{{"id", "s1"}, {"text", "alpha beta"}, {"source", "D"}, {"split", "train"}},
               Json{{"id", "s2"}, {"text", "gamma delta"}, {"source", "D"}, {"split", "train"}},
               Json{{"id", "s3"}, {"text", "epsilon"}, {"source", "D"}, {"split", "valid"}},
               Json{{"id", "s4"}, {"text", "zeta"}, {"source", "D"}, {"split", "test"}}});
  write_jsonl(
      dir + "/dc.jsonl",
      {Json{{"id", "c1"}, {"annotator_id", "ann1"}, {"situation_id", "s1"}, {"text", "NTA sure"}},
       Json{{"id", "c2"}, {"annotator_id", "ann2"}, {"situation_id", "s1"}, {"text", "YTA nope"}},
       Json{{"id", "c3"}, {"annotator_id", "ann2"}, {"situation_id", "s2"}, {"text", "ESH all"}},
       Json{{"id", "c4"}, {"annotator_id", "ann2"}, {"situation_id", "s3"}, {"text", "NAH ok"}},
       Json{{"id", "c5"}, {"annotator_id", "ann3"}, {"situation_id", "s4"}, {"text", "INFO ?"}},
       Json{{"id", "c6"}, {"annotator_id", "ann1"}, {"situation_id", "s2"}, {"text", "no code"}},
       Json{{"id", "c7"}, {"annotator_id", "ann3"}, {"situation_id", "s4"}, {"text", "YTA bad"}}});
  write_jsonl(dir + "/dr.jsonl",
              {Json{{"id", "r1"}, {"situation_id", "s1"}, {"text", "It is okay to do alpha."}},
               Json{{"id", "r2"}, {"situation_id", "s2"}, {"text", "It is wrong to do gamma."}},
               Json{{"id", "r3"}, {"situation_id", "s3"}, {"text", "It is okay to do epsilon."}},
               Json{{"id", "r4"}, {"situation_id", "s4"}, {"text", "It is okay to do zeta."}}});
  write_jsonl(dir + "/ps.jsonl", {Json{{"id", "q1"}, {"text", "eta theta"}, {"source", "DPlus"}},
                                  Json{{"id", "q2"}, {"text", "iota"}, {"source", "DPlus"}}});
  write_jsonl(
      dir + "/pc.jsonl",
      {Json{{"id", "k1"}, {"annotator_id", "ann2"}, {"situation_id", "q1"}, {"text", "NTA yes"}},
       Json{{"id", "k2"}, {"annotator_id", "ann1"}, {"situation_id", "q2"}, {"text", "YTA no"}},
       Json{{"id", "k3"}, {"annotator_id", "ann9"}, {"situation_id", "q2"}, {"text", "NTA hm"}}});

  IngestPaths paths;
  paths.d_situations = dir + "/ds.jsonl";
  paths.d_comments = dir + "/dc.jsonl";
  paths.d_rots = dir + "/dr.jsonl";
  paths.dplus_situations = dir + "/ps.jsonl";
  paths.dplus_comments = dir + "/pc.jsonl";
  paths.judgment_phrases = std::string(SGA_DATA_DIR) + "/judgment_phrases.tsv";

  IngestResult result = ingest(paths, 2, 5, 7);

  // roster: ann2 (3 coded comments) then ann1 (1 coded; c6 uncoded)
  REQUIRE(result.roster.annotator_ids.size() == 2);
  CHECK(result.roster.annotator_ids[0] == "ann2");
  CHECK(result.roster.annotator_ids[1] == "ann1");

  CorpusStats ds = corpus_stats(result.d);
  CHECK(ds.instances == 4);  // c1, c2, c3, c4 (c5 INFO, c6 uncoded, c7 non-roster)
  CHECK(ds.unique_situations == 3);
  CHECK(ds.max_per_annotator == 3);
  CHECK(ds.min_per_annotator == 1);
  CHECK(ds.acceptable == 2);
  CHECK(ds.unacceptable == 2);
  CHECK(result.d.discarded_info == 1);
  CHECK(result.d.discarded_uncoded == 1);

  // every retained comment satisfies label = code_to_label(code)
  for (const auto& c : result.d.comments) {
    REQUIRE(c.code.has_value());
    CHECK(c.label == code_to_label(*c.code));
  }

  // all D situations got exactly 5 rules-of-thumb with both polarities
  for (const auto& s : result.d.situations) {
    auto rots = result.d.rots_of(s.id);
    REQUIRE(rots.size() == 5);
    bool acc = false, unacc = false;
    for (const auto* r : rots) {
      acc = acc || r->polarity == Judgment::Acceptable;
      unacc = unacc || r->polarity == Judgment::Unacceptable;
    }
    CHECK(acc);
    CHECK(unacc);
  }

  // DPlus filtered to the roster (ann9 dropped), splits assigned
  CorpusStats ps = corpus_stats(result.dplus);
  CHECK(ps.instances == 2);
  for (const auto& s : result.dplus.situations) CHECK(s.split.has_value());
}

TEST_CASE("ingest rejects broken referential integrity") {
  std::string dir = test::scratch_dir("ingest_bad");
  write_jsonl(dir + "/ds.jsonl",
              {Json{{"id", "s1"}, {"text", "alpha"}, {"source", "D"}, {"split", "train"}}});
  write_jsonl(dir + "/dc.jsonl", {Json{{"id", "c1"},
                                       {"annotator_id", "ann1"},
                                       {"situation_id", "sX"},
                                       {"text", "NTA"}}});
  write_jsonl(dir + "/dr.jsonl", {Json{{"id", "r1"}, {"situation_id", "s1"}, {"text", "It is okay."}}});
  write_jsonl(dir + "/ps.jsonl", {Json{{"id", "q1"}, {"text", "eta"}, {"source", "DPlus"}}});
  write_jsonl(dir + "/pc.jsonl", {Json{{"id", "k1"},
                                       {"annotator_id", "ann1"},
                                       {"situation_id", "q1"},
                                       {"text", "NTA"}}});
  IngestPaths paths{dir + "/ds.jsonl", dir + "/dc.jsonl", dir + "/dr.jsonl",
                    dir + "/ps.jsonl", dir + "/pc.jsonl",
                    std::string(SGA_DATA_DIR) + "/judgment_phrases.tsv"};
  CHECK_THROWS_WITH_AS(ingest(paths, 1, 5, 7), doctest::Contains("unknown situation"), Error);
}

TEST_CASE("duplicate ids are rejected at load") {
  std::string dir = test::scratch_dir("ingest_dup");
  write_jsonl(dir + "/ds.jsonl",
              {Json{{"id", "s1"}, {"text", "a"}, {"source", "D"}, {"split", "train"}},
               Json{{"id", "s1"}, {"text", "b"}, {"source", "D"}, {"split", "train"}}});
  write_jsonl(dir + "/dc.jsonl", std::vector<Json>{});
  write_jsonl(dir + "/dr.jsonl", std::vector<Json>{});
  write_jsonl(dir + "/ps.jsonl", std::vector<Json>{});
  write_jsonl(dir + "/pc.jsonl", std::vector<Json>{});
  IngestPaths paths{dir + "/ds.jsonl", dir + "/dc.jsonl", dir + "/dr.jsonl",
                    dir + "/ps.jsonl", dir + "/pc.jsonl",
                    std::string(SGA_DATA_DIR) + "/judgment_phrases.tsv"};
  CHECK_THROWS_WITH_AS(ingest(paths, 1, 5, 7), doctest::Contains("duplicate"), Error);
}
