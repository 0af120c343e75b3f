#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "sga/error.hpp"
#include "sga/io.hpp"
#include "sga/lexicon.hpp"
#include "test_util.hpp"

using namespace sga;

namespace {

MoralLexicon tiny_lexicon() {
  MoralLexicon lex;
  lex.add("harm*", Foundation::Harm);
  lex.add("unfair", Foundation::Cheating);
  return lex;
}

}  // namespace

TEST_CASE("single prefix entry loads") {
  std::string dir = test::scratch_dir("lex");
  write_file(dir + "/l.tsv", "harm*\tharm\n");
  MoralLexicon lex = load_moral_lexicon(dir + "/l.tsv");
  CHECK(lex.size() == 1);
  CHECK(lex.match("harming").has_value());
  CHECK(!lex.match("ham").has_value());
}

TEST_CASE("duplicate patterns are rejected") {
  std::string dir = test::scratch_dir("lex_dup");
  write_file(dir + "/l.tsv", "care*\tcare\ncare*\tharm\n");
  CHECK_THROWS_AS(load_moral_lexicon(dir + "/l.tsv"), Error);
  write_file(dir + "/l2.tsv", "duty\tauthority\nduty\tauthority\n");
  CHECK_THROWS_AS(load_moral_lexicon(dir + "/l2.tsv"), Error);
}

TEST_CASE("unknown tags and malformed lines are rejected") {
  std::string dir = test::scratch_dir("lex_bad");
  write_file(dir + "/l.tsv", "care*\tcompassion\n");
  CHECK_THROWS_AS(load_moral_lexicon(dir + "/l.tsv"), Error);
  write_file(dir + "/l2.tsv", "care* care\n");
  CHECK_THROWS_AS(load_moral_lexicon(dir + "/l2.tsv"), Error);
}

TEST_CASE("shipped seed lexicon entry count equals line count") {
  std::string path = std::string(SGA_DATA_DIR) + "/mfd_seed.tsv";
  MoralLexicon lex = load_moral_lexicon(path);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++lines;
  CHECK(lex.size() == lines);
  CHECK(lex.match("harming") == Foundation::Harm);
  CHECK(lex.match("betrayal") == Foundation::Betrayal);
}

TEST_CASE("mf_score counts matched tokens once each") {
  MoralLexicon lex = tiny_lexicon();
  CHECK(mf_score("", lex) == 0);
  CHECK(mf_score("harming animals is unfair", lex) == 2);
  CHECK(mf_score("HARMING, animals; is. UNFAIR!", lex) == 2);  // case + punctuation
  CHECK(mf_score("nothing to see", lex) == 0);
}

TEST_CASE("mf_score is additive over concatenation") {
  MoralLexicon lex = tiny_lexicon();
  Rng rng(11);
  const char* words[] = {"harmful", "unfair", "kitten", "tree", "harms", "fair"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string a, b;
    for (int i = 0; i < 4; ++i) {
      a += std::string(words[rng.below(6)]) + " ";
      b += std::string(words[rng.below(6)]) + " ";
    }
    CHECK(mf_score(a + " " + b, lex) == mf_score(a, lex) + mf_score(b, lex));
  }
  std::string text = "harming animals is unfair";
  CHECK(mf_score(text + " " + text, lex) == 2 * mf_score(text, lex));
}

TEST_CASE("removing an entry never increases a score") {
  MoralLexicon full = tiny_lexicon();
  MoralLexicon reduced;
  reduced.add("harm*", Foundation::Harm);
  const char* samples[] = {"harming is unfair", "unfair unfair", "calm water", "harm done"};
  for (const char* s : samples) CHECK(mf_score(s, reduced) <= mf_score(s, full));
}

TEST_CASE("token matching prefers exact entries for the profile tag") {
  MoralLexicon lex;
  lex.add("fair*", Foundation::Fairness);
  lex.add("fairness", Foundation::Purity);  // deliberately different tag
  auto profile = mf_profile("fairness fair", lex);
  CHECK(profile[Foundation::Purity] == 1);
  CHECK(profile[Foundation::Fairness] == 1);
  CHECK(mf_score("fairness fair", lex) == 2);
}
