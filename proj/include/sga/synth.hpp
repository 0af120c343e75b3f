#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sga/corpus.hpp"

namespace sga {

// Hidden persona state: per topic, a signed weight for each of the five
// foundation axes (care/harm, fairness/cheating, loyalty/betrayal,
// authority/subversion, purity/degradation). A situation carries a signed cue
// on one axis; the oracle label is the sign of profile . cue.
inline constexpr int kFoundationAxes = 5;

struct PersonaProfile {
  std::string annotator_id;
  std::vector<std::vector<double>> weights;  // topics x axes, in [-1, 1]
  double noise = 0.0;
};

struct SituationFeatures {
  int topic = 0;
  int axis = 0;
  int cue_sign = +1;  // +1 = the positive pole of the axis
};

struct SynthConfig {
  int topics = 20;
  int personas = 30;
  int d_situations_per_topic = 100;       // ~2000 D situations by default
  int dplus_situations_per_topic = 125;
  int comments_per_situation = 2;
  double noise = 0.1;                     // label flip rate; in [0, 0.5)
  std::uint64_t seed = 1;
  int topic_bank_size = 10;
  int topic_words_per_situation = 3;

  void validate() const;
};

// Sign of the profile row against the situation's signed cue; ties go to
// acceptable.
Judgment oracle_label(const PersonaProfile& profile, const SituationFeatures& features);

struct SynthPaths {
  std::string d_situations, d_comments, d_rots;
  std::string dplus_situations, dplus_comments;
  std::string perturbations;
  std::string moral_lexicon;
  std::string profiles;  // hidden audit record, kept apart from the corpus
};

// Writes the corpus files (exactly the ingest formats), a perturbation file,
// the matching moral lexicon, and the hidden profiles under out_dir. The
// profile manifest goes to out_dir/audit/ and is never read by the pipeline.
SynthPaths generate(const SynthConfig& config, const std::string& out_dir);

// Exposed for tests: the deterministic profile table for a config.
std::vector<PersonaProfile> synth_profiles(const SynthConfig& config);

}  // namespace sga
