#include "sga/synth.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sga/error.hpp"
#include "sga/io.hpp"
#include "sga/rng.hpp"

namespace sga {

namespace {

// Positive/negative pole words per axis. These double as the emitted moral
// lexicon, so lexicon pruning sees exactly the signal the oracle used.
const std::vector<std::vector<std::string>> kPositivePole = {
    {"caring", "protecting", "nurturing", "comforting"},
    {"fair", "honest", "impartial", "equitable"},
    {"loyal", "faithful", "devoted", "allied"},
    {"obeying", "respecting", "dutiful", "traditional"},
    {"pure", "sacred", "wholesome", "decent"},
};
const std::vector<std::vector<std::string>> kNegativePole = {
    {"harming", "hurting", "attacking", "cruel"},
    {"cheating", "unfair", "deceiving", "fraudulent"},
    {"betraying", "abandoning", "traitorous", "deserting"},
    {"defying", "disobeying", "rebelling", "disrespecting"},
    {"degrading", "disgusting", "filthy", "obscene"},
};
const std::vector<std::string> kPositiveTag = {"care", "fairness", "loyalty", "authority", "purity"};
const std::vector<std::string> kNegativeTag = {"harm", "cheating", "betrayal", "subversion",
                                               "degradation"};

const std::vector<std::string> kVerbs = {"asking", "telling", "reminding", "warning"};
const std::vector<std::string> kVerbAlternates = {"urging", "begging", "nagging", "pressing"};
const std::vector<std::pair<std::string, std::string>> kGenderPairs = {
    {"brother", "sister"}, {"husband", "wife"}, {"son", "daughter"}, {"dad", "mom"}};

// Pronounceable pseudo-words keep topic banks disjoint from everything else.
std::string pseudo_word(Rng& rng) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u"};
  std::string w;
  int syllables = 3;
  for (int s = 0; s < syllables; ++s) {
    w += kOnsets[rng.below(14)];
    w += kVowels[rng.below(5)];
  }
  return w;
}

struct Banks {
  std::vector<std::vector<std::string>> topic_words;  // topics x bank size
};

Banks make_banks(const SynthConfig& cfg, Rng& rng) {
  Banks banks;
  std::set<std::string> used;
  for (int a = 0; a < kFoundationAxes; ++a) {
    for (const auto& w : kPositivePole[static_cast<std::size_t>(a)]) used.insert(w);
    for (const auto& w : kNegativePole[static_cast<std::size_t>(a)]) used.insert(w);
  }
  for (const auto& w : kVerbs) used.insert(w);
  for (const auto& w : kVerbAlternates) used.insert(w);
  for (const auto& [m, f] : kGenderPairs) {
    used.insert(m);
    used.insert(f);
  }
  banks.topic_words.resize(static_cast<std::size_t>(cfg.topics));
  for (int t = 0; t < cfg.topics; ++t) {
    auto& bank = banks.topic_words[static_cast<std::size_t>(t)];
    while (static_cast<int>(bank.size()) < cfg.topic_bank_size) {
      std::string w = pseudo_word(rng);
      if (used.insert(w).second) bank.push_back(w);
    }
  }
  return banks;
}

std::string situation_text(const SynthConfig& cfg, const Banks& banks,
                           const SituationFeatures& f, Rng& rng) {
  const auto& pole =
      f.cue_sign > 0 ? kPositivePole[static_cast<std::size_t>(f.axis)]
                     : kNegativePole[static_cast<std::size_t>(f.axis)];
  const auto& bank = banks.topic_words[static_cast<std::size_t>(f.topic)];
  const auto& gender = kGenderPairs[rng.below(kGenderPairs.size())];
  std::string text = kVerbs[rng.below(kVerbs.size())];
  text += " my " + (rng.coin(0.5) ? gender.first : gender.second);
  text += " about " + pole[rng.below(pole.size())];
  std::vector<std::size_t> picks;
  while (static_cast<int>(picks.size()) < cfg.topic_words_per_situation) {
    std::size_t i = rng.below(bank.size());
    if (std::find(picks.begin(), picks.end(), i) == picks.end()) picks.push_back(i);
  }
  for (std::size_t i : picks) text += " " + bank[i];
  return text;
}

std::string comment_text(const PersonaProfile& profile, const SituationFeatures& f,
                         JudgmentCode code, const Banks& banks, Rng& rng) {
  // Foundation words proportional to the persona's per-axis weight on this
  // topic, aligned with the sign; plus one topic word for texture.
  std::string text = code_name(code);
  const auto& w = profile.weights[static_cast<std::size_t>(f.topic)];
  for (int a = 0; a < kFoundationAxes; ++a) {
    double wa = w[static_cast<std::size_t>(a)];
    const auto& pole = wa >= 0.0 ? kPositivePole[static_cast<std::size_t>(a)]
                                 : kNegativePole[static_cast<std::size_t>(a)];
    int count = static_cast<int>(std::min(3.0, std::abs(wa) * 3.0 + 0.5));
    for (int i = 0; i < count; ++i) text += " " + pole[rng.below(pole.size())];
  }
  const auto& bank = banks.topic_words[static_cast<std::size_t>(f.topic)];
  text += " " + bank[rng.below(bank.size())];
  return text;
}

JudgmentCode code_for(Judgment label, Rng& rng) {
  if (label == Judgment::Acceptable)
    return rng.coin(0.5) ? JudgmentCode::NTA : JudgmentCode::NAH;
  return rng.coin(0.5) ? JudgmentCode::YTA : JudgmentCode::ESH;
}

}  // namespace

void SynthConfig::validate() const {
  if (topics <= 0 || personas <= 0) throw config_error("synth: counts must be positive");
  if (noise < 0.0 || noise >= 0.5) throw config_error("synth: noise must be in [0, 0.5)");
  if (topic_words_per_situation > topic_bank_size)
    throw config_error("synth: topic_words_per_situation exceeds the bank size");
}

Judgment oracle_label(const PersonaProfile& profile, const SituationFeatures& features) {
  if (features.topic < 0 || features.topic >= static_cast<int>(profile.weights.size()))
    throw validation_error("oracle_label: unknown topic " + std::to_string(features.topic));
  double dotv = profile.weights[static_cast<std::size_t>(features.topic)]
                               [static_cast<std::size_t>(features.axis)] *
                static_cast<double>(features.cue_sign);
  return dotv >= 0.0 ? Judgment::Acceptable : Judgment::Unacceptable;
}

std::vector<PersonaProfile> synth_profiles(const SynthConfig& config) {
  std::vector<PersonaProfile> profiles;
  for (int p = 0; p < config.personas; ++p) {
    Rng rng(config.seed ^ fnv1a("profile") ^ (static_cast<std::uint64_t>(p) * 0x9e3779b97f4a7c15ull));
    PersonaProfile prof;
    char buf[16];
    std::snprintf(buf, sizeof buf, "persona%02d", p);
    prof.annotator_id = buf;
    prof.noise = config.noise;
    prof.weights.resize(static_cast<std::size_t>(config.topics));
    for (int t = 0; t < config.topics; ++t) {
      auto& row = prof.weights[static_cast<std::size_t>(t)];
      row.resize(kFoundationAxes);
      for (int a = 0; a < kFoundationAxes; ++a) {
        // Global per-axis stance, balanced across personas so disagreement is
        // everywhere; small per-topic wobble that rarely flips the sign.
        double sign = ((p + a) % 2 == 0) ? 1.0 : -1.0;
        double magnitude = rng.uniform(0.55, 1.0);
        double wobble = rng.uniform(-0.25, 0.25);
        double w = sign * magnitude + wobble;
        row[static_cast<std::size_t>(a)] = std::clamp(w, -1.0, 1.0);
      }
    }
    profiles.push_back(std::move(prof));
  }
  return profiles;
}

SynthPaths generate(const SynthConfig& config, const std::string& out_dir) {
  config.validate();
  ensure_dir(out_dir);
  ensure_dir(out_dir + "/audit");

  Rng rng(config.seed ^ fnv1a("synth"));
  Banks banks = make_banks(config, rng);
  auto profiles = synth_profiles(config);

  struct SynthSituation {
    std::string id;
    std::string text;
    SituationFeatures features;
    std::optional<Split> split;
    std::vector<int> commenters;  // persona indices
  };

  auto sample_features = [&](int topic) {
    SituationFeatures f;
    f.topic = topic;
    f.axis = static_cast<int>(rng.below(kFoundationAxes));
    f.cue_sign = rng.coin(0.5) ? +1 : -1;
    return f;
  };

  auto sample_commenters = [&]() {
    std::vector<int> picks;
    while (static_cast<int>(picks.size()) < config.comments_per_situation) {
      int p = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.personas)));
      if (std::find(picks.begin(), picks.end(), p) == picks.end()) picks.push_back(p);
    }
    std::sort(picks.begin(), picks.end());
    return picks;
  };

  std::vector<SynthSituation> d_situations, dplus_situations;
  int counter = 0;
  for (int t = 0; t < config.topics; ++t)
    for (int i = 0; i < config.d_situations_per_topic; ++i) {
      SynthSituation s;
      s.features = sample_features(t);
      char buf[16];
      std::snprintf(buf, sizeof buf, "ds%05d", counter++);
      s.id = buf;
      s.text = situation_text(config, banks, s.features, rng);
      s.commenters = sample_commenters();
      d_situations.push_back(std::move(s));
    }
  counter = 0;
  for (int t = 0; t < config.topics; ++t)
    for (int i = 0; i < config.dplus_situations_per_topic; ++i) {
      SynthSituation s;
      s.features = sample_features(t);
      char buf[16];
      std::snprintf(buf, sizeof buf, "ps%05d", counter++);
      s.id = buf;
      s.text = situation_text(config, banks, s.features, rng);
      s.commenters = sample_commenters();
      dplus_situations.push_back(std::move(s));
    }

  // D splits ride in the file, 80/10/10 over shuffled ids.
  {
    std::vector<std::size_t> order(d_situations.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split_rng(config.seed ^ fnv1a("d-splits"));
    split_rng.shuffle(order);
    std::size_t n = order.size();
    std::size_t n_train = n * 8 / 10, n_valid = n / 10;
    for (std::size_t i = 0; i < n; ++i) {
      Split sp = i < n_train ? Split::Train : (i < n_train + n_valid ? Split::Valid : Split::Test);
      d_situations[order[i]].split = sp;
    }
  }

  SynthPaths paths;
  paths.d_situations = out_dir + "/d_situations.jsonl";
  paths.d_comments = out_dir + "/d_comments.jsonl";
  paths.d_rots = out_dir + "/d_rots.jsonl";
  paths.dplus_situations = out_dir + "/dplus_situations.jsonl";
  paths.dplus_comments = out_dir + "/dplus_comments.jsonl";
  paths.perturbations = out_dir + "/perturbations.jsonl";
  paths.moral_lexicon = out_dir + "/moral_lexicon.tsv";
  paths.profiles = out_dir + "/audit/profiles.jsonl";

  auto situation_records = [](const std::vector<SynthSituation>& v, bool with_split,
                              const char* source) {
    std::vector<Json> recs;
    for (const auto& s : v) {
      Json j{{"id", s.id}, {"text", s.text}, {"source", source}};
      if (with_split && s.split) j["split"] = split_name(*s.split);
      recs.push_back(std::move(j));
    }
    return recs;
  };
  write_jsonl(paths.d_situations, situation_records(d_situations, true, "D"));
  write_jsonl(paths.dplus_situations, situation_records(dplus_situations, false, "DPlus"));

  auto emit_comments = [&](const std::vector<SynthSituation>& situations, const char* prefix) {
    std::vector<Json> recs;
    int cid = 0;
    for (const auto& s : situations) {
      for (int p : s.commenters) {
        const auto& prof = profiles[static_cast<std::size_t>(p)];
        Judgment label = oracle_label(prof, s.features);
        if (rng.coin(config.noise))
          label = label == Judgment::Acceptable ? Judgment::Unacceptable : Judgment::Acceptable;
        JudgmentCode code = code_for(label, rng);
        char buf[16];
        std::snprintf(buf, sizeof buf, "%s%06d", prefix, cid++);
        recs.push_back(Json{{"id", buf},
                            {"annotator_id", prof.annotator_id},
                            {"situation_id", s.id},
                            {"text", comment_text(prof, s.features, code, banks, rng)}});
      }
    }
    return recs;
  };
  write_jsonl(paths.d_comments, emit_comments(d_situations, "dc"));
  write_jsonl(paths.dplus_comments, emit_comments(dplus_situations, "pc"));

  // Two original rules-of-thumb per situation, one per polarity; ingest
  // extends them to K with flips and padding.
  {
    std::vector<Json> recs;
    int rid = 0;
    for (const auto& s : d_situations) {
      std::string action = s.text;
      char buf[16];
      std::snprintf(buf, sizeof buf, "rot%06d", rid++);
      recs.push_back(Json{{"id", buf}, {"situation_id", s.id}, {"text", "It is okay " + action}});
      std::snprintf(buf, sizeof buf, "rot%06d", rid++);
      recs.push_back(
          Json{{"id", buf}, {"situation_id", s.id}, {"text", "It is wrong " + action}});
    }
    write_jsonl(paths.d_rots, recs);
  }

  // Perturbation sets: the ten most-commented D test situations.
  {
    std::vector<const SynthSituation*> test;
    for (const auto& s : d_situations)
      if (s.split == Split::Test) test.push_back(&s);
    std::stable_sort(test.begin(), test.end(), [](const SynthSituation* a, const SynthSituation* b) {
      if (a->commenters.size() != b->commenters.size())
        return a->commenters.size() > b->commenters.size();
      return a->id < b->id;
    });
    if (test.size() > 10) test.resize(10);

    std::vector<Json> recs;
    for (const auto* s : test) {
      // File-level gold: majority noiseless oracle label over its commenters.
      int acc = 0;
      for (int p : s->commenters)
        if (oracle_label(profiles[static_cast<std::size_t>(p)], s->features) ==
            Judgment::Acceptable)
          ++acc;
      Judgment gold = 2 * acc >= static_cast<int>(s->commenters.size()) ? Judgment::Acceptable
                                                                        : Judgment::Unacceptable;

      std::string gendered = s->text;
      for (const auto& [m, f] : kGenderPairs) {
        auto swap_word = [&](const std::string& from, const std::string& to) {
          std::size_t pos = gendered.find(" " + from);
          if (pos != std::string::npos) gendered.replace(pos + 1, from.size(), to);
        };
        if (gendered.find(" " + m) != std::string::npos)
          swap_word(m, f);
        else
          swap_word(f, m);
      }
      std::string rephrased = s->text;
      for (std::size_t v = 0; v < kVerbs.size(); ++v) {
        if (rephrased.rfind(kVerbs[v], 0) == 0) {
          rephrased = kVerbAlternates[v] + rephrased.substr(kVerbs[v].size());
          break;
        }
      }
      const auto& pole = s->features.cue_sign > 0
                             ? kPositivePole[static_cast<std::size_t>(s->features.axis)]
                             : kNegativePole[static_cast<std::size_t>(s->features.axis)];
      std::string abstract = "believing " + pole[0] + " conduct matters most";

      auto push = [&](const char* kind, const std::string& text) {
        recs.push_back(Json{{"original_id", s->id},
                            {"kind", kind},
                            {"text", text},
                            {"gold", judgment_name(gold)}});
      };
      push("gender", gendered);
      push("rephrase", rephrased);
      push("abstract", abstract);
    }
    write_jsonl(paths.perturbations, recs);
  }

  // The matching moral lexicon: exactly the pole vocabulary.
  {
    std::string tsv = "# synthetic moral lexicon\n";
    for (int a = 0; a < kFoundationAxes; ++a) {
      for (const auto& w : kPositivePole[static_cast<std::size_t>(a)])
        tsv += w + "\t" + kPositiveTag[static_cast<std::size_t>(a)] + "\n";
      for (const auto& w : kNegativePole[static_cast<std::size_t>(a)])
        tsv += w + "\t" + kNegativeTag[static_cast<std::size_t>(a)] + "\n";
    }
    write_file(paths.moral_lexicon, tsv);
  }

  // Hidden profiles for post-hoc audits only.
  {
    std::vector<Json> recs;
    for (const auto& p : profiles) {
      Json weights = Json::array();
      for (const auto& row : p.weights) weights.push_back(row);
      recs.push_back(Json{{"annotator_id", p.annotator_id},
                          {"noise", p.noise},
                          {"weights", weights}});
    }
    write_jsonl(paths.profiles, recs);
  }

  return paths;
}

}  // namespace sga
