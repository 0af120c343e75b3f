#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sga/checkpoint.hpp"
#include "sga/cluster.hpp"
#include "sga/corpus.hpp"
#include "sga/encoder.hpp"
#include "sga/eval.hpp"
#include "sga/io.hpp"
#include "sga/lexicon.hpp"
#include "sga/model.hpp"
#include "sga/sgbase.hpp"
#include "sga/synth.hpp"
#include "sga/train.hpp"

namespace sga {

// Pipeline-level defaults. The judgment-shape constants (K=5 candidates,
// 20 clusters, 6 comments per cluster, 12 heads, norm 1) are fixed here and
// audited by the acceptance suite.
struct PipelineConfig {
  std::size_t roster_size = 30;
  int rots_per_situation = 5;
  int clusters = 20;
  int per_cluster = 6;
  int static_dim = 64;
  ModelConfig model;
  TrainConfig train;

  int sg_slots() const { return clusters * per_cluster; }

  // Keeps model.sg_slots and rot_count in line with the corpus-side settings.
  void finalize();
};

// "key = value" lines; '#' comments. CLI flags override file values.
class KvConfig {
 public:
  static KvConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;

  void apply(PipelineConfig& cfg) const;
  Json echo() const;

 private:
  std::map<std::string, std::string> values_;
};

// ---- artifact persistence ----

void save_corpus(const std::string& dir, const Corpus& corpus, const std::string& stem);
Corpus load_corpus(const std::string& dir, const std::string& stem, Source source);
void save_roster(const std::string& dir, const Roster& roster);
Roster load_roster(const std::string& dir);

struct ClusterArtifact {
  ClusterModel model;
  std::vector<double> per_cluster_silhouette;
  double total_inertia = 0.0;
  double mean_silhouette = 0.0;
  std::vector<std::vector<std::string>> representatives;  // nearest ids per cluster
};

void save_cluster(const std::string& path, const ClusterArtifact& artifact, const Json& config_echo);
ClusterArtifact load_cluster(const std::string& path);
// Fit + diagnostics over the DPlus training-split situations.
ClusterArtifact fit_cluster_artifact(const Corpus& dplus, const StaticEmbedder& embedder, int k,
                                     std::uint64_t seed);

void save_sg_bases(const std::string& path, const std::vector<SgBase>& bases);
std::vector<SgBase> load_sg_bases(const std::string& path);
std::string render_sg_dump(const std::vector<SgBase>& bases);

void save_model(const std::string& path, const ModelParams& params, const Json& config_echo);
ModelParams load_model(const std::string& path);

// ---- model application ----

struct TraceRecord {
  std::string instance_id;
  std::string annotator_id;
  std::string variant;
  std::vector<double> sg_weights;
  std::vector<double> value_weights;
  std::vector<double> logits;
  std::string prediction;
};

std::vector<TraceRecord> traces_from_predictions(const std::vector<Prediction>& preds,
                                                 Variant variant);
void save_traces(const std::string& path, const std::vector<TraceRecord>& traces);

EvalReport evaluate_split(const ModelParams& params, const Corpus& d, const SgIndex& sg,
                          Split split, const StaticEmbedder& embedder,
                          const ClusterArtifact& clusters,
                          std::vector<Prediction>* out_preds = nullptr);

Json eval_report_json(const EvalReport& report);
std::string render_eval_report(const EvalReport& report);

struct ConsistencyReport {
  ValueConsistencyResult value;
  SgConsistencyReport sg;
  bool sg_applicable = true;
  bool value_applicable = true;
  std::string variant;
};

// Value consistency over D-test traces and subjective-ground consistency over
// the perturbation sets. `predict_from_argmax_rot` swaps every prediction for
// the polarity of the highest-weighted candidate (metric-wiring harness).
ConsistencyReport run_consistency(const ModelParams& params, const Corpus& d, const SgIndex& sg,
                                  const std::vector<PerturbationSet>& perturbations, int top_m = 3,
                                  bool predict_from_argmax_rot = false);

Json consistency_report_json(const ConsistencyReport& report);
std::string render_consistency_report(const ConsistencyReport& report);

}  // namespace sga
