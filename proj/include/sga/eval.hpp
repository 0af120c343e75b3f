#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sga/corpus.hpp"
#include "sga/model.hpp"

namespace sga {

struct ClassPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Percentage in [0, 100]: unweighted mean of the two per-class F1 scores.
// A class with no predictions and no golds contributes 0.
double macro_f1(const std::vector<Judgment>& preds, const std::vector<Judgment>& golds);

ClassPrf class_prf(const std::vector<Judgment>& preds, const std::vector<Judgment>& golds,
                   Judgment cls);

// Mean macro F1 of a uniform coin-flip predictor over `runs` seeded draws.
double random_baseline(const std::vector<Judgment>& golds, std::uint64_t seed, int runs);

struct PearsonResult {
  std::optional<double> r;
  std::string note;  // reason when r is undefined
};

PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys);

struct ClusterAccuracyRow {
  int cluster = 0;
  std::size_t count = 0;
  double f1 = 0.0;         // macro F1 of the instances in this cluster
  double silhouette = 0.0;
};

struct EvalReport {
  double macro = 0.0;
  ClassPrf acceptable;
  ClassPrf unacceptable;
  std::size_t instances = 0;
  std::vector<ClusterAccuracyRow> per_cluster;
  PearsonResult silhouette_correlation;
};

// Per-cluster macro F1 plus the Pearson correlation against per-cluster
// silhouette. Requires >= 2 clusters with instances for the correlation.
std::vector<ClusterAccuracyRow> cluster_accuracy(const std::vector<Judgment>& preds,
                                                 const std::vector<Judgment>& golds,
                                                 const std::vector<int>& clusters,
                                                 const std::vector<double>& cluster_silhouette);

// ---- attention-weight consistency ----

struct ValueConsistencyInput {
  std::vector<double> value_weights;
  std::vector<std::optional<Judgment>> rot_polarities;  // aligned with weights
  Judgment prediction;
};

struct ValueConsistencyResult {
  double percent = 0.0;       // over evaluated instances
  std::size_t evaluated = 0;
  std::size_t excluded = 0;   // any unclassifiable RoT excludes the instance
  std::size_t matched = 0;
};

// Fraction of instances whose highest-weighted rule-of-thumb (lowest index on
// ties) has the same polarity as the model's prediction.
ValueConsistencyResult value_consistency(const std::vector<ValueConsistencyInput>& inputs);

// Slot indices of unmasked weights in descending order; ties break by slot
// index. The full permutation is the "attention weight order".
std::vector<int> rank_permutation(const std::vector<double>& weights,
                                  const std::vector<bool>& mask);

bool same_order(const std::vector<int>& a, const std::vector<int>& b);
bool same_top_m(const std::vector<int>& a, const std::vector<int>& b, int m);

enum class PerturbationKind { Gender, Rephrase, Abstract };

const char* perturbation_kind_name(PerturbationKind k);
std::optional<PerturbationKind> perturbation_kind_from_name(std::string_view s);

struct PerturbationVariant {
  PerturbationKind kind;
  std::string text;
  Judgment gold;  // file-level reference label
};

struct PerturbationSet {
  std::string original_id;
  std::vector<PerturbationVariant> variants;
};

std::vector<PerturbationSet> load_perturbations(const std::string& path);

struct SgConsistencyKindRow {
  std::string kind;
  std::size_t evaluated = 0;
  std::size_t consistent = 0;
  double consistency = 0.0;  // percent, strict full-order match
  double top_m = 0.0;        // percent, relaxed top-m match
  double accuracy = 0.0;     // percent vs the annotator's original judgment
};

struct SgConsistencyReport {
  double strict = 0.0;   // percent over all (variant, annotator) pairs
  double top_m = 0.0;
  int m = 3;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // annotator/original pairs without sg weights
  std::vector<SgConsistencyKindRow> per_kind;  // original row first
};

// ---- seed-level significance ----

// Welch two-sample t-test p-value (two-sided).
double welch_p_value(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace sga
