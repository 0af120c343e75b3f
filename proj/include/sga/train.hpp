#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sga/corpus.hpp"
#include "sga/model.hpp"
#include "sga/sgbase.hpp"

namespace sga {

struct TrainConfig {
  double lr = 1e-4;             // grid-searched range [1e-6, 1e-3]
  int warmup_steps = 50;        // 0 = constant learning rate
  double decay_scale = 0.0;     // 0 = defaults to warmup_steps
  int batch_size = 16;
  int epochs = 30;
  int patience = 5;
  std::uint64_t seed = 1;
  bool freeze_shared = false;   // stage 2: keep encoder + sg attention fixed
  Variant variant = Variant::SgAttention;

  void validate() const;
};

// Linear warmup to lr, then logarithmic decay:
// lr / (1 + ln(1 + (step - warmup) / decay_scale)).
double lr_at(long step, const TrainConfig& cfg);

// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias correction). State is
// keyed by tensor name; frozen tensors are skipped entirely so their bytes
// never move.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ModelParams& params, const std::vector<std::pair<std::string, Tensor>>& grads,
            double lr, bool freeze_shared);

  long timestep() const { return t_; }

 private:
  struct Moments {
    Tensor m, v;
  };
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, Moments> state_;
};

struct TrainInstance {
  const Comment* comment;
  const Situation* situation;
  std::vector<std::string> rot_texts;  // empty on the DPlus stage
};

// Retained comments of `split`, ordered by comment id. When with_rots is set
// every situation must carry rule-of-thumb candidates.
std::vector<TrainInstance> collect_instances(const Corpus& corpus, Split split, bool with_rots);

struct EpochLog {
  int stage = 0;
  int epoch = 0;
  double train_loss = 0.0;
  double valid_f1 = 0.0;
  bool is_best = false;
};

struct TrainResult {
  double best_valid_f1 = 0.0;
  int best_epoch = -1;
  std::vector<EpochLog> log;
};

class SgIndex {
 public:
  explicit SgIndex(const std::vector<SgBase>& bases);
  const SgBase* find(const std::string& annotator_id) const;

 private:
  std::map<std::string, const SgBase*> by_annotator_;
};

// One training stage over the given splits; keeps the best-valid-F1 epoch in
// `params`. The variant decides the forward path; instances without RoT texts
// run the first-stage path.
TrainResult train_stage(ModelParams& params, const std::vector<TrainInstance>& train,
                        const std::vector<TrainInstance>& valid, const SgIndex& sg,
                        const TrainConfig& cfg, int stage);

// Full two-stage schedule for the variant:
//  - baselines train the sequence classifier (the finetuned one warm-starts on
//    DPlus), rot self-attention trains on D only;
//  - subjective-ground variants train encoder + sg attention + stage-1
//    classifier on DPlus, then value attention + final classifier on D with
//    the shared stack updated or frozen per config.
TrainResult train_variant(ModelParams& params, const Corpus& d, const Corpus& dplus,
                          const SgIndex& sg, const TrainConfig& cfg);

// Predictions and traces for a set of instances (no gradients).
struct Prediction {
  std::string instance_id;
  std::string annotator_id;
  Judgment predicted;
  std::optional<Judgment> gold;
  Tensor logits;
  AttentionTrace trace;
};

std::vector<Prediction> predict_all(const ModelParams& params,
                                    const std::vector<TrainInstance>& instances, const SgIndex& sg);

struct MatrixRow {
  Variant variant;
  std::vector<double> seed_f1;  // test macro F1 per seed
  double mean = 0.0;
  double stdev = 0.0;
};

MatrixRow summarize_runs(Variant variant, const std::vector<double>& seed_f1);

}  // namespace sga
