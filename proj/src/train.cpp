#include "sga/train.hpp"

#include <algorithm>
#include <cmath>

#include "sga/error.hpp"
#include "sga/eval.hpp"
#include "sga/rng.hpp"

namespace sga {

void TrainConfig::validate() const {
  if (lr < 1e-6 || lr > 1e-3)
    throw config_error("learning rate " + std::to_string(lr) + " outside [1e-6, 1e-3]");
  if (batch_size <= 0) throw config_error("batch size must be positive");
  if (epochs <= 0) throw config_error("epochs must be positive");
}

double lr_at(long step, const TrainConfig& cfg) {
  if (cfg.warmup_steps <= 0) return cfg.lr;
  if (step <= cfg.warmup_steps)
    return cfg.lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  double scale = cfg.decay_scale > 0.0 ? cfg.decay_scale : static_cast<double>(cfg.warmup_steps);
  return cfg.lr / (1.0 + std::log(1.0 + (static_cast<double>(step - cfg.warmup_steps)) / scale));
}

void Adam::step(ModelParams& params, const std::vector<std::pair<std::string, Tensor>>& grads,
                double lr, bool freeze_shared) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

  std::map<std::string, const Tensor*> grad_by_name;
  for (const auto& [name, g] : grads) grad_by_name[name] = &g;

  params.for_each_tensor([&](const std::string& name, Tensor& p) {
    if (freeze_shared && ModelParams::is_shared_tensor(name)) return;
    auto it = grad_by_name.find(name);
    auto& mom = state_[name];
    if (mom.m.size() == 0) {
      mom.m = Tensor(p.rows, p.cols);
      mom.v = Tensor(p.rows, p.cols);
    }
    if (!mom.m.same_shape(p)) throw validation_error("adam: shape drift for tensor " + name);
    const Tensor* g = it == grad_by_name.end() ? nullptr : it->second;
    if (g && !g->same_shape(p)) throw validation_error("adam: gradient shape mismatch for " + name);
    for (std::size_t i = 0; i < p.v.size(); ++i) {
      double gi = g ? g->v[i] : 0.0;
      mom.m.v[i] = beta1_ * mom.m.v[i] + (1.0 - beta1_) * gi;
      mom.v.v[i] = beta2_ * mom.v.v[i] + (1.0 - beta2_) * gi * gi;
      double mhat = mom.m.v[i] / bc1;
      double vhat = mom.v.v[i] / bc2;
      p.v[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  });
}

std::vector<TrainInstance> collect_instances(const Corpus& corpus, Split split, bool with_rots) {
  std::vector<TrainInstance> out;
  for (const auto& c : corpus.comments) {
    const Situation* s = corpus.find_situation(c.situation_id);
    if (!s || s->split != split) continue;
    TrainInstance inst;
    inst.comment = &c;
    inst.situation = s;
    if (with_rots) {
      auto rots = corpus.rots_of(s->id);
      if (rots.empty())
        throw validation_error("situation " + s->id + " has no rules-of-thumb");
      for (const auto* r : rots) inst.rot_texts.push_back(r->text);
    }
    out.push_back(std::move(inst));
  }
  return out;  // corpus.comments is already ordered by id
}

SgIndex::SgIndex(const std::vector<SgBase>& bases) {
  for (const auto& b : bases) by_annotator_[b.annotator_id] = &b;
}

const SgBase* SgIndex::find(const std::string& annotator_id) const {
  auto it = by_annotator_.find(annotator_id);
  return it == by_annotator_.end() ? nullptr : it->second;
}

namespace {

bool variant_needs_sg(Variant v) {
  return v == Variant::StaticSg || v == Variant::SgAttentionNoRot || v == Variant::SgAttention;
}

const SgBase* base_for(const ModelParams& params, const SgIndex& sg, const TrainInstance& inst) {
  if (!variant_needs_sg(params.variant)) return nullptr;
  const SgBase* base = sg.find(inst.comment->annotator_id);
  if (!base)
    throw validation_error("no subjective ground base for annotator " +
                           inst.comment->annotator_id);
  return base;
}

// Batches group one annotator's instances together so a batch encodes each
// subjective ground once; batch order and in-batch order reshuffle per epoch.
std::vector<std::vector<const TrainInstance*>> make_batches(
    const std::vector<TrainInstance>& instances, int batch_size, std::uint64_t seed, int epoch) {
  Rng rng(seed ^ fnv1a("batches") ^ (static_cast<std::uint64_t>(epoch) * 0x9e3779b97f4a7c15ull));
  std::vector<const TrainInstance*> shuffled;
  shuffled.reserve(instances.size());
  for (const auto& i : instances) shuffled.push_back(&i);
  rng.shuffle(shuffled);

  std::map<std::string, std::vector<const TrainInstance*>> by_annotator;
  for (const auto* i : shuffled) by_annotator[i->comment->annotator_id].push_back(i);

  std::vector<std::vector<const TrainInstance*>> batches;
  for (auto& [aid, list] : by_annotator) {
    for (std::size_t off = 0; off < list.size(); off += static_cast<std::size_t>(batch_size)) {
      std::size_t end = std::min(list.size(), off + static_cast<std::size_t>(batch_size));
      batches.emplace_back(list.begin() + static_cast<std::ptrdiff_t>(off),
                           list.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  rng.shuffle(batches);
  return batches;
}

double valid_macro_f1(const ModelParams& params, const std::vector<TrainInstance>& valid,
                      const SgIndex& sg) {
  std::vector<Judgment> preds, golds;
  for (const auto& p : predict_all(params, valid, sg)) {
    if (!p.gold) continue;
    preds.push_back(p.predicted);
    golds.push_back(*p.gold);
  }
  return preds.empty() ? 0.0 : macro_f1(preds, golds);
}

}  // namespace

TrainResult train_stage(ModelParams& params, const std::vector<TrainInstance>& train,
                        const std::vector<TrainInstance>& valid, const SgIndex& sg,
                        const TrainConfig& cfg, int stage) {
  cfg.validate();
  if (train.empty()) throw validation_error("training split is empty");

  Adam adam;
  TrainResult result;
  ModelParams best = params;
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t batch_count = 0;
    for (const auto& batch : make_batches(train, cfg.batch_size, cfg.seed, epoch)) {
      Tape tape;
      GraphBuilder gb(tape, params);
      std::vector<Tape::Var> losses;
      for (const auto* inst : batch) {
        ModelOutput out = gb.forward(inst->situation->text, base_for(params, sg, *inst),
                                     inst->rot_texts);
        losses.push_back(model_loss(tape, out.logits, *inst->comment->label));
      }
      Tape::Var loss = tape.mean_of_scalars(losses);
      tape.backward(loss);
      loss_sum += tape.value(loss).at(0, 0);
      ++batch_count;

      std::vector<std::pair<std::string, Tensor>> grads;
      params.for_each_tensor([&](const std::string& name, Tensor& t) {
        const Tensor* g = tape.grad_of(t);
        if (g) grads.emplace_back(name, *g);
      });
      ++step;
      adam.step(params, grads, lr_at(step, cfg), cfg.freeze_shared);
    }

    EpochLog log;
    log.stage = stage;
    log.epoch = epoch;
    log.train_loss = batch_count > 0 ? loss_sum / static_cast<double>(batch_count) : 0.0;
    log.valid_f1 = valid.empty() ? 0.0 : valid_macro_f1(params, valid, sg);
    if (result.best_epoch < 0 || log.valid_f1 > result.best_valid_f1) {
      result.best_valid_f1 = log.valid_f1;
      result.best_epoch = epoch;
      best = params;
      log.is_best = true;
    }
    result.log.push_back(log);

    if (!valid.empty() && epoch - result.best_epoch >= cfg.patience) break;
  }

  params = best;
  return result;
}

TrainResult train_variant(ModelParams& params, const Corpus& d, const Corpus& dplus,
                          const SgIndex& sg, const TrainConfig& cfg) {
  params.variant = cfg.variant;

  auto d_train = collect_instances(d, Split::Train, true);
  auto d_valid = collect_instances(d, Split::Valid, true);
  // Baselines ignore candidates; drop them so the forward never encodes them.
  if (cfg.variant == Variant::Baseline || cfg.variant == Variant::BaselineFinetuned ||
      cfg.variant == Variant::SgAttentionNoRot) {
    for (auto* set : {&d_train, &d_valid})
      for (auto& inst : *set) inst.rot_texts.clear();
  }

  TrainResult result;
  bool has_stage1 = cfg.variant != Variant::Baseline && cfg.variant != Variant::RotSelfAttention;
  if (has_stage1) {
    auto p_train = collect_instances(dplus, Split::Train, false);
    auto p_valid = collect_instances(dplus, Split::Valid, false);
    TrainConfig stage1_cfg = cfg;
    stage1_cfg.freeze_shared = false;
    result = train_stage(params, p_train, p_valid, sg, stage1_cfg, 1);
  }

  TrainResult stage2 = train_stage(params, d_train, d_valid, sg, cfg, has_stage1 ? 2 : 1);
  stage2.log.insert(stage2.log.begin(), result.log.begin(), result.log.end());
  return stage2;
}

std::vector<Prediction> predict_all(const ModelParams& params,
                                    const std::vector<TrainInstance>& instances,
                                    const SgIndex& sg) {
  std::vector<Prediction> out;
  out.reserve(instances.size());
  // chunked tapes keep eval memory flat on big splits
  constexpr std::size_t kChunk = 64;
  std::size_t i = 0;
  while (i < instances.size()) {
    Tape tape(false);
    GraphBuilder gb(tape, params);
    std::size_t end = std::min(instances.size(), i + kChunk);
    for (; i < end; ++i) {
      const TrainInstance& inst = instances[i];
      ModelOutput m = gb.forward(inst.situation->text, base_for(params, sg, inst),
                                 inst.rot_texts);
      Prediction p;
      p.instance_id = inst.comment->id;
      p.annotator_id = inst.comment->annotator_id;
      p.logits = tape.value(m.logits);
      p.predicted = predict_from_logits(p.logits);
      p.gold = inst.comment->label;
      p.trace = std::move(m.trace);
      out.push_back(std::move(p));
    }
  }
  return out;
}

MatrixRow summarize_runs(Variant variant, const std::vector<double>& seed_f1) {
  MatrixRow row;
  row.variant = variant;
  row.seed_f1 = seed_f1;
  if (seed_f1.empty()) return row;
  double sum = 0.0;
  for (double f : seed_f1) sum += f;
  row.mean = sum / static_cast<double>(seed_f1.size());
  double sq = 0.0;
  for (double f : seed_f1) sq += (f - row.mean) * (f - row.mean);
  row.stdev = seed_f1.size() > 1 ? std::sqrt(sq / static_cast<double>(seed_f1.size() - 1)) : 0.0;
  return row;
}

}  // namespace sga
