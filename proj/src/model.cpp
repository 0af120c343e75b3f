#include "sga/model.hpp"

#include <cmath>

#include "sga/error.hpp"
#include "sga/rng.hpp"

namespace sga {

namespace {

constexpr std::array<const char*, 7> kVariantNames = {
    "baseline",  "baseline_finetuned", "rot_self_attention", "latent_sg",
    "static_sg", "sg_attention_no_rot", "sg_attention"};

Tensor xavier(int rows, int cols, Rng& rng) {
  Tensor t(rows, cols);
  double bound = std::sqrt(6.0 / (rows + cols));
  for (double& x : t.v) x = rng.uniform(-bound, bound);
  return t;
}

void init_multihead(MultiheadParams& p, int hidden, int heads, NormMode norm, Rng& rng) {
  if (hidden % heads != 0)
    throw config_error("hidden (" + std::to_string(hidden) + ") must be divisible by attention heads (" +
                       std::to_string(heads) + ")");
  p.heads = heads;
  p.norm = norm;
  int d = hidden / heads;
  p.wq.clear();
  p.wk.clear();
  p.wv.clear();
  for (int h = 0; h < heads; ++h) {
    p.wq.push_back(xavier(hidden, d, rng));
    p.wk.push_back(xavier(hidden, d, rng));
    p.wv.push_back(xavier(hidden, d, rng));
  }
  p.wo = xavier(hidden, hidden, rng);
}

void init_classifier(ClassifierParams& c, int in, int mid, Rng& rng) {
  c.w1 = xavier(in, mid, rng);
  c.b1 = Tensor(1, mid);
  c.w2 = xavier(mid, 2, rng);
  c.b2 = Tensor(1, 2);
}

void multihead_tensors(const std::string& prefix, MultiheadParams& p,
                       const std::function<void(const std::string&, Tensor&)>& fn) {
  for (std::size_t h = 0; h < p.wq.size(); ++h) {
    std::string hp = prefix + ".head" + std::to_string(h) + ".";
    fn(hp + "wq", p.wq[h]);
    fn(hp + "wk", p.wk[h]);
    fn(hp + "wv", p.wv[h]);
  }
  fn(prefix + ".wo", p.wo);
}

void classifier_tensors(const std::string& prefix, ClassifierParams& c,
                        const std::function<void(const std::string&, Tensor&)>& fn) {
  fn(prefix + ".w1", c.w1);
  fn(prefix + ".b1", c.b1);
  fn(prefix + ".w2", c.w2);
  fn(prefix + ".b2", c.b2);
}

}  // namespace

const char* variant_name(Variant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

std::optional<Variant> variant_from_name(std::string_view s) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i)
    if (s == kVariantNames[i]) return static_cast<Variant>(i);
  return std::nullopt;
}

void ModelParams::init(std::uint64_t seed) {
  Rng rng(seed ^ fnv1a("model-init"));
  encoder.cfg = cfg.encoder;
  encoder.init(seed);
  int h = cfg.encoder.hidden;
  init_multihead(sg_attn, h, cfg.attn_heads, cfg.norm, rng);
  init_multihead(value_attn, h, cfg.attn_heads, cfg.norm, rng);
  init_classifier(stage1_clf, 2 * h, h, rng);
  init_classifier(final_clf, 2 * h, h, rng);
  init_classifier(seq_clf, h, h, rng);
  if (variant == Variant::LatentSg) {
    Tensor latent(cfg.sg_slots, h);
    for (double& x : latent.v) x = 0.1 * rng.normal();
    latent_sg = std::move(latent);
  } else {
    latent_sg.reset();
  }
}

void ModelParams::for_each_tensor(const std::function<void(const std::string&, Tensor&)>& fn) {
  encoder.for_each_tensor(fn);
  multihead_tensors("sg_attn", sg_attn, fn);
  multihead_tensors("value_attn", value_attn, fn);
  classifier_tensors("stage1_clf", stage1_clf, fn);
  classifier_tensors("final_clf", final_clf, fn);
  classifier_tensors("seq_clf", seq_clf, fn);
  if (latent_sg) fn("latent_sg", *latent_sg);
}

void ModelParams::for_each_tensor(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each_tensor(
      [&](const std::string& name, Tensor& t) { fn(name, t); });
}

bool ModelParams::is_shared_tensor(const std::string& name) {
  return name.rfind("encoder.", 0) == 0 || name.rfind("sg_attn.", 0) == 0;
}

// ---- attention ----

AttendResult attend(Tape& tape, const MultiheadParams& params, Tape::Var queries, Tape::Var key,
                    Tape::Var values, const std::vector<bool>& mask) {
  const Tensor& q = tape.value(queries);
  if (tape.value(key).rows != 1) throw validation_error("attend: key must be a single row");
  if (static_cast<int>(mask.size()) != q.rows)
    throw validation_error("attend: mask length != query rows");
  bool any = false;
  for (bool m : mask) any = any || m;
  if (!any) throw validation_error("attend: every slot is masked");

  int hidden = q.cols;
  int d = hidden / params.heads;
  double norm = params.norm == NormMode::SqrtDk ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;

  AttendResult res;
  std::vector<Tape::Var> head_ctx;
  Tape::Var weight_sum;
  for (int h = 0; h < params.heads; ++h) {
    auto hu = static_cast<std::size_t>(h);
    Tape::Var qp = tape.matmul(queries, tape.bind(params.wq[hu]));       // (n,d)
    Tape::Var kp = tape.matmul(key, tape.bind(params.wk[hu]));           // (1,d)
    Tape::Var scores = tape.scale(tape.matmul_nt(qp, kp), norm);         // (n,1)
    Tape::Var w = tape.masked_softmax_col(scores, mask);                 // (n,1)
    res.per_head_weights.push_back(w);
    Tape::Var vp = tape.matmul(values, tape.bind(params.wv[hu]));        // (n,d)
    head_ctx.push_back(tape.matmul_tn(w, vp));                           // (1,d)
    weight_sum = h == 0 ? w : tape.add(weight_sum, w);
  }
  res.context = tape.matmul(tape.concat_cols(head_ctx), tape.bind(params.wo));
  res.weights = tape.scale(weight_sum, 1.0 / params.heads);
  return res;
}

// ---- graph builder ----

GraphBuilder::GraphBuilder(Tape& tape, const ModelParams& params)
    : tape_(tape), params_(params) {
  tokenizer_.vocab = params.cfg.encoder.vocab;
  tokenizer_.max_len = params.cfg.encoder.max_len;
  latent_mask_.assign(static_cast<std::size_t>(params.cfg.sg_slots), true);
}

Tape::Var GraphBuilder::encode(const std::string& text) {
  auto it = text_cache_.find(text);
  if (it != text_cache_.end()) return it->second;
  Tape::Var v = encode_text(tape_, params_.encoder, tokenizer_, text);
  text_cache_.emplace(text, v);
  return v;
}

GraphBuilder::SgMatrix GraphBuilder::sg_matrix(const SgBase& base) {
  auto it = sg_cache_.find(base.annotator_id);
  if (it != sg_cache_.end()) return it->second;
  if (base.total_slots() != params_.cfg.sg_slots)
    throw validation_error("subjective ground of " + base.annotator_id + " has " +
                           std::to_string(base.total_slots()) + " slots; model expects " +
                           std::to_string(params_.cfg.sg_slots));
  std::vector<Tape::Var> rows;
  rows.reserve(base.slots.size());
  for (const auto& slot : base.slots) rows.push_back(encode(slot.text));
  SgMatrix m{tape_.concat_rows(rows), &base.mask};
  sg_cache_.emplace(base.annotator_id, m);
  return m;
}

GraphBuilder::SgMatrix GraphBuilder::latent_matrix() {
  if (!params_.latent_sg) throw validation_error("latent subjective ground is not allocated");
  return SgMatrix{tape_.bind(*params_.latent_sg), &latent_mask_};
}

Tape::Var GraphBuilder::classify(const ClassifierParams& clf, Tape::Var input) {
  Tape::Var hiddenv = tape_.add_row_broadcast(tape_.matmul(input, tape_.bind(clf.w1)),
                                              tape_.bind(clf.b1));
  hiddenv = tape_.relu(hiddenv);
  return tape_.add_row_broadcast(tape_.matmul(hiddenv, tape_.bind(clf.w2)), tape_.bind(clf.b2));
}

ModelOutput GraphBuilder::forward(const std::string& situation_text, const SgBase* base,
                                  const std::vector<std::string>& rot_texts) {
  Variant variant = params_.variant;
  ModelOutput out;
  Tape::Var z = encode(situation_text);

  if (variant == Variant::Baseline || variant == Variant::BaselineFinetuned) {
    out.logits = classify(params_.seq_clf, z);
    return out;
  }

  if (variant == Variant::RotSelfAttention) {
    if (rot_texts.empty())
      throw validation_error("rot_self_attention requires rule-of-thumb candidates");
    std::vector<Tape::Var> rot_rows;
    for (const auto& t : rot_texts) rot_rows.push_back(encode(t));
    Tape::Var val = tape_.concat_rows(rot_rows);  // (K, h)

    // full self-attention over the candidates, mean-pooled
    const MultiheadParams& p = params_.value_attn;
    int d = params_.cfg.encoder.hidden / p.heads;
    double norm = p.norm == NormMode::SqrtDk ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;
    std::vector<Tape::Var> head_ctx;
    int k = static_cast<int>(rot_texts.size());
    std::vector<double> mean_w(static_cast<std::size_t>(k), 0.0);
    for (int h = 0; h < p.heads; ++h) {
      auto hu = static_cast<std::size_t>(h);
      Tape::Var q = tape_.matmul(val, tape_.bind(p.wq[hu]));
      Tape::Var kk = tape_.matmul(val, tape_.bind(p.wk[hu]));
      Tape::Var v = tape_.matmul(val, tape_.bind(p.wv[hu]));
      Tape::Var attn = tape_.softmax_rows(tape_.scale(tape_.matmul_nt(q, kk), norm));
      const Tensor& aw = tape_.value(attn);
      for (int i = 0; i < aw.rows; ++i)
        for (int j = 0; j < aw.cols; ++j)
          mean_w[static_cast<std::size_t>(j)] += aw.at(i, j) / (aw.rows * p.heads);
      head_ctx.push_back(tape_.matmul(attn, v));
    }
    Tape::Var ctx = tape_.matmul(tape_.concat_cols(head_ctx), tape_.bind(p.wo));
    Tape::Var pooled = tape_.mean_rows(ctx);
    out.logits = classify(params_.final_clf, tape_.concat_cols({pooled, z}));
    out.trace.value_weights = std::move(mean_w);
    return out;
  }

  // subjective-ground variants
  SgMatrix sg = variant == Variant::LatentSg ? latent_matrix()
                                             : (base ? sg_matrix(*base)
                                                     : throw validation_error(
                                                           "variant requires a subjective ground base"));

  Tape::Var sg_context;
  if (variant == Variant::StaticSg) {
    sg_context = tape_.masked_mean_rows(sg.rows, *sg.mask);
    int live = 0;
    for (bool m : *sg.mask)
      if (m) ++live;
    out.trace.sg_weights.assign(sg.mask->size(), 0.0);
    for (std::size_t g = 0; g < sg.mask->size(); ++g)
      if ((*sg.mask)[g]) out.trace.sg_weights[g] = 1.0 / live;
  } else {
    AttendResult sg_attend = attend(tape_, params_.sg_attn, sg.rows, z, sg.rows, *sg.mask);
    sg_context = tape_.matmul_tn(sg_attend.weights, sg.rows);  // weighted raw rows
    const Tensor& w = tape_.value(sg_attend.weights);
    out.trace.sg_weights.assign(w.v.begin(), w.v.end());
  }

  bool stage1 = rot_texts.empty() || variant == Variant::SgAttentionNoRot;
  if (stage1) {
    out.logits = classify(params_.stage1_clf, tape_.concat_cols({sg_context, z}));
    return out;
  }

  std::vector<Tape::Var> rot_rows;
  for (const auto& t : rot_texts) rot_rows.push_back(encode(t));
  Tape::Var val = tape_.concat_rows(rot_rows);
  std::vector<bool> rot_mask(rot_texts.size(), true);
  AttendResult val_attend = attend(tape_, params_.value_attn, val, sg_context, val, rot_mask);
  Tape::Var value_context = tape_.matmul_tn(val_attend.weights, val);
  const Tensor& vw = tape_.value(val_attend.weights);
  out.trace.value_weights.assign(vw.v.begin(), vw.v.end());

  out.logits = classify(params_.final_clf, tape_.concat_cols({value_context, z}));
  return out;
}

int label_index(Judgment j) { return j == Judgment::Acceptable ? 0 : 1; }

Judgment index_label(int idx) { return idx == 0 ? Judgment::Acceptable : Judgment::Unacceptable; }

Judgment predict_from_logits(const Tensor& logits) {
  return logits.at(0, 1) > logits.at(0, 0) ? Judgment::Unacceptable : Judgment::Acceptable;
}

Tape::Var model_loss(Tape& tape, Tape::Var logits, Judgment label) {
  return tape.cross_entropy(logits, label_index(label));
}

}  // namespace sga
