#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sga/corpus.hpp"
#include "sga/encoder.hpp"
#include "sga/sgbase.hpp"
#include "sga/tensor.hpp"

namespace sga {

enum class Variant {
  Baseline,
  BaselineFinetuned,
  RotSelfAttention,
  LatentSg,
  StaticSg,
  SgAttentionNoRot,
  SgAttention,
};

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(std::string_view s);

// Score normalization inside attention. The default divides by 1: dividing
// by sqrt(d_k) flattens the weight distributions we want to read out.
enum class NormMode { One, SqrtDk };

struct MultiheadParams {
  int heads = 12;
  NormMode norm = NormMode::One;
  std::vector<Tensor> wq, wk, wv;  // per head: hidden x head_dim
  Tensor wo;                       // hidden x hidden
};

struct ClassifierParams {
  Tensor w1, b1, w2, b2;  // affine -> relu -> affine -> 2 logits
};

struct ModelConfig {
  EncoderConfig encoder;
  int attn_heads = 12;
  NormMode norm = NormMode::One;
  int sg_slots = 120;  // G = clusters * per_cluster
  int rot_count = 5;   // K
  int head_dim() const { return encoder.hidden / attn_heads; }
};

// The complete trainable state. Which pieces a forward touches depends on the
// variant; untouched parameters get exactly zero gradient.
struct ModelParams {
  ModelConfig cfg;
  Variant variant = Variant::SgAttention;

  EncoderParams encoder;
  MultiheadParams sg_attn;
  MultiheadParams value_attn;
  ClassifierParams stage1_clf;  // [sg context ; situation] -> 2
  ClassifierParams final_clf;   // [value context ; situation] -> 2
  ClassifierParams seq_clf;     // situation only -> 2 (baselines)
  std::optional<Tensor> latent_sg;  // sg_slots x hidden, LatentSg only

  void init(std::uint64_t seed);
  void for_each_tensor(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each_tensor(const std::function<void(const std::string&, const Tensor&)>& fn) const;
  // Tensors updated in stage 2 when the shared stack is frozen: everything
  // except the encoder and sg attention.
  static bool is_shared_tensor(const std::string& name);
};

// Per-prediction explanation: a distribution over subjective-ground slots and
// one over rule-of-thumb candidates, each the mean over attention heads.
// Empty when the variant has no such stage.
struct AttentionTrace {
  std::vector<double> sg_weights;
  std::vector<double> value_weights;
};

struct AttendResult {
  Tape::Var context;   // multi-head output: per-head weighted W^V rows, concat, W^O
  Tape::Var weights;   // (n,1) mean over heads; masked slots exactly zero
  std::vector<Tape::Var> per_head_weights;
};

// Single-key multi-head attention: per head, score_g = (q_g W^Q) . (key W^K) / norm,
// softmax over g with masked slots pinned to zero.
AttendResult attend(Tape& tape, const MultiheadParams& params, Tape::Var queries, Tape::Var key,
                    Tape::Var values, const std::vector<bool>& mask);

struct ModelOutput {
  Tape::Var logits;  // (1,2); class 0 = acceptable
  AttentionTrace trace;
};

// Builds forward graphs on one tape. Text and subjective-ground encodings are
// cached per tape, so batching instances of one annotator shares the SG
// encoding work and the gradients fan in through the shared nodes.
class GraphBuilder {
 public:
  GraphBuilder(Tape& tape, const ModelParams& params);

  Tape::Var encode(const std::string& text);

  // rot_texts may be empty for the subjective-ground variants; that selects
  // the first-stage path ([sg context ; situation] into the stage-1
  // classifier), which is how stage-1 training runs on DPlus.
  ModelOutput forward(const std::string& situation_text, const SgBase* base,
                      const std::vector<std::string>& rot_texts);

  Tape& tape() { return tape_; }

 private:
  struct SgMatrix {
    Tape::Var rows;  // (G, hidden)
    const std::vector<bool>* mask;
  };
  SgMatrix sg_matrix(const SgBase& base);
  SgMatrix latent_matrix();
  Tape::Var classify(const ClassifierParams& clf, Tape::Var input);

  Tape& tape_;
  const ModelParams& params_;
  Tokenizer tokenizer_;
  std::unordered_map<std::string, Tape::Var> text_cache_;
  std::unordered_map<std::string, SgMatrix> sg_cache_;
  std::vector<bool> latent_mask_;
};

int label_index(Judgment j);
Judgment index_label(int idx);
Judgment predict_from_logits(const Tensor& logits);

// Softmax cross-entropy against the 2-class label, as a standalone op for
// callers that already have logits on a tape.
Tape::Var model_loss(Tape& tape, Tape::Var logits, Judgment label);

}  // namespace sga
