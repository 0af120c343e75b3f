#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sga/tensor.hpp"

namespace sga {

// Feature-hashing tokenizer: token id = FNV-1a(token) mod vocab. No learned
// vocabulary, so ids are stable across runs, platforms, and corpora.
struct Tokenizer {
  int vocab = 4096;
  int max_len = 64;
  bool lowercase = true;

  std::vector<int> tokenize(std::string_view text) const;
};

// Deterministic bag-of-words sentence embedder used for clustering: mean of
// hashed token projections, L2-normalized. The projection table is a pure
// function of (seed name, vocab, dim); nothing is ever trained here.
class StaticEmbedder {
 public:
  StaticEmbedder(Tokenizer tokenizer, int dim, const std::string& seed_name = "static-embedder-v1");

  int dim() const { return dim_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }

  // Unit-norm embedding; empty text maps to the zero vector.
  std::vector<double> embed(std::string_view text) const;

 private:
  Tokenizer tokenizer_;
  int dim_;
  Tensor table_;  // vocab x dim
};

// ---- trainable encoder ----

struct EncoderConfig {
  int vocab = 4096;
  int max_len = 64;
  int hidden = 60;   // divisible by both encoder and attention head counts
  int blocks = 2;
  int heads = 2;
  int ff_dim() const { return 2 * hidden; }
  int head_dim() const { return hidden / heads; }
};

// Pre-norm transformer blocks (self-attention + feed-forward, residuals)
// over hashed token embeddings with fixed sinusoidal positions, mean-pooled
// to one vector per text.
struct EncoderParams {
  struct Block {
    Tensor ln1_gain, ln1_bias;
    std::vector<Tensor> wq, wk, wv;  // per head: hidden x head_dim
    Tensor wo;                       // hidden x hidden
    Tensor ln2_gain, ln2_bias;
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  };

  EncoderConfig cfg;
  Tensor embedding;  // vocab x hidden
  std::vector<Block> blocks;

  void init(std::uint64_t seed);
  void for_each_tensor(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each_tensor(const std::function<void(const std::string&, const Tensor&)>& fn) const;
};

// Forward pass for one text on the given tape; returns a 1 x hidden row.
// Empty text encodes to the zero vector (matching masked slots, whose
// content must not receive gradient).
Tape::Var encode_text(Tape& tape, const EncoderParams& params, const Tokenizer& tokenizer,
                      std::string_view text);

}  // namespace sga
