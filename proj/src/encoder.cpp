#include "sga/encoder.hpp"

#include <cmath>

#include "sga/error.hpp"
#include "sga/rng.hpp"
#include "sga/text.hpp"

namespace sga {

std::vector<int> Tokenizer::tokenize(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& word : split_words(text, lowercase)) {
    if (static_cast<int>(ids.size()) >= max_len) break;
    ids.push_back(static_cast<int>(fnv1a(word) % static_cast<std::uint64_t>(vocab)));
  }
  return ids;
}

StaticEmbedder::StaticEmbedder(Tokenizer tokenizer, int dim, const std::string& seed_name)
    : tokenizer_(tokenizer), dim_(dim), table_(tokenizer.vocab, dim) {
  std::uint64_t seed = fnv1a(seed_name);
  for (int r = 0; r < table_.rows; ++r)
    for (int c = 0; c < table_.cols; ++c) {
      std::uint64_t idx = static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(dim_) +
                          static_cast<std::uint64_t>(c);
      table_.at(r, c) = 2.0 * hashed_uniform(seed, idx) - 1.0;
    }
}

std::vector<double> StaticEmbedder::embed(std::string_view text) const {
  std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
  auto ids = tokenizer_.tokenize(text);
  if (ids.empty()) return out;
  for (int id : ids)
    for (int c = 0; c < dim_; ++c) out[static_cast<std::size_t>(c)] += table_.at(id, c);
  for (double& x : out) x /= static_cast<double>(ids.size());
  double norm = l2_norm(out);
  if (norm > 1e-12)
    for (double& x : out) x /= norm;
  else
    for (double& x : out) x = 0.0;  // degenerate cancellation
  return out;
}

// ---- trainable encoder ----

namespace {

Tensor xavier(int rows, int cols, Rng& rng) {
  Tensor t(rows, cols);
  double bound = std::sqrt(6.0 / (rows + cols));
  for (double& x : t.v) x = rng.uniform(-bound, bound);
  return t;
}

Tensor normal_init(int rows, int cols, double stddev, Rng& rng) {
  Tensor t(rows, cols);
  for (double& x : t.v) x = stddev * rng.normal();
  return t;
}

// Fixed sinusoidal position encodings; no trainable positions means no dead
// parameters for texts shorter than max_len.
Tensor position_encoding(int len, int dim) {
  Tensor p(len, dim);
  for (int pos = 0; pos < len; ++pos)
    for (int j = 0; j < dim; ++j) {
      double angle = pos / std::pow(10000.0, 2.0 * (j / 2) / dim);
      p.at(pos, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return p;
}

}  // namespace

void EncoderParams::init(std::uint64_t seed) {
  if (cfg.hidden % cfg.heads != 0)
    throw config_error("encoder hidden (" + std::to_string(cfg.hidden) +
                       ") must be divisible by encoder heads (" + std::to_string(cfg.heads) + ")");
  Rng rng(seed ^ fnv1a("encoder-init"));
  embedding = normal_init(cfg.vocab, cfg.hidden, 0.1, rng);
  blocks.assign(static_cast<std::size_t>(cfg.blocks), Block{});
  for (auto& b : blocks) {
    b.ln1_gain = Tensor(1, cfg.hidden, 1.0);
    b.ln1_bias = Tensor(1, cfg.hidden, 0.0);
    b.wq.clear();
    b.wk.clear();
    b.wv.clear();
    for (int h = 0; h < cfg.heads; ++h) {
      b.wq.push_back(xavier(cfg.hidden, cfg.head_dim(), rng));
      b.wk.push_back(xavier(cfg.hidden, cfg.head_dim(), rng));
      b.wv.push_back(xavier(cfg.hidden, cfg.head_dim(), rng));
    }
    b.wo = xavier(cfg.hidden, cfg.hidden, rng);
    b.ln2_gain = Tensor(1, cfg.hidden, 1.0);
    b.ln2_bias = Tensor(1, cfg.hidden, 0.0);
    b.ff_w1 = xavier(cfg.hidden, cfg.ff_dim(), rng);
    b.ff_b1 = Tensor(1, cfg.ff_dim(), 0.0);
    b.ff_w2 = xavier(cfg.ff_dim(), cfg.hidden, rng);
    b.ff_b2 = Tensor(1, cfg.hidden, 0.0);
  }
}

void EncoderParams::for_each_tensor(const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("encoder.embedding", embedding);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto& b = blocks[i];
    std::string p = "encoder.block" + std::to_string(i) + ".";
    fn(p + "ln1_gain", b.ln1_gain);
    fn(p + "ln1_bias", b.ln1_bias);
    for (std::size_t h = 0; h < b.wq.size(); ++h) {
      std::string hp = p + "head" + std::to_string(h) + ".";
      fn(hp + "wq", b.wq[h]);
      fn(hp + "wk", b.wk[h]);
      fn(hp + "wv", b.wv[h]);
    }
    fn(p + "wo", b.wo);
    fn(p + "ln2_gain", b.ln2_gain);
    fn(p + "ln2_bias", b.ln2_bias);
    fn(p + "ff_w1", b.ff_w1);
    fn(p + "ff_b1", b.ff_b1);
    fn(p + "ff_w2", b.ff_w2);
    fn(p + "ff_b2", b.ff_b2);
  }
}

void EncoderParams::for_each_tensor(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  const_cast<EncoderParams*>(this)->for_each_tensor(
      [&](const std::string& name, Tensor& t) { fn(name, t); });
}

Tape::Var encode_text(Tape& tape, const EncoderParams& params, const Tokenizer& tokenizer,
                      std::string_view text) {
  const EncoderConfig& cfg = params.cfg;
  auto ids = tokenizer.tokenize(text);
  if (ids.empty()) return tape.constant(Tensor(1, cfg.hidden));

  Tape::Var x = tape.gather_rows(tape.bind(params.embedding), ids);
  x = tape.add(x, tape.constant(position_encoding(static_cast<int>(ids.size()), cfg.hidden)));

  double norm = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
  for (const auto& b : params.blocks) {
    // self-attention sublayer
    Tape::Var normed = tape.layer_norm_rows(x, tape.bind(b.ln1_gain), tape.bind(b.ln1_bias));
    std::vector<Tape::Var> heads;
    for (std::size_t h = 0; h < b.wq.size(); ++h) {
      Tape::Var q = tape.matmul(normed, tape.bind(b.wq[h]));
      Tape::Var k = tape.matmul(normed, tape.bind(b.wk[h]));
      Tape::Var v = tape.matmul(normed, tape.bind(b.wv[h]));
      Tape::Var scores = tape.scale(tape.matmul_nt(q, k), norm);
      Tape::Var attn = tape.softmax_rows(scores);
      heads.push_back(tape.matmul(attn, v));
    }
    Tape::Var ctx = tape.matmul(tape.concat_cols(heads), tape.bind(b.wo));
    x = tape.add(x, ctx);

    // feed-forward sublayer
    Tape::Var normed2 = tape.layer_norm_rows(x, tape.bind(b.ln2_gain), tape.bind(b.ln2_bias));
    Tape::Var ff = tape.add_row_broadcast(tape.matmul(normed2, tape.bind(b.ff_w1)),
                                          tape.bind(b.ff_b1));
    ff = tape.relu(ff);
    ff = tape.add_row_broadcast(tape.matmul(ff, tape.bind(b.ff_w2)), tape.bind(b.ff_b2));
    x = tape.add(x, ff);
  }
  return tape.mean_rows(x);
}

}  // namespace sga
