#include "sga/tensor.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace sga {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::logic_error(std::string("tensor: ") + what);
}

}  // namespace

Tape::Var Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.grad = Tensor(n.value.rows, n.value.cols);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Var Tape::constant(Tensor t) { return push(std::move(t), false, nullptr); }

Tape::Var Tape::leaf(Tensor t) { return push(std::move(t), track_, nullptr); }

Tape::Var Tape::bind(const Tensor& parameter) {
  auto it = bindings_.find(&parameter);
  if (it != bindings_.end()) return Var{it->second};
  Var v = leaf(parameter);
  bindings_[&parameter] = v.id;
  return v;
}

const Tensor* Tape::grad_of(const Tensor& parameter) const {
  auto it = bindings_.find(&parameter);
  if (it == bindings_.end()) return nullptr;
  return &nodes_[static_cast<std::size_t>(it->second)].grad;
}

void Tape::backward(Var loss) {
  check(loss.valid(), "backward on invalid var");
  Node& l = node(loss);
  check(l.value.rows == 1 && l.value.cols == 1, "backward target must be scalar");
  check(l.needs_grad, "backward target does not require grad");
  l.grad.at(0, 0) += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backprop && n.needs_grad) n.backprop(*this);
  }
}

bool Tape::any_needs_grad(const std::vector<Var>& vars) const {
  for (Var v : vars)
    if (node(v).needs_grad) return true;
  return false;
}

// ---- ops ----

Tape::Var Tape::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.cols == B.rows, "matmul shape mismatch");
  Tensor C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int k = 0; k < A.cols; ++k) {
      double aik = A.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) C.at(i, j) += aik * B.at(k, j);
    }
  bool ng = any_needs_grad({a, b});
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [a, b, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      const Tensor& A = t.value(a);
      const Tensor& B = t.value(b);
      if (t.node(a).needs_grad) {
        Tensor& dA = t.node(a).grad;  // dA += G . B^T
        for (int i = 0; i < G.rows; ++i)
          for (int j = 0; j < G.cols; ++j) {
            double g = G.at(i, j);
            if (g == 0.0) continue;
            for (int k = 0; k < B.rows; ++k) dA.at(i, k) += g * B.at(k, j);
          }
      }
      if (t.node(b).needs_grad) {
        Tensor& dB = t.node(b).grad;  // dB += A^T . G
        for (int i = 0; i < A.rows; ++i)
          for (int k = 0; k < A.cols; ++k) {
            double aik = A.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < G.cols; ++j) dB.at(k, j) += aik * G.at(i, j);
          }
      }
    };
  }
  return out;
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.cols == B.cols, "matmul_nt shape mismatch");
  Tensor C(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < B.rows; ++j) {
      double s = 0.0;
      for (int k = 0; k < A.cols; ++k) s += A.at(i, k) * B.at(j, k);
      C.at(i, j) = s;
    }
  bool ng = any_needs_grad({a, b});
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [a, b, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      const Tensor& A = t.value(a);
      const Tensor& B = t.value(b);
      if (t.node(a).needs_grad) {
        Tensor& dA = t.node(a).grad;  // dA += G . B
        for (int i = 0; i < G.rows; ++i)
          for (int j = 0; j < G.cols; ++j) {
            double g = G.at(i, j);
            if (g == 0.0) continue;
            for (int k = 0; k < B.cols; ++k) dA.at(i, k) += g * B.at(j, k);
          }
      }
      if (t.node(b).needs_grad) {
        Tensor& dB = t.node(b).grad;  // dB += G^T . A
        for (int i = 0; i < G.rows; ++i)
          for (int j = 0; j < G.cols; ++j) {
            double g = G.at(i, j);
            if (g == 0.0) continue;
            for (int k = 0; k < A.cols; ++k) dB.at(j, k) += g * A.at(i, k);
          }
      }
    };
  }
  return out;
}

Tape::Var Tape::matmul_tn(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.rows == B.rows, "matmul_tn shape mismatch");
  Tensor C(A.cols, B.cols);
  for (int k = 0; k < A.rows; ++k)
    for (int i = 0; i < A.cols; ++i) {
      double aki = A.at(k, i);
      if (aki == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) C.at(i, j) += aki * B.at(k, j);
    }
  bool ng = any_needs_grad({a, b});
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [a, b, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      const Tensor& A = t.value(a);
      const Tensor& B = t.value(b);
      if (t.node(a).needs_grad) {
        Tensor& dA = t.node(a).grad;  // dA += B . G^T
        for (int k = 0; k < B.rows; ++k)
          for (int j = 0; j < B.cols; ++j) {
            double bkj = B.at(k, j);
            if (bkj == 0.0) continue;
            for (int i = 0; i < G.rows; ++i) dA.at(k, i) += bkj * G.at(i, j);
          }
      }
      if (t.node(b).needs_grad) {
        Tensor& dB = t.node(b).grad;  // dB += A . G
        for (int k = 0; k < A.rows; ++k)
          for (int i = 0; i < A.cols; ++i) {
            double aki = A.at(k, i);
            if (aki == 0.0) continue;
            for (int j = 0; j < G.cols; ++j) dB.at(k, j) += aki * G.at(i, j);
          }
      }
    };
  }
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.same_shape(B), "add shape mismatch");
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.v[i] += B.v[i];
  bool ng = any_needs_grad({a, b});
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [a, b, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      if (t.node(a).needs_grad) {
        Tensor& dA = t.node(a).grad;
        for (std::size_t i = 0; i < G.size(); ++i) dA.v[i] += G.v[i];
      }
      if (t.node(b).needs_grad) {
        Tensor& dB = t.node(b).grad;
        for (std::size_t i = 0; i < G.size(); ++i) dB.v[i] += G.v[i];
      }
    };
  }
  return out;
}

Tape::Var Tape::add_row_broadcast(Var a, Var row) {
  const Tensor& A = value(a);
  const Tensor& R = value(row);
  check(R.rows == 1 && R.cols == A.cols, "add_row_broadcast shape mismatch");
  Tensor C = A;
  for (int i = 0; i < C.rows; ++i)
    for (int j = 0; j < C.cols; ++j) C.at(i, j) += R.at(0, j);
  bool ng = any_needs_grad({a, row});
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [a, row, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      if (t.node(a).needs_grad) {
        Tensor& dA = t.node(a).grad;
        for (std::size_t i = 0; i < G.size(); ++i) dA.v[i] += G.v[i];
      }
      if (t.node(row).needs_grad) {
        Tensor& dR = t.node(row).grad;
        for (int i = 0; i < G.rows; ++i)
          for (int j = 0; j < G.cols; ++j) dR.at(0, j) += G.at(i, j);
      }
    };
  }
  return out;
}

Tape::Var Tape::scale(Var a, double c) {
  Tensor C = value(a);
  for (double& x : C.v) x *= c;
  bool ng = node(a).needs_grad;
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [a, c, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      Tensor& dA = t.node(a).grad;
      for (std::size_t i = 0; i < G.size(); ++i) dA.v[i] += c * G.v[i];
    };
  }
  return out;
}

Tape::Var Tape::relu(Var a) {
  Tensor C = value(a);
  for (double& x : C.v)
    if (x < 0.0) x = 0.0;
  bool ng = node(a).needs_grad;
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [a, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      const Tensor& A = t.value(a);
      Tensor& dA = t.node(a).grad;
      for (std::size_t i = 0; i < G.size(); ++i)
        if (A.v[i] > 0.0) dA.v[i] += G.v[i];
    };
  }
  return out;
}

Tape::Var Tape::softmax_rows(Var a) {
  const Tensor& A = value(a);
  Tensor S(A.rows, A.cols);
  for (int i = 0; i < A.rows; ++i) {
    double mx = A.at(i, 0);
    for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < A.cols; ++j) sum += std::exp(A.at(i, j) - mx);
    for (int j = 0; j < A.cols; ++j) S.at(i, j) = std::exp(A.at(i, j) - mx) / sum;
  }
  bool ng = node(a).needs_grad;
  Var out = push(std::move(S), ng, nullptr);
  if (ng) {
    node(out).backprop = [a, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      const Tensor& S = t.value(out);
      Tensor& dA = t.node(a).grad;
      for (int i = 0; i < S.rows; ++i) {
        double gs = 0.0;
        for (int j = 0; j < S.cols; ++j) gs += G.at(i, j) * S.at(i, j);
        for (int j = 0; j < S.cols; ++j) dA.at(i, j) += S.at(i, j) * (G.at(i, j) - gs);
      }
    };
  }
  return out;
}

Tape::Var Tape::masked_softmax_col(Var scores, const std::vector<bool>& mask) {
  const Tensor& A = value(scores);
  check(A.cols == 1, "masked_softmax_col expects a column vector");
  check(static_cast<int>(mask.size()) == A.rows, "mask length mismatch");
  int live = 0;
  for (bool m : mask)
    if (m) ++live;
  check(live > 0, "masked_softmax_col: all slots masked");

  Tensor S(A.rows, 1);
  double mx = -1e300;
  for (int i = 0; i < A.rows; ++i)
    if (mask[static_cast<std::size_t>(i)]) mx = std::max(mx, A.at(i, 0));
  double sum = 0.0;
  for (int i = 0; i < A.rows; ++i)
    if (mask[static_cast<std::size_t>(i)]) sum += std::exp(A.at(i, 0) - mx);
  for (int i = 0; i < A.rows; ++i)
    S.at(i, 0) = mask[static_cast<std::size_t>(i)] ? std::exp(A.at(i, 0) - mx) / sum : 0.0;

  bool ng = node(scores).needs_grad;
  Var out = push(std::move(S), ng, nullptr);
  if (ng) {
    node(out).backprop = [scores, out, mask](Tape& t) {
      const Tensor& G = t.node(out).grad;
      const Tensor& S = t.value(out);
      Tensor& dA = t.node(scores).grad;
      double gs = 0.0;
      for (int i = 0; i < S.rows; ++i)
        if (mask[static_cast<std::size_t>(i)]) gs += G.at(i, 0) * S.at(i, 0);
      for (int i = 0; i < S.rows; ++i)
        if (mask[static_cast<std::size_t>(i)])
          dA.at(i, 0) += S.at(i, 0) * (G.at(i, 0) - gs);
    };
  }
  return out;
}

Tape::Var Tape::layer_norm_rows(Var x, Var gain, Var bias) {
  constexpr double kEps = 1e-5;
  const Tensor& X = value(x);
  const Tensor& Gn = value(gain);
  const Tensor& B = value(bias);
  check(Gn.rows == 1 && Gn.cols == X.cols && B.rows == 1 && B.cols == X.cols,
        "layer_norm shape mismatch");
  Tensor Y(X.rows, X.cols);
  Tensor xhat(X.rows, X.cols);
  std::vector<double> inv_std(static_cast<std::size_t>(X.rows));
  for (int i = 0; i < X.rows; ++i) {
    double mean = 0.0;
    for (int j = 0; j < X.cols; ++j) mean += X.at(i, j);
    mean /= X.cols;
    double var = 0.0;
    for (int j = 0; j < X.cols; ++j) {
      double d = X.at(i, j) - mean;
      var += d * d;
    }
    var /= X.cols;
    double is = 1.0 / std::sqrt(var + kEps);
    inv_std[static_cast<std::size_t>(i)] = is;
    for (int j = 0; j < X.cols; ++j) {
      double xh = (X.at(i, j) - mean) * is;
      xhat.at(i, j) = xh;
      Y.at(i, j) = xh * Gn.at(0, j) + B.at(0, j);
    }
  }
  bool ng = any_needs_grad({x, gain, bias});
  Var out = push(std::move(Y), ng, nullptr);
  if (ng) {
    node(out).backprop = [x, gain, bias, out, xhat, inv_std](Tape& t) {
      const Tensor& G = t.node(out).grad;
      const Tensor& Gn = t.value(gain);
      int n = G.cols;
      if (t.node(gain).needs_grad) {
        Tensor& dG = t.node(gain).grad;
        for (int i = 0; i < G.rows; ++i)
          for (int j = 0; j < n; ++j) dG.at(0, j) += G.at(i, j) * xhat.at(i, j);
      }
      if (t.node(bias).needs_grad) {
        Tensor& dB = t.node(bias).grad;
        for (int i = 0; i < G.rows; ++i)
          for (int j = 0; j < n; ++j) dB.at(0, j) += G.at(i, j);
      }
      if (t.node(x).needs_grad) {
        Tensor& dX = t.node(x).grad;
        for (int i = 0; i < G.rows; ++i) {
          double sum_gy = 0.0, sum_gyx = 0.0;
          for (int j = 0; j < n; ++j) {
            double gy = G.at(i, j) * Gn.at(0, j);
            sum_gy += gy;
            sum_gyx += gy * xhat.at(i, j);
          }
          double is = inv_std[static_cast<std::size_t>(i)];
          for (int j = 0; j < n; ++j) {
            double gy = G.at(i, j) * Gn.at(0, j);
            dX.at(i, j) += is * (gy - sum_gy / n - xhat.at(i, j) * sum_gyx / n);
          }
        }
      }
    };
  }
  return out;
}

Tape::Var Tape::mean_rows(Var a) {
  const Tensor& A = value(a);
  check(A.rows >= 1, "mean_rows of empty tensor");
  Tensor C(1, A.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) C.at(0, j) += A.at(i, j);
  for (int j = 0; j < A.cols; ++j) C.at(0, j) /= A.rows;
  bool ng = node(a).needs_grad;
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [a, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      const Tensor& A = t.value(a);
      Tensor& dA = t.node(a).grad;
      for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) dA.at(i, j) += G.at(0, j) / A.rows;
    };
  }
  return out;
}

Tape::Var Tape::masked_mean_rows(Var a, const std::vector<bool>& mask) {
  const Tensor& A = value(a);
  check(static_cast<int>(mask.size()) == A.rows, "mask length mismatch");
  int live = 0;
  for (bool m : mask)
    if (m) ++live;
  check(live > 0, "masked_mean_rows: all rows masked");
  Tensor C(1, A.cols);
  for (int i = 0; i < A.rows; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    for (int j = 0; j < A.cols; ++j) C.at(0, j) += A.at(i, j);
  }
  for (int j = 0; j < A.cols; ++j) C.at(0, j) /= live;
  bool ng = node(a).needs_grad;
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [a, out, mask, live](Tape& t) {
      const Tensor& G = t.node(out).grad;
      const Tensor& A = t.value(a);
      Tensor& dA = t.node(a).grad;
      for (int i = 0; i < A.rows; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        for (int j = 0; j < A.cols; ++j) dA.at(i, j) += G.at(0, j) / live;
      }
    };
  }
  return out;
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_cols of nothing");
  int rows = value(parts[0]).rows;
  int cols = 0;
  for (Var p : parts) {
    check(value(p).rows == rows, "concat_cols row mismatch");
    cols += value(p).cols;
  }
  Tensor C(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Tensor& P = value(p);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < P.cols; ++j) C.at(i, off + j) = P.at(i, j);
    off += P.cols;
  }
  bool ng = any_needs_grad(parts);
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [parts, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      int off = 0;
      for (Var p : parts) {
        const Tensor& P = t.value(p);
        if (t.node(p).needs_grad) {
          Tensor& dP = t.node(p).grad;
          for (int i = 0; i < P.rows; ++i)
            for (int j = 0; j < P.cols; ++j) dP.at(i, j) += G.at(i, off + j);
        }
        off += P.cols;
      }
    };
  }
  return out;
}

Tape::Var Tape::concat_rows(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_rows of nothing");
  int cols = value(parts[0]).cols;
  int rows = 0;
  for (Var p : parts) {
    check(value(p).cols == cols, "concat_rows col mismatch");
    rows += value(p).rows;
  }
  Tensor C(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Tensor& P = value(p);
    for (int i = 0; i < P.rows; ++i)
      for (int j = 0; j < cols; ++j) C.at(off + i, j) = P.at(i, j);
    off += P.rows;
  }
  bool ng = any_needs_grad(parts);
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [parts, out](Tape& t) {
      const Tensor& G = t.node(out).grad;
      int off = 0;
      for (Var p : parts) {
        const Tensor& P = t.value(p);
        if (t.node(p).needs_grad) {
          Tensor& dP = t.node(p).grad;
          for (int i = 0; i < P.rows; ++i)
            for (int j = 0; j < P.cols; ++j) dP.at(i, j) += G.at(off + i, j);
        }
        off += P.rows;
      }
    };
  }
  return out;
}

Tape::Var Tape::gather_rows(Var table, const std::vector<int>& ids) {
  const Tensor& T = value(table);
  check(!ids.empty(), "gather_rows with no ids");
  Tensor C(static_cast<int>(ids.size()), T.cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    check(ids[i] >= 0 && ids[i] < T.rows, "gather_rows id out of range");
    for (int j = 0; j < T.cols; ++j) C.at(static_cast<int>(i), j) = T.at(ids[i], j);
  }
  bool ng = node(table).needs_grad;
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [table, out, ids](Tape& t) {
      const Tensor& G = t.node(out).grad;
      Tensor& dT = t.node(table).grad;
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (int j = 0; j < G.cols; ++j) dT.at(ids[i], j) += G.at(static_cast<int>(i), j);
    };
  }
  return out;
}

Tape::Var Tape::cross_entropy(Var logits, int label) {
  const Tensor& L = value(logits);
  check(L.rows == 1, "cross_entropy expects a logit row");
  check(label >= 0 && label < L.cols, "cross_entropy label out of range");
  double mx = L.at(0, 0);
  for (int j = 1; j < L.cols; ++j) mx = std::max(mx, L.at(0, j));
  double sum = 0.0;
  for (int j = 0; j < L.cols; ++j) sum += std::exp(L.at(0, j) - mx);
  double logz = std::log(sum) + mx;
  Tensor C(1, 1);
  C.at(0, 0) = logz - L.at(0, label);
  bool ng = node(logits).needs_grad;
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [logits, out, label, logz](Tape& t) {
      double g = t.node(out).grad.at(0, 0);
      const Tensor& L = t.value(logits);
      Tensor& dL = t.node(logits).grad;
      for (int j = 0; j < L.cols; ++j) {
        double p = std::exp(L.at(0, j) - logz);
        dL.at(0, j) += g * (p - (j == label ? 1.0 : 0.0));
      }
    };
  }
  return out;
}

Tape::Var Tape::mean_of_scalars(const std::vector<Var>& scalars) {
  check(!scalars.empty(), "mean_of_scalars of nothing");
  Tensor C(1, 1);
  for (Var s : scalars) {
    check(value(s).rows == 1 && value(s).cols == 1, "mean_of_scalars expects scalars");
    C.at(0, 0) += value(s).at(0, 0);
  }
  C.at(0, 0) /= static_cast<double>(scalars.size());
  bool ng = any_needs_grad(scalars);
  Var out = push(std::move(C), ng, nullptr);
  if (ng) {
    node(out).backprop = [scalars, out](Tape& t) {
      double g = t.node(out).grad.at(0, 0) / static_cast<double>(scalars.size());
      for (Var s : scalars)
        if (t.node(s).needs_grad) t.node(s).grad.at(0, 0) += g;
    };
  }
  return out;
}

// ---- plain helpers ----

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace sga
