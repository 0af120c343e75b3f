#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "sga/tensor.hpp"
#include "test_util.hpp"

using namespace sga;
using test::rel_err;

namespace {

// Central-difference gradient check for a graph built by `build` over the
// given leaves. `build` must return a scalar var and may capture the leaf
// vars it is handed.
void gradcheck(std::vector<Tensor> leaves,
               const std::function<Tape::Var(Tape&, std::vector<Tape::Var>&)>& build,
               double tol = 1e-7) {
  Tape tape;
  std::vector<Tape::Var> vars;
  for (const auto& l : leaves) vars.push_back(tape.leaf(l));
  Tape::Var loss = build(tape, vars);
  tape.backward(loss);

  constexpr double kEps = 1e-6;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    for (std::size_t i = 0; i < leaves[li].v.size(); ++i) {
      auto eval = [&](double delta) {
        std::vector<Tensor> bumped = leaves;
        bumped[li].v[i] += delta;
        Tape t2;
        std::vector<Tape::Var> vs;
        for (const auto& l : bumped) vs.push_back(t2.leaf(l));
        return t2.value(build(t2, vs)).at(0, 0);
      };
      double numeric = (eval(kEps) - eval(-kEps)) / (2.0 * kEps);
      double analytic = tape.grad(vars[li]).v[i];
      INFO("leaf ", li, " entry ", i, " analytic ", analytic, " numeric ", numeric);
      CHECK(rel_err(analytic, numeric) < tol);
    }
  }
}

}  // namespace

TEST_CASE("matmul value") {
  Tape tape;
  Tensor a(2, 3);
  a.v = {1, 2, 3, 4, 5, 6};
  Tensor b(3, 2);
  b.v = {7, 8, 9, 10, 11, 12};
  Tape::Var c = tape.matmul(tape.constant(a), tape.constant(b));
  const Tensor& v = tape.value(c);
  CHECK(v.at(0, 0) == 58);
  CHECK(v.at(0, 1) == 64);
  CHECK(v.at(1, 0) == 139);
  CHECK(v.at(1, 1) == 154);
}

TEST_CASE("gradients: matmul family") {
  Rng rng(3);
  gradcheck({test::random_tensor(2, 3, rng), test::random_tensor(3, 4, rng)},
            [](Tape& t, std::vector<Tape::Var>& v) {
              return test::scalarize(t, t.matmul(v[0], v[1]));
            });
  gradcheck({test::random_tensor(2, 3, rng), test::random_tensor(4, 3, rng)},
            [](Tape& t, std::vector<Tape::Var>& v) {
              return test::scalarize(t, t.matmul_nt(v[0], v[1]));
            });
  gradcheck({test::random_tensor(3, 2, rng), test::random_tensor(3, 4, rng)},
            [](Tape& t, std::vector<Tape::Var>& v) {
              return test::scalarize(t, t.matmul_tn(v[0], v[1]));
            });
}

TEST_CASE("gradients: elementwise and broadcast ops") {
  Rng rng(4);
  gradcheck({test::random_tensor(3, 4, rng), test::random_tensor(3, 4, rng)},
            [](Tape& t, std::vector<Tape::Var>& v) {
              return test::scalarize(t, t.add(v[0], v[1]));
            });
  gradcheck({test::random_tensor(3, 4, rng), test::random_tensor(1, 4, rng)},
            [](Tape& t, std::vector<Tape::Var>& v) {
              return test::scalarize(t, t.add_row_broadcast(v[0], v[1]));
            });
  gradcheck({test::random_tensor(3, 4, rng)}, [](Tape& t, std::vector<Tape::Var>& v) {
    return test::scalarize(t, t.scale(v[0], -1.7));
  });
  // relu kink avoided by keeping entries away from zero
  Tensor r = test::random_tensor(3, 4, rng);
  for (double& x : r.v) x += (x >= 0 ? 0.5 : -0.5);
  gradcheck({r}, [](Tape& t, std::vector<Tape::Var>& v) {
    return test::scalarize(t, t.relu(v[0]));
  });
}

TEST_CASE("gradients: reductions, softmax, layer norm") {
  Rng rng(5);
  gradcheck({test::random_tensor(4, 3, rng)}, [](Tape& t, std::vector<Tape::Var>& v) {
    return test::scalarize(t, t.mean_rows(v[0]));
  });
  std::vector<bool> mask = {true, false, true, true};
  gradcheck({test::random_tensor(4, 3, rng)}, [mask](Tape& t, std::vector<Tape::Var>& v) {
    return test::scalarize(t, t.masked_mean_rows(v[0], mask));
  });
  gradcheck({test::random_tensor(3, 5, rng)}, [](Tape& t, std::vector<Tape::Var>& v) {
    return test::scalarize(t, t.softmax_rows(v[0]));
  });
  gradcheck({test::random_tensor(4, 1, rng)}, [mask](Tape& t, std::vector<Tape::Var>& v) {
    return test::scalarize(t, t.masked_softmax_col(v[0], mask));
  });
  gradcheck({test::random_tensor(3, 6, rng), test::random_tensor(1, 6, rng),
             test::random_tensor(1, 6, rng)},
            [](Tape& t, std::vector<Tape::Var>& v) {
              return test::scalarize(t, t.layer_norm_rows(v[0], v[1], v[2]));
            },
            1e-5);
}

TEST_CASE("gradients: concat, gather, cross entropy") {
  Rng rng(6);
  gradcheck({test::random_tensor(2, 3, rng), test::random_tensor(2, 4, rng)},
            [](Tape& t, std::vector<Tape::Var>& v) {
              return test::scalarize(t, t.concat_cols({v[0], v[1]}));
            });
  gradcheck({test::random_tensor(2, 3, rng), test::random_tensor(4, 3, rng)},
            [](Tape& t, std::vector<Tape::Var>& v) {
              return test::scalarize(t, t.concat_rows({v[0], v[1]}));
            });
  std::vector<int> ids = {1, 0, 1, 3};
  gradcheck({test::random_tensor(4, 3, rng)}, [ids](Tape& t, std::vector<Tape::Var>& v) {
    return test::scalarize(t, t.gather_rows(v[0], ids));
  });
  gradcheck({test::random_tensor(1, 2, rng)}, [](Tape& t, std::vector<Tape::Var>& v) {
    return t.cross_entropy(v[0], 1);
  });
  gradcheck({test::random_tensor(1, 1, rng), test::random_tensor(1, 1, rng)},
            [](Tape& t, std::vector<Tape::Var>& v) {
              return t.mean_of_scalars({v[0], v[1], v[0]});
            });
}

TEST_CASE("cross entropy closed-form values") {
  Tape tape;
  Tensor z(1, 2);
  z.v = {0.0, 0.0};
  CHECK(tape.value(tape.cross_entropy(tape.constant(z), 0)).at(0, 0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  Tensor z2(1, 2);
  z2.v = {10.0, -10.0};
  double loss = tape.value(tape.cross_entropy(tape.constant(z2), 0)).at(0, 0);
  CHECK(loss == doctest::Approx(std::log(1.0 + std::exp(-20.0))).epsilon(1e-9));
  CHECK(loss >= 0.0);
}

TEST_CASE("masked softmax pins masked slots to exact zero") {
  Tape tape;
  Tensor s(4, 1);
  s.v = {100.0, 5.0, -3.0, 50.0};
  std::vector<bool> mask = {false, true, true, false};
  const Tensor& w = tape.value(tape.masked_softmax_col(tape.constant(s), mask));
  CHECK(w.at(0, 0) == 0.0);
  CHECK(w.at(3, 0) == 0.0);
  double sum = w.at(1, 0) + w.at(2, 0);
  CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("softmax is shift invariant within 1e-9") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor s = test::random_tensor(6, 1, rng, 4.0);
    Tensor shifted = s;
    double c = rng.uniform(-7.0, 7.0);
    for (double& x : shifted.v) x += c;
    std::vector<bool> mask(6, true);
    mask[static_cast<std::size_t>(rng.below(6))] = false;
    Tape tape;
    const Tensor& a = tape.value(tape.masked_softmax_col(tape.constant(s), mask));
    const Tensor& b = tape.value(tape.masked_softmax_col(tape.constant(shifted), mask));
    for (std::size_t i = 0; i < a.v.size(); ++i) CHECK(std::abs(a.v[i] - b.v[i]) <= 1e-9);
  }
}

TEST_CASE("two backward passes accumulate identically") {
  Rng rng(9);
  Tensor a = test::random_tensor(3, 3, rng);
  Tape tape;
  Tape::Var v = tape.leaf(a);
  Tape::Var loss = test::scalarize(tape, tape.matmul(v, v));
  tape.backward(loss);
  Tensor once = tape.grad(v);
  tape.backward(loss);
  const Tensor& twice = tape.grad(v);
  for (std::size_t i = 0; i < once.v.size(); ++i)
    CHECK(twice.v[i] == doctest::Approx(2.0 * once.v[i]).epsilon(1e-12));
}

TEST_CASE("bind dedupes by address and reports zero grads as absent") {
  Tensor p(2, 2, 1.0);
  Tensor unused(2, 2, 1.0);
  Tape tape;
  Tape::Var a = tape.bind(p);
  Tape::Var b = tape.bind(p);
  CHECK(a.id == b.id);
  Tape::Var loss = test::scalarize(tape, tape.add(a, b));
  tape.backward(loss);
  CHECK(tape.grad_of(p) != nullptr);
  CHECK(tape.grad_of(unused) == nullptr);
}

TEST_CASE("no-grad tape refuses backward") {
  Tape tape(false);
  Tensor p(1, 1, 2.0);
  Tape::Var v = tape.bind(p);
  Tape::Var loss = tape.scale(v, 3.0);
  CHECK(tape.value(loss).at(0, 0) == 6.0);
  CHECK_THROWS(tape.backward(loss));
}

TEST_CASE("shape mismatches throw") {
  Tape tape;
  Tensor a(2, 3), b(2, 3);
  CHECK_THROWS(tape.matmul(tape.constant(a), tape.constant(b)));
  Tensor s(3, 1);
  CHECK_THROWS(tape.masked_softmax_col(tape.constant(s), {true, true}));
  CHECK_THROWS(tape.masked_softmax_col(tape.constant(s), {false, false, false}));
}
