#include "sga/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sga/error.hpp"
#include "sga/io.hpp"
#include "sga/rng.hpp"

namespace sga {

namespace {

struct Confusion {
  double tp = 0, fp = 0, fn = 0;
};

Confusion confusion_for(const std::vector<Judgment>& preds, const std::vector<Judgment>& golds,
                        Judgment cls) {
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    bool p = preds[i] == cls;
    bool g = golds[i] == cls;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
  }
  return c;
}

double f1_of(const Confusion& c) {
  double denom = 2.0 * c.tp + c.fp + c.fn;
  return denom > 0.0 ? 2.0 * c.tp / denom : 0.0;
}

}  // namespace

ClassPrf class_prf(const std::vector<Judgment>& preds, const std::vector<Judgment>& golds,
                   Judgment cls) {
  Confusion c = confusion_for(preds, golds, cls);
  ClassPrf out;
  out.precision = (c.tp + c.fp) > 0.0 ? c.tp / (c.tp + c.fp) : 0.0;
  out.recall = (c.tp + c.fn) > 0.0 ? c.tp / (c.tp + c.fn) : 0.0;
  out.f1 = f1_of(c);
  return out;
}

double macro_f1(const std::vector<Judgment>& preds, const std::vector<Judgment>& golds) {
  if (preds.size() != golds.size())
    throw validation_error("macro_f1: predictions and golds differ in length");
  if (preds.empty()) throw validation_error("macro_f1: no instances");
  double fa = f1_of(confusion_for(preds, golds, Judgment::Acceptable));
  double fu = f1_of(confusion_for(preds, golds, Judgment::Unacceptable));
  return 100.0 * (fa + fu) / 2.0;
}

double random_baseline(const std::vector<Judgment>& golds, std::uint64_t seed, int runs) {
  if (golds.empty() || runs <= 0) return 0.0;
  Rng rng(seed ^ fnv1a("random-baseline"));
  double total = 0.0;
  std::vector<Judgment> preds(golds.size());
  for (int r = 0; r < runs; ++r) {
    for (auto& p : preds) p = rng.coin(0.5) ? Judgment::Acceptable : Judgment::Unacceptable;
    total += macro_f1(preds, golds);
  }
  return total / runs;
}

PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw validation_error("pearson: length mismatch");
  if (xs.size() < 2) return {std::nullopt, "fewer than 2 pairs"};
  double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return {std::nullopt, "zero variance"};
  return {sxy / std::sqrt(sxx * syy), ""};
}

std::vector<ClusterAccuracyRow> cluster_accuracy(const std::vector<Judgment>& preds,
                                                 const std::vector<Judgment>& golds,
                                                 const std::vector<int>& clusters,
                                                 const std::vector<double>& cluster_silhouette) {
  if (preds.size() != golds.size() || preds.size() != clusters.size())
    throw validation_error("cluster_accuracy: input length mismatch");
  std::map<int, std::pair<std::vector<Judgment>, std::vector<Judgment>>> grouped;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    grouped[clusters[i]].first.push_back(preds[i]);
    grouped[clusters[i]].second.push_back(golds[i]);
  }
  std::vector<ClusterAccuracyRow> rows;
  for (const auto& [cluster, pg] : grouped) {
    ClusterAccuracyRow row;
    row.cluster = cluster;
    row.count = pg.first.size();
    row.f1 = macro_f1(pg.first, pg.second);
    if (cluster >= 0 && static_cast<std::size_t>(cluster) < cluster_silhouette.size())
      row.silhouette = cluster_silhouette[static_cast<std::size_t>(cluster)];
    rows.push_back(row);
  }
  return rows;
}

ValueConsistencyResult value_consistency(const std::vector<ValueConsistencyInput>& inputs) {
  ValueConsistencyResult res;
  for (const auto& in : inputs) {
    if (in.value_weights.empty() ||
        in.value_weights.size() != in.rot_polarities.size() ||
        std::any_of(in.rot_polarities.begin(), in.rot_polarities.end(),
                    [](const std::optional<Judgment>& p) { return !p.has_value(); })) {
      ++res.excluded;
      continue;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < in.value_weights.size(); ++i)
      if (in.value_weights[i] > in.value_weights[best]) best = i;  // lowest index wins ties
    ++res.evaluated;
    if (*in.rot_polarities[best] == in.prediction) ++res.matched;
  }
  res.percent = res.evaluated > 0
                    ? 100.0 * static_cast<double>(res.matched) / static_cast<double>(res.evaluated)
                    : 0.0;
  return res;
}

std::vector<int> rank_permutation(const std::vector<double>& weights,
                                  const std::vector<bool>& mask) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (mask.empty() || mask[i]) idx.push_back(static_cast<int>(i));
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    double wa = weights[static_cast<std::size_t>(a)];
    double wb = weights[static_cast<std::size_t>(b)];
    if (wa != wb) return wa > wb;
    return a < b;
  });
  return idx;
}

bool same_order(const std::vector<int>& a, const std::vector<int>& b) { return a == b; }

bool same_top_m(const std::vector<int>& a, const std::vector<int>& b, int m) {
  auto mu = static_cast<std::size_t>(m);
  if (a.size() < mu || b.size() < mu) return a == b;
  for (std::size_t i = 0; i < mu; ++i)
    if (a[i] != b[i]) return false;
  return true;
}

const char* perturbation_kind_name(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::Gender: return "gender";
    case PerturbationKind::Rephrase: return "rephrase";
    default: return "abstract";
  }
}

std::optional<PerturbationKind> perturbation_kind_from_name(std::string_view s) {
  if (s == "gender") return PerturbationKind::Gender;
  if (s == "rephrase") return PerturbationKind::Rephrase;
  if (s == "abstract") return PerturbationKind::Abstract;
  return std::nullopt;
}

std::vector<PerturbationSet> load_perturbations(const std::string& path) {
  std::map<std::string, PerturbationSet> sets;
  std::vector<std::string> order;
  read_jsonl(path, [&](std::size_t lineno, const Json& j) {
    std::string where = path + ":" + std::to_string(lineno);
    std::string original = j.at("original_id").get<std::string>();
    auto kind = perturbation_kind_from_name(j.at("kind").get<std::string>());
    if (!kind) throw format_error(where + ": unknown perturbation kind");
    auto gold = judgment_from_name(j.at("gold").get<std::string>());
    if (!gold) throw format_error(where + ": unknown gold label");
    if (!sets.count(original)) {
      order.push_back(original);
      sets[original].original_id = original;
    }
    sets[original].variants.push_back({*kind, j.at("text").get<std::string>(), *gold});
  });
  if (sets.empty()) throw validation_error(path + ": no perturbation sets");
  std::vector<PerturbationSet> out;
  for (const auto& id : order) out.push_back(std::move(sets[id]));
  return out;
}

// two-sided Welch t-test via the regularized incomplete beta function
namespace {

double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 200;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                 b * std::log(1.0 - x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace

double welch_p_value(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw validation_error("welch_p_value needs at least 2 samples per group");
  auto mean_var = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::pair<double, double>(m, s / static_cast<double>(v.size() - 1));
  };
  auto [ma, va] = mean_var(a);
  auto [mb, vb] = mean_var(b);
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double se2 = va / na + vb / nb;
  if (se2 <= 0.0) return ma == mb ? 1.0 : 0.0;
  double t = (ma - mb) / std::sqrt(se2);
  double df = se2 * se2 /
              ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  double x = df / (df + t * t);
  return incomplete_beta(df / 2.0, 0.5, x);
}

}  // namespace sga
