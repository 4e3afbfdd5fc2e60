#include "ltprune/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "ltprune/error.hpp"
#include "ltprune/parallel.hpp"
#include "ltprune/rng.hpp"

namespace ltprune {

EvalResult eval_oa_macc(std::span<const std::size_t> per_class_correct,
                        std::span<const std::size_t> per_class_total) {
  require(per_class_correct.size() == per_class_total.size(), "correct and total differ in length");
  require(!per_class_total.empty(), "need at least one class");
  EvalResult r;
  r.per_class_accuracy.assign(per_class_total.size(), 0.0);
  std::size_t correct = 0;
  std::size_t total = 0;
  double acc_sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t y = 0; y < per_class_total.size(); ++y) {
    require(per_class_correct[y] <= per_class_total[y], "class " + std::to_string(y) +
                                                            " has more correct than total");
    correct += per_class_correct[y];
    total += per_class_total[y];
    if (per_class_total[y] == 0) {
      r.excluded_classes.push_back(y);
      continue;
    }
    r.per_class_accuracy[y] =
        static_cast<double>(per_class_correct[y]) / static_cast<double>(per_class_total[y]);
    acc_sum += r.per_class_accuracy[y];
    ++counted;
  }
  require(total >= 1, "evaluation needs at least one test sample");
  r.oa = static_cast<double>(correct) / static_cast<double>(total);
  r.macc = acc_sum / static_cast<double>(counted);
  return r;
}

EvalResult evaluate_head(const LinearHead& head, const EmbeddingDataset& test) {
  require(head.dims == test.dims() && head.num_classes == test.num_classes(),
          "head shape does not match test set");
  std::vector<Label> pred(test.size());
  parallel_for(test.size(), [&](std::size_t i) { pred[i] = head.predict(test.embedding(i)); });
  std::vector<std::size_t> correct(test.num_classes(), 0);
  std::vector<std::size_t> total(test.num_classes(), 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    ++total[test.label(i)];
    if (pred[i] == test.label(i)) ++correct[test.label(i)];
  }
  return eval_oa_macc(correct, total);
}

EvalResult probe_selection(const EmbeddingDataset& train, const Selection& sel,
                           const EmbeddingDataset& test, const TrainerParams& params) {
  require(!sel.indices.empty(), "probe needs a non-empty selection");
  const EmbeddingDataset subset = train.subset(sel.indices);
  const auto fit = calibrate_head(subset, std::nullopt, params);
  return evaluate_head(fit.head, test);
}

PriorVector induced_prior(const Selection& sel, std::span<const Label> labels,
                          std::size_t num_classes) {
  require(sel.weights.size() == sel.indices.size(), "selection needs one weight per index");
  require(!sel.indices.empty(), "induced prior of an empty selection is undefined");
  std::vector<double> rho(num_classes, 0.0);
  for (std::size_t k = 0; k < sel.indices.size(); ++k) {
    require(sel.indices[k] < labels.size(), "selection index out of range");
    const Label y = labels[sel.indices[k]];
    require(y < num_classes, "label out of range");
    rho[y] += sel.weights[k];
  }
  return PriorVector(std::move(rho));
}

double tv_distance(const PriorVector& p, const PriorVector& q) {
  require(p.size() == q.size(), "priors differ in class count");
  double s = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) s += std::abs(p[y] - q[y]);
  return 0.5 * s;
}

double term_b_bound(const PriorVector& p, const PriorVector& q, double loss_bound) {
  require(std::isfinite(loss_bound) && loss_bound >= 0.0, "loss bound must be >= 0");
  return 2.0 * loss_bound * tv_distance(p, q);
}

Selection reweigh_to_prior(const Selection& sel, std::span<const Label> labels,
                           const PriorVector& target) {
  const std::size_t c = target.size();
  const auto counts = count_per_class(sel.indices, labels, c);
  for (std::size_t y = 0; y < c; ++y) {
    if (target[y] > 0.0 && counts[y] == 0) {
      fail(ErrorCode::kInfeasible, "class " + std::to_string(y) + " has target prior " +
                                       std::to_string(target[y]) +
                                       " but no selected samples; raise the floor");
    }
  }
  Selection out = sel;
  out.per_class_counts = counts;
  out.weights.resize(sel.indices.size());
  for (std::size_t k = 0; k < sel.indices.size(); ++k) {
    const Label y = labels[sel.indices[k]];
    out.weights[k] = target[y] / static_cast<double>(counts[y]);
  }
  return out;
}

namespace {

struct Moments {
  double mx = 0.0, my = 0.0, sxy = 0.0, sxx = 0.0, syy = 0.0;
  bool degenerate = true;
};

// A side whose spread is below 1e-12 of its magnitude is treated as constant:
// class means of a constant score differ only by summation rounding.
bool flat(std::span<const double> v, double mean, double ss) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  const double tol = 1e-12 * std::max(scale, std::abs(mean));
  return !(ss > static_cast<double>(v.size()) * tol * tol);
}

Moments centered_moments(std::span<const double> x, std::span<const double> y) {
  Moments m;
  const std::size_t n = x.size();
  if (n < 2) return m;
  m.mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  m.my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.sxy += (x[i] - m.mx) * (y[i] - m.my);
    m.sxx += (x[i] - m.mx) * (x[i] - m.mx);
    m.syy += (y[i] - m.my) * (y[i] - m.my);
  }
  m.degenerate = flat(x, m.mx, m.sxx) || flat(y, m.my, m.syy);
  return m;
}

}  // namespace

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "pearson inputs differ in length");
  const Moments m = centered_moments(x, y);
  if (m.degenerate) return 0.0;
  return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

double percentile(std::vector<double> values, double q) {
  require(!values.empty(), "percentile of an empty set");
  require(q >= 0.0 && q <= 100.0, "percentile q must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

// R^2 of the least-squares line y ~ a + b x; 0 when either side is constant.
double r_squared_of_fit(std::span<const double> x, std::span<const double> y) {
  const Moments m = centered_moments(x, y);
  if (m.degenerate) return 0.0;
  const double slope = m.sxy / m.sxx;
  const double intercept = m.my - slope * m.mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    ss_res += r * r;
  }
  return std::clamp(1.0 - ss_res / m.syy, 0.0, 1.0);
}

}  // namespace

nlohmann::json AuditReport::to_json() const {
  nlohmann::json j{
      {"pearson_rho", pearson_rho},
      {"r_squared", r_squared},
      {"overlap", overlap},
      {"per_class_mean_magnitude", per_class_mean_magnitude},
  };
  if (selection_imbalance_ratio) {
    j["selection_imbalance_ratio"] = *selection_imbalance_ratio;
    j["per_class_selection_rate"] = per_class_selection_rate;
    j["zero_selection_classes"] = zero_selection_classes;
  } else {
    j["selection_imbalance_ratio"] = nullptr;
  }
  return j;
}

AuditReport signal_audit(const EmbeddingDataset& ds, const ScoreVector& scores,
                         const Selection* selection) {
  const std::size_t c = ds.num_classes();
  require(c >= 2, "signal audit needs C >= 2");
  require(scores.values.size() == ds.size(), "need one score per sample");
  for (double v : scores.values) require(std::isfinite(v), "scores must be finite");
  const auto counts = ds.class_counts();

  AuditReport report;
  report.per_class_mean_magnitude.assign(c, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    report.per_class_mean_magnitude[ds.label(i)] += scores.values[i];
  }
  std::vector<double> sizes;
  std::vector<double> means;
  for (std::size_t y = 0; y < c; ++y) {
    if (counts[y] == 0) continue;
    report.per_class_mean_magnitude[y] /= static_cast<double>(counts[y]);
    sizes.push_back(static_cast<double>(counts[y]));
    means.push_back(report.per_class_mean_magnitude[y]);
  }
  report.pearson_rho = pearson_correlation(sizes, means);
  report.r_squared = r_squared_of_fit(sizes, means);

  // Head and tail quartiles of classes by size; ties broken by class id.
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  const std::size_t quarter = std::max<std::size_t>(1, c / 4);
  std::vector<char> is_head(c, 0), is_tail(c, 0);
  for (std::size_t k = 0; k < quarter; ++k) {
    is_head[order[k]] = 1;
    is_tail[order[c - 1 - k]] = 1;
  }
  std::vector<double> head_scores, tail_scores;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (is_head[ds.label(i)]) head_scores.push_back(scores.values[i]);
    if (is_tail[ds.label(i)]) tail_scores.push_back(scores.values[i]);
  }
  if (head_scores.empty() || tail_scores.empty()) {
    report.overlap = 0.0;
  } else {
    const double h_lo = percentile(head_scores, 5.0);
    const double h_hi = percentile(head_scores, 95.0);
    const double t_lo = percentile(tail_scores, 5.0);
    const double t_hi = percentile(tail_scores, 95.0);
    const double width = h_hi - h_lo;
    if (width <= 0.0) {
      report.overlap = (h_lo >= t_lo && h_lo <= t_hi) ? 1.0 : 0.0;
    } else {
      const double inter = std::max(0.0, std::min(h_hi, t_hi) - std::max(h_lo, t_lo));
      report.overlap = std::clamp(inter / width, 0.0, 1.0);
    }
  }

  if (selection != nullptr) {
    const auto picked = count_per_class(selection->indices, ds.labels(), c);
    report.per_class_selection_rate.assign(c, 0.0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t y = 0; y < c; ++y) {
      if (counts[y] == 0) continue;
      const double r = static_cast<double>(picked[y]) / static_cast<double>(counts[y]);
      report.per_class_selection_rate[y] = r;
      if (r > 0.0) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      } else {
        report.zero_selection_classes.push_back(y);
      }
    }
    if (hi > 0.0) report.selection_imbalance_ratio = hi / lo;
  }
  return report;
}

void QuadLabSpec::validate() const {
  require(num_classes >= 1, "quad lab needs at least one class");
  const std::size_t n = num_points();
  require(n >= 1 && n <= 10000, "quad lab needs 1..10000 points");
  require(point_mass.size() == n, "need one mass per point");
  require(target_prior.size() == num_classes, "target prior has the wrong class count");
  require(losses.size() % n == 0 && !losses.empty(), "loss table must be |Theta| x points");
  require(num_hypotheses() <= 10000, "quad lab supports |Theta| <= 10000");
  require(std::isfinite(loss_bound) && loss_bound >= 0.0, "loss bound must be >= 0");
  std::vector<double> class_mass(num_classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    require(point_labels[i] < num_classes, "point label out of range");
    require(std::isfinite(point_mass[i]) && point_mass[i] >= 0.0, "point masses must be >= 0");
    class_mass[point_labels[i]] += point_mass[i];
  }
  for (std::size_t y = 0; y < num_classes; ++y) {
    if (target_prior[y] > 0.0) {
      require(std::abs(class_mass[y] - 1.0) <= 1e-9,
              "class " + std::to_string(y) + " conditional mass must sum to 1");
    }
  }
  for (double l : losses) {
    require(std::isfinite(l) && l >= 0.0 && l <= loss_bound, "losses must lie in [0, B]");
  }
}

std::vector<double> quad_lab_population(const QuadLabSpec& spec) {
  spec.validate();
  std::vector<double> p(spec.num_points());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = spec.target_prior[spec.point_labels[i]] * spec.point_mass[i];
  }
  return p;
}

nlohmann::json QuadLabReport::to_json() const {
  return nlohmann::json{
      {"theta_star", theta_star},
      {"theta_hat", theta_hat},
      {"excess_risk", excess_risk},
      {"discrepancy", discrepancy},
      {"term_a_max", term_a_max},
      {"term_b", term_b},
      {"tv", tv},
      {"min_decomposition_slack", min_decomposition_slack},
      {"bound_violations", bound_violations},
      {"decomposition_violations", decomposition_violations},
  };
}

QuadLabReport quad_lab(const QuadLabSpec& spec, const Selection& sel) {
  constexpr double kSlack = 1e-12;
  const auto p = quad_lab_population(spec);
  const std::size_t n = spec.num_points();
  const std::size_t c = spec.num_classes;
  require(!sel.indices.empty(), "quad lab needs a non-empty subset");
  require(sel.weights.size() == sel.indices.size(), "subset needs one weight per point");

  std::vector<double> q(n, 0.0);
  for (std::size_t k = 0; k < sel.indices.size(); ++k) {
    require(sel.indices[k] < n, "subset index out of range");
    require(sel.weights[k] >= 0.0, "subset weights must be >= 0");
    q[sel.indices[k]] += sel.weights[k];
  }
  const PriorVector rho = induced_prior(sel, spec.point_labels, c);

  struct PerTheta {
    double risk_p = 0.0;
    double risk_q = 0.0;
    double term_a = 0.0;
  };
  const std::size_t h = spec.num_hypotheses();
  std::vector<PerTheta> stats(h);
  parallel_for(h, [&](std::size_t t) {
    const double* loss = spec.losses.data() + t * n;
    std::vector<double> ep(c, 0.0), eq(c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const Label y = spec.point_labels[i];
      stats[t].risk_p += p[i] * loss[i];
      stats[t].risk_q += q[i] * loss[i];
      ep[y] += spec.point_mass[i] * loss[i];
      eq[y] += q[i] * loss[i];
    }
    for (std::size_t y = 0; y < c; ++y) {
      // Uncovered classes take E_{q_y} = 0.
      const double eqy = rho[y] > 0.0 ? eq[y] / rho[y] : 0.0;
      stats[t].term_a += spec.target_prior[y] * std::abs(ep[y] - eqy);
    }
  });

  QuadLabReport r;
  r.tv = tv_distance(spec.target_prior, rho);
  r.term_b = 2.0 * spec.loss_bound * r.tv;
  r.min_decomposition_slack = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < h; ++t) {
    if (stats[t].risk_p < stats[r.theta_star].risk_p) r.theta_star = t;
    if (stats[t].risk_q < stats[r.theta_hat].risk_q) r.theta_hat = t;
    const double gap = std::abs(stats[t].risk_p - stats[t].risk_q);
    r.discrepancy = std::max(r.discrepancy, gap);
    r.term_a_max = std::max(r.term_a_max, stats[t].term_a);
    const double slack = stats[t].term_a + r.term_b - gap;
    r.min_decomposition_slack = std::min(r.min_decomposition_slack, slack);
    if (slack < -kSlack) ++r.decomposition_violations;
  }
  r.excess_risk = stats[r.theta_hat].risk_p - stats[r.theta_star].risk_p;
  if (r.excess_risk > 2.0 * r.discrepancy + kSlack) ++r.bound_violations;
  return r;
}

QuadLabSpec random_threshold_lab(std::uint64_t seed, std::size_t num_points,
                                 std::size_t num_thresholds) {
  require(num_points >= 2, "threshold lab needs at least two points");
  require(num_thresholds >= 2, "threshold lab needs at least two thresholds");
  std::mt19937_64 rng(derive_seed(seed, "quad_lab.world"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> x(num_points);
  for (double& v : x) v = unit(rng);
  QuadLabSpec spec;
  spec.num_classes = 2;
  spec.point_labels.resize(num_points);
  // Noisy threshold rule at 0.5 with 20% flips.
  for (std::size_t i = 0; i < num_points; ++i) {
    Label y = x[i] >= 0.5 ? 1 : 0;
    if (unit(rng) < 0.2) y = 1 - y;
    spec.point_labels[i] = y;
  }
  // Both classes must own at least one point.
  spec.point_labels[0] = 0;
  spec.point_labels[1] = 1;

  std::vector<std::size_t> counts(2, 0);
  for (Label y : spec.point_labels) ++counts[y];
  spec.point_mass.resize(num_points);
  for (std::size_t i = 0; i < num_points; ++i) {
    spec.point_mass[i] = 1.0 / static_cast<double>(counts[spec.point_labels[i]]);
  }
  const double pi0 = 0.2 + 0.6 * unit(rng);
  spec.target_prior = PriorVector(std::vector<double>{pi0, 1.0 - pi0});

  // Thresholds t_k on [0, 1], predicting class 1 above (orientation +) or below (orientation -).
  spec.loss_bound = 1.0;
  spec.losses.resize(2 * num_thresholds * num_points);
  for (std::size_t k = 0; k < num_thresholds; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(num_thresholds - 1);
    for (std::size_t orient = 0; orient < 2; ++orient) {
      double* row = spec.losses.data() + (2 * k + orient) * num_points;
      for (std::size_t i = 0; i < num_points; ++i) {
        Label pred = x[i] >= t ? 1 : 0;
        if (orient == 1) pred = 1 - pred;
        row[i] = pred == spec.point_labels[i] ? 0.0 : 1.0;
      }
    }
  }
  return spec;
}

Selection random_lab_subset(const QuadLabSpec& spec, std::size_t size, std::uint64_t seed) {
  const std::size_t n = spec.num_points();
  require(size >= 1 && size <= n, "subset size must lie in [1, points]");
  std::mt19937_64 rng(derive_seed(seed, "quad_lab.subset"));
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t k = 0; k < size; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(ids[k], ids[pick(rng)]);
  }
  ids.resize(size);
  return make_uniform_selection(std::move(ids), spec.point_labels, spec.num_classes,
                                SelectionMethod::kStratified, seed);
}

}  // namespace ltprune
