#include "ltprune/distill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "ltprune/error.hpp"
#include "ltprune/parallel.hpp"
#include "ltprune/rng.hpp"

namespace ltprune {

LinearHead LinearHead::zeros(std::size_t num_classes, std::size_t dims) {
  return LinearHead{num_classes, dims, std::vector<double>(num_classes * dims, 0.0),
                    std::vector<double>(num_classes, 0.0)};
}

void LinearHead::logits(std::span<const float> embedding, std::span<double> out) const {
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double* w = weights.data() + c * dims;
    double z = bias[c];
    for (std::size_t k = 0; k < dims; ++k) z += w[k] * embedding[k];
    out[c] = z;
  }
}

std::vector<float> LinearHead::dataset_logits(const EmbeddingDataset& ds) const {
  require(ds.dims() == dims && ds.num_classes() == num_classes, "head shape does not match dataset");
  std::vector<float> out(ds.size() * num_classes);
  parallel_for(ds.size(), [&](std::size_t i) {
    std::vector<double> z(num_classes);
    logits(ds.embedding(i), z);
    for (std::size_t c = 0; c < num_classes; ++c) out[i * num_classes + c] = static_cast<float>(z[c]);
  });
  return out;
}

Label LinearHead::predict(std::span<const float> embedding) const {
  std::vector<double> z(num_classes);
  logits(embedding, z);
  return static_cast<Label>(std::max_element(z.begin(), z.end()) - z.begin());
}

nlohmann::json LinearHead::to_json() const {
  return nlohmann::json{{"C", num_classes}, {"d", dims}, {"W", weights}, {"b", bias}};
}

LinearHead LinearHead::from_json(const nlohmann::json& j) {
  try {
    LinearHead h;
    h.num_classes = j.at("C").get<std::size_t>();
    h.dims = j.at("d").get<std::size_t>();
    h.weights = j.at("W").get<std::vector<double>>();
    h.bias = j.at("b").get<std::vector<double>>();
    require(h.weights.size() == h.num_classes * h.dims && h.bias.size() == h.num_classes,
            "head JSON shape mismatch");
    for (double v : h.weights) require(std::isfinite(v), "head weights must be finite");
    for (double v : h.bias) require(std::isfinite(v), "head bias must be finite");
    return h;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("malformed head JSON: ") + e.what());
  }
}

namespace {

// log-softmax of z / tau for one row.
void log_softmax(std::span<const double> z, double tau, std::span<double> out) {
  double zmax = -std::numeric_limits<double>::infinity();
  for (double v : z) zmax = std::max(zmax, v / tau);
  double sum = 0.0;
  for (double v : z) sum += std::exp(v / tau - zmax);
  const double lse = zmax + std::log(sum);
  for (std::size_t c = 0; c < z.size(); ++c) out[c] = z[c] / tau - lse;
}

template <typename T>
SoftTargets soft_targets_impl(std::span<const T> teacher_logits, std::size_t num_classes,
                              double temperature) {
  require(temperature > 0.0, "temperature must be positive");
  require(num_classes >= 1 && teacher_logits.size() % num_classes == 0,
          "teacher logits must be n x C");
  SoftTargets t;
  t.num_classes = num_classes;
  t.temperature = temperature;
  t.probs.resize(teacher_logits.size());
  std::vector<double> z(num_classes);
  std::vector<double> lp(num_classes);
  for (std::size_t i = 0; i < teacher_logits.size() / num_classes; ++i) {
    for (std::size_t c = 0; c < num_classes; ++c) z[c] = teacher_logits[i * num_classes + c];
    log_softmax(z, temperature, lp);
    for (std::size_t c = 0; c < num_classes; ++c) t.probs[i * num_classes + c] = std::exp(lp[c]);
  }
  return t;
}

}  // namespace

SoftTargets make_soft_targets(std::span<const float> teacher_logits, std::size_t num_classes,
                              double temperature) {
  return soft_targets_impl(teacher_logits, num_classes, temperature);
}

SoftTargets make_soft_targets(std::span<const double> teacher_logits, std::size_t num_classes,
                              double temperature) {
  return soft_targets_impl(teacher_logits, num_classes, temperature);
}

RebalanceKind parse_rebalance_kind(std::string_view name) {
  if (name == "ib") return RebalanceKind::kInstanceBalanced;
  if (name == "cb") return RebalanceKind::kClassBalanced;
  if (name == "sqrt") return RebalanceKind::kSqrt;
  if (name == "cb-loss") return RebalanceKind::kCbLossEffectiveNumber;
  fail(ErrorCode::kInvalidArgument, "unknown rebalancing policy '" + std::string(name) + "'");
}

std::vector<double> rebalance_weights(std::span<const std::size_t> class_counts,
                                      const RebalancePolicy& policy) {
  require(!class_counts.empty(), "need at least one class");
  if (policy.kind == RebalanceKind::kCbLossEffectiveNumber) {
    require(policy.beta > 0.0 && policy.beta < 1.0, "beta must lie in (0, 1)");
  }
  std::vector<double> w(class_counts.size());
  for (std::size_t y = 0; y < w.size(); ++y) {
    require(class_counts[y] >= 1, "rebalancing needs every class count >= 1");
    const double n = static_cast<double>(class_counts[y]);
    switch (policy.kind) {
      case RebalanceKind::kInstanceBalanced: w[y] = 1.0; break;
      case RebalanceKind::kClassBalanced: w[y] = 1.0 / n; break;
      case RebalanceKind::kSqrt: w[y] = 1.0 / std::sqrt(n); break;
      case RebalanceKind::kCbLossEffectiveNumber:
        // (1 - beta) / (1 - beta^n), with 1 - beta^n = -expm1(n log beta).
        w[y] = (1.0 - policy.beta) / -std::expm1(n * std::log(policy.beta));
        break;
    }
  }
  if (std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); })) {
    return std::vector<double>(w.size(), 1.0);
  }
  double sum = 0.0;
  for (double v : w) sum += v;
  const double scale = static_cast<double>(w.size()) / sum;
  for (double& v : w) v *= scale;
  return w;
}

namespace {

struct HeadEval {
  double loss = 0.0;
  std::vector<double> grad;  // C*d weights then C bias
};

HeadEval evaluate_head_objective(const EmbeddingDataset& ds, std::span<const double> sample_weights,
                                 const LinearHead& head) {
  const std::size_t n = ds.size();
  const std::size_t c = head.num_classes;
  const std::size_t d = head.dims;
  std::vector<double> residual(n * c);
  std::vector<double> losses(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> z(c);
    std::vector<double> lp(c);
    head.logits(ds.embedding(i), z);
    log_softmax(z, 1.0, lp);
    const Label y = ds.label(i);
    losses[i] = -sample_weights[i] * lp[y];
    for (std::size_t k = 0; k < c; ++k) {
      residual[i * c + k] = sample_weights[i] * (std::exp(lp[k]) - (k == y ? 1.0 : 0.0));
    }
  });
  HeadEval out;
  for (double l : losses) out.loss += l;
  out.grad.assign(c * d + c, 0.0);
  // Each class row reduces over samples in index order.
  parallel_for(c, [&](std::size_t k) {
    double* gw = out.grad.data() + k * d;
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = residual[i * c + k];
      if (r == 0.0) continue;
      auto e = ds.embedding(i);
      for (std::size_t j = 0; j < d; ++j) gw[j] += r * e[j];
      gb += r;
    }
    out.grad[c * d + k] = gb;
  });
  return out;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

LinearHead stepped(const LinearHead& head, std::span<const double> grad, double step) {
  LinearHead next = head;
  const std::size_t wsize = head.weights.size();
  for (std::size_t k = 0; k < wsize; ++k) next.weights[k] -= step * grad[k];
  for (std::size_t k = 0; k < head.bias.size(); ++k) next.bias[k] -= step * grad[wsize + k];
  return next;
}

}  // namespace

CalibrationResult calibrate_head_weighted(const EmbeddingDataset& ds,
                                          std::span<const double> sample_weights,
                                          const TrainerParams& params) {
  require(sample_weights.size() == ds.size(), "need one weight per sample");
  for (double w : sample_weights) require(std::isfinite(w) && w >= 0.0, "sample weights must be >= 0");
  require(params.step > 0.0, "step must be positive");

  CalibrationResult result;
  result.head = LinearHead::zeros(ds.num_classes(), ds.dims());
  HeadEval current = evaluate_head_objective(ds, sample_weights, result.head);
  result.loss_trace.push_back(current.loss);
  double step = params.step;
  std::size_t rising = 0;

  for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
    result.grad_norm = norm2(current.grad);
    if (result.grad_norm <= params.grad_tolerance) {
      result.converged = true;
      break;
    }
    LinearHead candidate = stepped(result.head, current.grad, step);
    HeadEval next = evaluate_head_objective(ds, sample_weights, candidate);
    if (params.backtracking) {
      while (!(next.loss <= current.loss)) {
        step *= 0.5;
        if (step < params.min_step) {
          fail(ErrorCode::kDivergence,
               "head training cannot decrease the loss; use a smaller step");
        }
        candidate = stepped(result.head, current.grad, step);
        next = evaluate_head_objective(ds, sample_weights, candidate);
      }
    } else {
      if (!std::isfinite(next.loss) || next.loss > current.loss) {
        if (++rising >= params.patience || !std::isfinite(next.loss)) {
          fail(ErrorCode::kDivergence, "head training diverged after " + std::to_string(iter + 1) +
                                           " iterations; use a smaller step");
        }
      } else {
        rising = 0;
      }
    }
    result.head = std::move(candidate);
    current = std::move(next);
    result.loss_trace.push_back(current.loss);
    result.iterations = iter + 1;
  }
  if (!result.converged) {
    result.grad_norm = norm2(current.grad);
    result.converged = result.grad_norm <= params.grad_tolerance;
  }
  return result;
}

CalibrationResult calibrate_head(const EmbeddingDataset& ds,
                                 std::optional<std::span<const double>> class_weights,
                                 const TrainerParams& params) {
  if (class_weights) {
    require(class_weights->size() == ds.num_classes(), "need one class weight per class");
    for (double a : *class_weights) require(a > 0.0, "class weights must be positive");
  }
  const double inv_n = 1.0 / static_cast<double>(ds.size());
  std::vector<double> w(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    w[i] = (class_weights ? (*class_weights)[ds.label(i)] : 1.0) * inv_n;
  }
  return calibrate_head_weighted(ds, w, params);
}

namespace {

void check_kd_shapes(std::size_t values, const SoftTargets& targets,
                     std::span<const double> weights) {
  require(targets.num_classes >= 1, "soft targets are empty");
  require(values == targets.probs.size(), "student and teacher shapes differ");
  require(weights.size() == targets.size(), "need one weight per sample");
  for (double w : weights) require(std::isfinite(w) && w > 0.0, "KD weights must be positive");
}

// Accumulates H(T_i) and KL(T_i || f_i) given log f_i.
void accumulate_row(std::span<const double> t, std::span<const double> log_f, double w,
                    std::size_t row, KdLoss& acc) {
  double h = 0.0;
  double kl = 0.0;
  for (std::size_t c = 0; c < t.size(); ++c) {
    if (t[c] <= 0.0) continue;
    if (!std::isfinite(log_f[c])) {
      fail(ErrorCode::kSaturation, "student probability is 0 where the teacher has mass (row " +
                                       std::to_string(row) + ", class " + std::to_string(c) + ")");
    }
    const double log_t = std::log(t[c]);
    h -= t[c] * log_t;
    kl += t[c] * (log_t - log_f[c]);
  }
  acc.entropy_floor += w * h;
  acc.divergence += w * kl;
}

}  // namespace

KdLoss kd_loss(std::span<const double> student_logits, const SoftTargets& targets,
               std::span<const double> weights) {
  check_kd_shapes(student_logits.size(), targets, weights);
  const std::size_t c = targets.num_classes;
  KdLoss acc;
  std::vector<double> lf(c);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    log_softmax(student_logits.subspan(i * c, c), targets.temperature, lf);
    accumulate_row(targets.row(i), lf, weights[i], i, acc);
  }
  acc.loss = acc.entropy_floor + acc.divergence;
  return acc;
}

KdLoss kd_loss_from_probs(std::span<const double> student_probs, const SoftTargets& targets,
                          std::span<const double> weights) {
  check_kd_shapes(student_probs.size(), targets, weights);
  const std::size_t c = targets.num_classes;
  KdLoss acc;
  std::vector<double> lf(c);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      const double f = student_probs[i * c + k];
      require(f >= 0.0, "student probabilities must be >= 0");
      lf[k] = f > 0.0 ? std::log(f) : -std::numeric_limits<double>::infinity();
    }
    accumulate_row(targets.row(i), lf, weights[i], i, acc);
  }
  acc.loss = acc.entropy_floor + acc.divergence;
  return acc;
}

std::vector<double> kd_loss_gradient(std::span<const double> student_logits,
                                     const SoftTargets& targets, std::span<const double> weights) {
  check_kd_shapes(student_logits.size(), targets, weights);
  const std::size_t c = targets.num_classes;
  std::vector<double> grad(student_logits.size());
  std::vector<double> lf(c);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    log_softmax(student_logits.subspan(i * c, c), targets.temperature, lf);
    auto t = targets.row(i);
    for (std::size_t k = 0; k < c; ++k) {
      grad[i * c + k] = weights[i] * (std::exp(lf[k]) - t[k]) / targets.temperature;
    }
  }
  return grad;
}

double huber(double a, double b, double delta) {
  const double r = std::abs(a - b);
  return r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
}

namespace {

// d huber(t, s) / d s.
double huber_slope(double t, double s, double delta) {
  const double r = s - t;
  if (r > delta) return delta;
  if (r < -delta) return -delta;
  return r;
}

struct Batch {
  std::span<const double> values;
  std::size_t dims;

  std::span<const double> row(std::size_t i) const { return values.subspan(i * dims, dims); }
};

double distance(const Batch& b, std::size_t i, std::size_t j) {
  auto x = b.row(i);
  auto y = b.row(j);
  double s = 0.0;
  for (std::size_t k = 0; k < b.dims; ++k) {
    const double diff = x[k] - y[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

}  // namespace

RkdLoss rkd_loss(std::span<const double> student, std::size_t student_dims,
                 std::span<const double> teacher, std::size_t teacher_dims,
                 const RkdParams& params, bool with_gradient) {
  require(student_dims >= 1 && teacher_dims >= 1, "embedding dims must be >= 1");
  require(student.size() % student_dims == 0 && teacher.size() % teacher_dims == 0,
          "embedding blocks must be n x d");
  const std::size_t n = student.size() / student_dims;
  require(teacher.size() / teacher_dims == n, "student and teacher batches differ in size");
  require(n >= 2, "relational distillation needs a batch of at least 2");
  const Batch s{student, student_dims};
  const Batch t{teacher, teacher_dims};
  const double delta = params.huber_delta;

  RkdLoss out;
  if (with_gradient) {
    out.distance_grad.assign(student.size(), 0.0);
    out.angle_grad.assign(student.size(), 0.0);
  }

  // Distance potential.
  const std::size_t pairs = n * (n - 1) / 2;
  std::vector<double> ds(pairs);
  std::vector<double> dt(pairs);
  double mean_s = 0.0;
  double mean_t = 0.0;
  for (std::size_t i = 0, p = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      ds[p] = distance(s, i, j);
      dt[p] = distance(t, i, j);
      mean_s += ds[p];
      mean_t += dt[p];
    }
  }
  mean_s /= static_cast<double>(pairs);
  mean_t /= static_cast<double>(pairs);
  std::vector<double> slope(pairs, 0.0);
  double weighted = 0.0;  // sum_p slope_p * d_p
  for (std::size_t p = 0; p < pairs; ++p) {
    const double psi_s = mean_s > 0.0 ? ds[p] / mean_s : 0.0;
    const double psi_t = mean_t > 0.0 ? dt[p] / mean_t : 0.0;
    out.distance += huber(psi_t, psi_s, delta);
    slope[p] = huber_slope(psi_t, psi_s, delta);
    weighted += slope[p] * ds[p];
  }
  if (with_gradient && mean_s > 0.0) {
    const double shared = weighted / (mean_s * mean_s * static_cast<double>(pairs));
    for (std::size_t i = 0, p = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j, ++p) {
        if (ds[p] == 0.0) continue;
        const double coeff = (slope[p] / mean_s - shared) / ds[p];
        auto xi = s.row(i);
        auto xj = s.row(j);
        for (std::size_t k = 0; k < student_dims; ++k) {
          const double g = coeff * (xi[k] - xj[k]);
          out.distance_grad[i * student_dims + k] += g;
          out.distance_grad[j * student_dims + k] -= g;
        }
      }
    }
  }

  // Angle potential: vertex j, endpoints i < k.
  if (n >= 3) {
    std::vector<double> us(student_dims), vs(student_dims);
    std::vector<double> ut(teacher_dims), vt(teacher_dims);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        if (i == j) continue;
        for (std::size_t k = i + 1; k < n; ++k) {
          if (k == j) continue;
          double uu_s = 0, vv_s = 0, uv_s = 0, uu_t = 0, vv_t = 0, uv_t = 0;
          for (std::size_t q = 0; q < student_dims; ++q) {
            us[q] = s.row(i)[q] - s.row(j)[q];
            vs[q] = s.row(k)[q] - s.row(j)[q];
            uu_s += us[q] * us[q];
            vv_s += vs[q] * vs[q];
            uv_s += us[q] * vs[q];
          }
          for (std::size_t q = 0; q < teacher_dims; ++q) {
            ut[q] = t.row(i)[q] - t.row(j)[q];
            vt[q] = t.row(k)[q] - t.row(j)[q];
            uu_t += ut[q] * ut[q];
            vv_t += vt[q] * vt[q];
            uv_t += ut[q] * vt[q];
          }
          if (uu_s == 0.0 || vv_s == 0.0 || uu_t == 0.0 || vv_t == 0.0) {
            ++out.skipped_triplets;
            continue;
          }
          const double nu = std::sqrt(uu_s);
          const double nv = std::sqrt(vv_s);
          const double cos_s = uv_s / (nu * nv);
          const double cos_t = uv_t / (std::sqrt(uu_t) * std::sqrt(vv_t));
          out.angle += huber(cos_t, cos_s, delta);
          if (!with_gradient) continue;
          const double h = huber_slope(cos_t, cos_s, delta);
          for (std::size_t q = 0; q < student_dims; ++q) {
            const double gu = h * (vs[q] / (nu * nv) - cos_s * us[q] / uu_s);
            const double gv = h * (us[q] / (nu * nv) - cos_s * vs[q] / vv_s);
            out.angle_grad[i * student_dims + q] += gu;
            out.angle_grad[k * student_dims + q] += gv;
            out.angle_grad[j * student_dims + q] -= gu + gv;
          }
        }
      }
    }
  }

  out.combined = params.scale * (params.distance_weight * out.distance +
                                 params.angle_weight * out.angle);
  return out;
}

double combined_distill_objective(double hard_ce, double kd, double rkd_combined, double alpha,
                                  double temperature) {
  return (1.0 - alpha) * hard_ce + alpha * temperature * temperature * kd + rkd_combined;
}

nlohmann::json KdRobustnessReport::to_json() const {
  return nlohmann::json{
      {"max_l1_gap_uniform", max_l1_gap_uniform},
      {"max_l1_gap_class_balanced", max_l1_gap_class_balanced},
      {"iterations_uniform", iterations_uniform},
      {"iterations_class_balanced", iterations_class_balanced},
      {"hard_posterior_uniform", hard_posterior_uniform},
      {"hard_posterior_class_balanced", hard_posterior_class_balanced},
      {"hard_l1_shift", hard_l1_shift},
      {"kd_weight_robust", kd_weight_robust},
      {"hard_label_shifts", hard_label_shifts},
  };
}

namespace {

double max_l1_gap(std::span<const double> student_logits, const SoftTargets& targets) {
  const std::size_t c = targets.num_classes;
  std::vector<double> lf(c);
  double worst = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    log_softmax(student_logits.subspan(i * c, c), targets.temperature, lf);
    auto t = targets.row(i);
    double gap = 0.0;
    for (std::size_t k = 0; k < c; ++k) gap += std::abs(std::exp(lf[k]) - t[k]);
    worst = std::max(worst, gap);
  }
  return worst;
}

// Gradient descent on a free logit table; returns iterations used.
std::size_t fit_free_student(const SoftTargets& targets, std::span<const double> weights,
                             double tolerance, std::size_t max_iterations,
                             std::vector<double>& logits) {
  const double w_max = *std::max_element(weights.begin(), weights.end());
  // Per-row Hessian is w_i / tau^2 (diag f - f f^T), whose spectrum is <= w_i / (2 tau^2).
  const double step = targets.temperature * targets.temperature / w_max;
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    if (iter % 64 == 0 && max_l1_gap(logits, targets) <= tolerance) return iter;
    const auto grad = kd_loss_gradient(logits, targets, weights);
    for (std::size_t k = 0; k < logits.size(); ++k) logits[k] -= step * grad[k];
  }
  if (max_l1_gap(logits, targets) <= tolerance) return max_iterations;
  fail(ErrorCode::kNonConvergence, "KD toy optimization budget exhausted");
}

// Two identical inputs labelled 0 and 1 share one binary posterior; minimize
// w_a * CE(e_0, f) + w_b * CE(e_1, f) over the shared logits.
std::vector<double> fit_shared_hard_posterior(double w_a, double w_b) {
  std::vector<double> z{0.0, 0.0};
  const double total = w_a + w_b;
  const double step = 2.0 / total;
  std::vector<double> f(2);
  for (int iter = 0; iter < 100000; ++iter) {
    const double m = std::max(z[0], z[1]);
    const double e0 = std::exp(z[0] - m);
    const double e1 = std::exp(z[1] - m);
    f[0] = e0 / (e0 + e1);
    f[1] = e1 / (e0 + e1);
    const double g0 = total * f[0] - w_a;
    const double g1 = total * f[1] - w_b;
    if (std::abs(g0) + std::abs(g1) <= 1e-14 * total) break;
    z[0] -= step * g0;
    z[1] -= step * g1;
  }
  return f;
}

}  // namespace

KdRobustnessReport kd_robustness_check(const KdToySpec& spec) {
  require(spec.num_classes >= 2, "KD toy needs at least two classes");
  require(spec.num_samples >= spec.num_classes, "KD toy needs at least one sample per class");
  require(spec.temperature > 0.0 && spec.tolerance > 0.0, "temperature and tolerance must be > 0");
  const std::size_t n = spec.num_samples;
  const std::size_t c = spec.num_classes;

  // Long-tailed toy labels: one sample in each class, the rest in class 0.
  std::vector<std::size_t> labels(n, 0);
  for (std::size_t i = 0; i < c; ++i) labels[i] = i;
  std::vector<std::size_t> counts(c, 0);
  for (std::size_t y : labels) ++counts[y];

  std::mt19937_64 rng(derive_seed(spec.seed, "kd_toy.teacher"));
  std::normal_distribution<double> normal(0.0, 3.0);
  std::vector<double> teacher(n * c);
  for (double& v : teacher) v = normal(rng);
  const SoftTargets targets = make_soft_targets(std::span<const double>(teacher), c, spec.temperature);

  const auto cb = rebalance_weights(counts, {RebalanceKind::kClassBalanced});
  std::vector<double> w_uniform(n, 1.0 / static_cast<double>(n));
  std::vector<double> w_cb(n);
  double cb_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) cb_sum += cb[labels[i]];
  for (std::size_t i = 0; i < n; ++i) w_cb[i] = cb[labels[i]] / cb_sum;

  KdRobustnessReport report;
  std::vector<double> student_u(n * c, 0.0);
  std::vector<double> student_cb(n * c, 0.0);
  report.iterations_uniform =
      fit_free_student(targets, w_uniform, spec.tolerance, spec.max_iterations, student_u);
  report.iterations_class_balanced =
      fit_free_student(targets, w_cb, spec.tolerance, spec.max_iterations, student_cb);
  report.max_l1_gap_uniform = max_l1_gap(student_u, targets);
  report.max_l1_gap_class_balanced = max_l1_gap(student_cb, targets);

  // Hard-label control: the ambiguous pair is samples 0 (class 0) and 1 (class 1).
  report.hard_posterior_uniform = fit_shared_hard_posterior(w_uniform[0], w_uniform[1]);
  report.hard_posterior_class_balanced = fit_shared_hard_posterior(w_cb[0], w_cb[1]);
  report.hard_l1_shift =
      std::abs(report.hard_posterior_uniform[0] - report.hard_posterior_class_balanced[0]) +
      std::abs(report.hard_posterior_uniform[1] - report.hard_posterior_class_balanced[1]);

  report.kd_weight_robust = report.max_l1_gap_uniform <= spec.tolerance &&
                            report.max_l1_gap_class_balanced <= spec.tolerance;
  report.hard_label_shifts = report.hard_l1_shift >= 0.1;
  return report;
}

}  // namespace ltprune
