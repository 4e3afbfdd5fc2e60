#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ltprune/dataset.hpp"

namespace ltprune {

// Defaults used by the post-pruning trainer.
struct DistillDefaults {
  static constexpr double kTemperature = 5.0;
  static constexpr double kKdWeight = 0.8;  // alpha
  static constexpr double kRkdDistanceWeight = 50.0;
  static constexpr double kRkdAngleWeight = 100.0;
  static constexpr double kRkdScale = 0.1;
  static constexpr double kHuberDelta = 1.0;
};

struct LinearHead {
  std::size_t num_classes = 0;
  std::size_t dims = 0;
  std::vector<double> weights;  // C x d, row-major
  std::vector<double> bias;     // C

  static LinearHead zeros(std::size_t num_classes, std::size_t dims);

  void logits(std::span<const float> embedding, std::span<double> out) const;
  std::vector<float> dataset_logits(const EmbeddingDataset& ds) const;
  Label predict(std::span<const float> embedding) const;

  nlohmann::json to_json() const;
  static LinearHead from_json(const nlohmann::json& j);
};

// Teacher posteriors softened at temperature tau, n x C row-major.
struct SoftTargets {
  std::vector<double> probs;
  std::size_t num_classes = 0;
  double temperature = 1.0;

  std::size_t size() const { return num_classes == 0 ? 0 : probs.size() / num_classes; }
  std::span<const double> row(std::size_t i) const {
    return {probs.data() + i * num_classes, num_classes};
  }
};

SoftTargets make_soft_targets(std::span<const float> teacher_logits, std::size_t num_classes,
                              double temperature);
SoftTargets make_soft_targets(std::span<const double> teacher_logits, std::size_t num_classes,
                              double temperature);

enum class RebalanceKind { kInstanceBalanced, kClassBalanced, kSqrt, kCbLossEffectiveNumber };

struct RebalancePolicy {
  RebalanceKind kind = RebalanceKind::kClassBalanced;
  double beta = 0.9999;
};

RebalanceKind parse_rebalance_kind(std::string_view name);

// Per-class weights normalized to mean 1.
//   IB: 1   CB: 1/n_y   Sqrt: 1/sqrt(n_y)   CB-Loss: (1-beta)/(1-beta^n_y)
std::vector<double> rebalance_weights(std::span<const std::size_t> class_counts,
                                      const RebalancePolicy& policy);

struct TrainerParams {
  double step = 1.0;
  std::size_t max_iterations = 2000;
  double grad_tolerance = 1e-6;
  // Halve the step whenever an update would raise the loss. Without it, a
  // loss that keeps rising for `patience` iterations is reported as
  // divergence.
  bool backtracking = true;
  std::size_t patience = 10;
  double min_step = 1e-12;
};

struct CalibrationResult {
  LinearHead head;
  std::vector<double> loss_trace;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Frozen-embedding head retraining:
//   min_{W,b} (1/n) sum_i alpha_{y_i} CE(onehot(y_i), softmax(W e_i + b))
// by full-batch gradient descent. No alpha means alpha_y = 1.
CalibrationResult calibrate_head(const EmbeddingDataset& ds,
                                 std::optional<std::span<const double>> class_weights,
                                 const TrainerParams& params = {});

// Same trainer with an explicit per-sample weight (objective sum_i w_i CE_i).
CalibrationResult calibrate_head_weighted(const EmbeddingDataset& ds,
                                          std::span<const double> sample_weights,
                                          const TrainerParams& params = {});

struct KdLoss {
  double loss = 0.0;           // sum_i w_i CE(T_i, f_i)
  double entropy_floor = 0.0;  // sum_i w_i H(T_i)
  double divergence = 0.0;     // sum_i w_i KL(T_i || f_i)
};

// Student logits are softened at targets.temperature. Throws kSaturation if
// a student probability underflows to 0 where the teacher has mass.
KdLoss kd_loss(std::span<const double> student_logits, const SoftTargets& targets,
               std::span<const double> weights);
KdLoss kd_loss_from_probs(std::span<const double> student_probs, const SoftTargets& targets,
                          std::span<const double> weights);
// d loss / d student_logits = w_i (f_i - T_i) / tau.
std::vector<double> kd_loss_gradient(std::span<const double> student_logits,
                                     const SoftTargets& targets, std::span<const double> weights);

struct RkdParams {
  double distance_weight = DistillDefaults::kRkdDistanceWeight;
  double angle_weight = DistillDefaults::kRkdAngleWeight;
  double scale = DistillDefaults::kRkdScale;
  double huber_delta = DistillDefaults::kHuberDelta;
};

struct RkdLoss {
  double distance = 0.0;  // sum over pairs i<j of huber(psi_D^T, psi_D^S)
  double angle = 0.0;     // sum over triplets (vertex j, i<k) of huber(psi_A^T, psi_A^S)
  double combined = 0.0;  // scale * (distance_weight * distance + angle_weight * angle)
  std::size_t skipped_triplets = 0;
  // d/d student embeddings (n x student_dims) of each term, when requested.
  std::vector<double> distance_grad;
  std::vector<double> angle_grad;
};

// Relational distillation on one batch. psi_D is the pairwise distance over
// the batch's mean pairwise distance, psi_A the cosine of the angle at the
// middle vertex. Triplets with a zero-length edge on either side are skipped
// and counted.
RkdLoss rkd_loss(std::span<const double> student, std::size_t student_dims,
                 std::span<const double> teacher, std::size_t teacher_dims,
                 const RkdParams& params = {}, bool with_gradient = false);

double huber(double a, double b, double delta = 1.0);

// (1 - alpha) * hard CE + alpha * tau^2 * KD + RKD.
double combined_distill_objective(double hard_ce, double kd, double rkd_combined,
                                  double alpha = DistillDefaults::kKdWeight,
                                  double temperature = DistillDefaults::kTemperature);

struct KdToySpec {
  std::size_t num_samples = 10;
  std::size_t num_classes = 3;
  double temperature = DistillDefaults::kTemperature;
  double tolerance = 1e-4;
  std::size_t max_iterations = 200000;
  std::uint64_t seed = 0;
};

struct KdRobustnessReport {
  // Soft-target runs: free per-sample logits trained under two weightings.
  double max_l1_gap_uniform = 0.0;
  double max_l1_gap_class_balanced = 0.0;
  std::size_t iterations_uniform = 0;
  std::size_t iterations_class_balanced = 0;
  // Hard-label control: two identical inputs with labels 0 and 1 share one
  // posterior; its optimum is the weighted label mix.
  std::vector<double> hard_posterior_uniform;
  std::vector<double> hard_posterior_class_balanced;
  double hard_l1_shift = 0.0;
  bool kd_weight_robust = false;
  bool hard_label_shifts = false;

  nlohmann::json to_json() const;
};

KdRobustnessReport kd_robustness_check(const KdToySpec& spec);

}  // namespace ltprune
