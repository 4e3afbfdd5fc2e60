#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ltprune/dataset.hpp"
#include "ltprune/distill.hpp"
#include "ltprune/selection.hpp"
#include "ltprune/signals.hpp"

namespace ltprune {

struct EvalResult {
  double oa = 0.0;
  double macc = 0.0;
  // Classes with no test samples; they do not enter mAcc.
  std::vector<std::size_t> excluded_classes;
  std::vector<double> per_class_accuracy;
};

// OA = sum correct / sum total; mAcc = mean of per-class accuracies.
EvalResult eval_oa_macc(std::span<const std::size_t> per_class_correct,
                        std::span<const std::size_t> per_class_total);

EvalResult evaluate_head(const LinearHead& head, const EmbeddingDataset& test);

// Linear probe: trains an unweighted head on the selected samples of `train`
// and scores it on `test`.
EvalResult probe_selection(const EmbeddingDataset& train, const Selection& sel,
                           const EmbeddingDataset& test, const TrainerParams& params = {});

// rho_y = sum of selection weights over class y.
PriorVector induced_prior(const Selection& sel, std::span<const Label> labels,
                          std::size_t num_classes);

double tv_distance(const PriorVector& p, const PriorVector& q);
double term_b_bound(const PriorVector& p, const PriorVector& q, double loss_bound);

// w_i = pi_y / m_y, so the induced prior equals the target exactly. Throws
// kInfeasible naming the first class with pi_y > 0 and nothing selected.
// Selected samples of zero-prior classes get weight 0.
Selection reweigh_to_prior(const Selection& sel, std::span<const Label> labels,
                           const PriorVector& target);

struct AuditReport {
  double pearson_rho = 0.0;
  double r_squared = 0.0;
  double overlap = 0.0;
  std::optional<double> selection_imbalance_ratio;
  std::vector<double> per_class_mean_magnitude;
  std::vector<double> per_class_selection_rate;
  std::vector<std::size_t> zero_selection_classes;

  nlohmann::json to_json() const;
};

/// Class-frequency dependence of a per-sample signal.
///
/// M_y is the class-mean score; pearson_rho and r_squared relate M_y to raw
/// class size n_y (zero when either side has no variance). overlap is the
/// share of the head pool's [p5, p95] score range also covered by the tail
/// pool's range, where head/tail are the largest/smallest quarter of classes
/// (at least one class each). With a selection, the imbalance ratio is
/// max r_y / min r_y over classes with r_y = selected_y / n_y > 0.
AuditReport signal_audit(const EmbeddingDataset& ds, const ScoreVector& scores,
                         const Selection* selection = nullptr);

double pearson_correlation(std::span<const double> x, std::span<const double> y);
// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

// A finite world: points each owned by one class, known class-conditional
// masses, a target prior, and a loss table over a finite hypothesis set.
struct QuadLabSpec {
  std::size_t num_classes = 2;
  std::vector<Label> point_labels;
  std::vector<double> point_mass;  // p_y(x); sums to 1 within each class
  PriorVector target_prior{std::vector<double>{0.5, 0.5}};
  std::vector<double> losses;  // |Theta| x num_points, row-major
  double loss_bound = 1.0;

  std::size_t num_points() const { return point_labels.size(); }
  std::size_t num_hypotheses() const {
    return point_labels.empty() ? 0 : losses.size() / point_labels.size();
  }
  void validate() const;
};

struct QuadLabReport {
  std::size_t theta_star = 0;
  std::size_t theta_hat = 0;
  double excess_risk = 0.0;   // L(theta_hat) - L(theta_star)
  double discrepancy = 0.0;   // D_G = max_theta |E_p - E_q|
  double term_a_max = 0.0;    // max_theta sum_y pi_y |E_{p_y} - E_{q_y}|
  double term_b = 0.0;        // 2 B TV(pi, rho)
  double tv = 0.0;
  double min_decomposition_slack = 0.0;
  std::size_t bound_violations = 0;
  std::size_t decomposition_violations = 0;

  nlohmann::json to_json() const;
};

/// Exhaustive check of the discrepancy bound and its class-wise split on a
/// finite world. Uncovered classes (rho_y = 0) take E_{q_y} = 0, which keeps
/// the split exact since the bound holds for any value in [0, B].
QuadLabReport quad_lab(const QuadLabSpec& spec, const Selection& sel);

// True mixture mass p(x) = pi_y p_y(x).
std::vector<double> quad_lab_population(const QuadLabSpec& spec);

// 1D threshold classifiers with 0-1 loss on random points in [0, 1]; the
// hypothesis set is every threshold on a uniform grid in both orientations.
QuadLabSpec random_threshold_lab(std::uint64_t seed, std::size_t num_points = 20,
                                 std::size_t num_thresholds = 21);

// Uniform-weight random subset of lab points; a class may end up uncovered.
Selection random_lab_subset(const QuadLabSpec& spec, std::size_t size, std::uint64_t seed);

}  // namespace ltprune
