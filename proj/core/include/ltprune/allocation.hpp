#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ltprune/dataset.hpp"

namespace ltprune {

// Per-class error-rate model E_y(m) = c_y * m^{-gamma} + bias_y.
struct RateModel {
  std::vector<double> complexities;
  double gamma = 0.5;
  std::vector<double> bias_terms;  // empty means all zero

  void validate() const;
};

struct AllocationPlan {
  std::vector<std::size_t> budgets;
  PriorVector target_prior;
  std::size_t total = 0;
  std::size_t floor = 0;
};

// Continuous minimizer of sum_y pi_y c_y m_y^{-gamma} under sum_y m_y = m:
// m_y = m * a_y^k / sum a^k, a_y = c_y pi_y, k = 1 / (1 + gamma).
// Classes with a_y == 0 receive 0.
std::vector<double> continuous_allocation(const RateModel& rm, const PriorVector& prior,
                                          double total);

// Largest-remainder (Hamilton) rounding; remainder ties go to the lowest
// class id. The result sums to `total` exactly.
std::vector<std::size_t> largest_remainder_round(std::span<const double> shares,
                                                 std::size_t total);

AllocationPlan optimal_allocation(const RateModel& rm, const PriorVector& prior, std::size_t total);

// Independent route to the same optimum: bisection on the Lagrange
// multiplier of the KKT system m_y^{gamma+1} = gamma a_y / lambda.
// Intended for verification; limited to C <= 8.
std::vector<double> allocation_oracle(const RateModel& rm, const PriorVector& prior, double total);

// sum_y pi_y (c_y m_y^{-gamma} + bias_y); +inf if some class with
// pi_y c_y > 0 gets zero budget.
double representation_objective(const RateModel& rm, const PriorVector& prior,
                                 std::span<const double> budgets);
double representation_objective(const RateModel& rm, const PriorVector& prior,
                                 std::span<const std::size_t> budgets);

// Fraction of the reducible single-sample error removed by a floor of b
// samples: 1 - b^{-gamma}. Takes no prior by construction.
double floor_gain(std::size_t b, double gamma);

// Raises every class to min(b, class size), then takes the excess back one
// unit at a time from the currently largest budget (ties: lowest class id).
// Throws kInfeasible when sum_y min(b, size_y) exceeds the plan total.
AllocationPlan apply_floor(const AllocationPlan& plan, std::size_t b,
                           std::span<const std::size_t> class_sizes);

// Heuristic complexity estimate: per-class mean distance to the class center.
std::vector<double> estimate_class_complexity(const EmbeddingDataset& ds);

}  // namespace ltprune
