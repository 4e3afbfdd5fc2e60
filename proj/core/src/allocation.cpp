#include "ltprune/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ltprune/error.hpp"
#include "ltprune/signals.hpp"

namespace ltprune {

void RateModel::validate() const {
  require(!complexities.empty(), "rate model needs at least one class");
  for (double c : complexities) {
    require(std::isfinite(c) && c > 0.0, "class complexities must be positive");
  }
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
  require(bias_terms.empty() || bias_terms.size() == complexities.size(),
          "bias terms must be empty or one per class");
  for (double b : bias_terms) require(std::isfinite(b) && b >= 0.0, "bias terms must be >= 0");
}

namespace {

void check_shapes(const RateModel& rm, const PriorVector& prior) {
  rm.validate();
  require(prior.size() == rm.complexities.size(), "prior and rate model differ in class count");
}

}  // namespace

std::vector<double> continuous_allocation(const RateModel& rm, const PriorVector& prior,
                                          double total) {
  check_shapes(rm, prior);
  require(total >= 0.0, "budget must be >= 0");
  const double k = 1.0 / (1.0 + rm.gamma);
  std::vector<double> shares(rm.complexities.size());
  double sum = 0.0;
  for (std::size_t y = 0; y < shares.size(); ++y) {
    const double a = rm.complexities[y] * prior[y];
    shares[y] = a > 0.0 ? std::pow(a, k) : 0.0;
    sum += shares[y];
  }
  require(sum > 0.0, "allocation needs at least one class with positive prior");
  for (double& s : shares) s = total * s / sum;
  return shares;
}

std::vector<std::size_t> largest_remainder_round(std::span<const double> shares,
                                                 std::size_t total) {
  std::vector<std::size_t> out(shares.size());
  std::vector<double> frac(shares.size());
  std::size_t assigned = 0;
  for (std::size_t y = 0; y < shares.size(); ++y) {
    require(std::isfinite(shares[y]) && shares[y] >= 0.0, "shares must be finite and >= 0");
    const double fl = std::floor(shares[y]);
    out[y] = static_cast<std::size_t>(fl);
    frac[y] = shares[y] - fl;
    assigned += out[y];
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (assigned <= total) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    std::size_t remaining = total - assigned;
    for (std::size_t r = 0; remaining > 0; r = (r + 1) % order.size(), --remaining) {
      ++out[order[r]];
    }
  } else {
    // Only reachable when the shares overshoot the total through rounding.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] < frac[b]; });
    std::size_t excess = assigned - total;
    for (std::size_t r = 0; excess > 0; r = (r + 1) % order.size()) {
      if (out[order[r]] > 0) {
        --out[order[r]];
        --excess;
      }
    }
  }
  return out;
}

AllocationPlan optimal_allocation(const RateModel& rm, const PriorVector& prior, std::size_t total) {
  const auto shares = continuous_allocation(rm, prior, static_cast<double>(total));
  auto budgets = largest_remainder_round(shares, total);
  // A positive-prior class rounded down to 0 has infinite error; when the
  // budget covers every such class, move one unit to it from the largest
  // budget (ties -> lowest class id).
  const std::size_t c = budgets.size();
  std::size_t positive = 0;
  for (std::size_t y = 0; y < c; ++y) positive += prior[y] > 0.0;
  if (total >= positive) {
    for (std::size_t y = 0; y < c; ++y) {
      if (prior[y] == 0.0 || budgets[y] > 0) continue;
      std::size_t donor = c;
      for (std::size_t z = 0; z < c; ++z) {
        if (budgets[z] < 2) continue;
        if (donor == c || budgets[z] > budgets[donor]) donor = z;
      }
      --budgets[donor];
      budgets[y] = 1;
    }
  }
  return AllocationPlan{std::move(budgets), prior, total, 0};
}

std::vector<double> allocation_oracle(const RateModel& rm, const PriorVector& prior, double total) {
  check_shapes(rm, prior);
  require(rm.complexities.size() <= 8, "allocation oracle is limited to C <= 8");
  require(total > 0.0, "oracle budget must be positive");
  const std::size_t c = rm.complexities.size();
  const double inv = 1.0 / (rm.gamma + 1.0);

  // Stationarity: m_y(lambda) = (gamma a_y / lambda)^{1/(gamma+1)}; the sum is
  // strictly decreasing in lambda, so bisect on log(lambda).
  auto budgets_at = [&](double log_lambda, std::vector<double>& out) {
    double sum = 0.0;
    for (std::size_t y = 0; y < c; ++y) {
      const double a = rm.complexities[y] * prior[y];
      out[y] = a > 0.0 ? std::exp(inv * (std::log(rm.gamma * a) - log_lambda)) : 0.0;
      sum += out[y];
    }
    return sum;
  };

  std::vector<double> m(c);
  double lo = -1.0;
  double hi = 1.0;
  int expansions = 0;
  while (budgets_at(lo, m) < total) {
    lo -= 2.0 * (hi - lo);
    if (++expansions > 200) fail(ErrorCode::kNonConvergence, "oracle could not bracket lambda");
  }
  while (budgets_at(hi, m) > total) {
    hi += 2.0 * (hi - lo);
    if (++expansions > 400) fail(ErrorCode::kNonConvergence, "oracle could not bracket lambda");
  }
  for (int iter = 0; iter < 2000 && hi - lo > 0.0; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (budgets_at(mid, m) > total) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double sum = budgets_at(0.5 * (lo + hi), m);
  if (std::abs(sum - total) > 1e-11 * total) {
    fail(ErrorCode::kNonConvergence, "oracle bisection did not meet the budget constraint");
  }
  return m;
}

namespace {

template <typename T>
double objective_impl(const RateModel& rm, const PriorVector& prior, std::span<const T> budgets) {
  check_shapes(rm, prior);
  require(budgets.size() == rm.complexities.size(), "need one budget per class");
  double total = 0.0;
  for (std::size_t y = 0; y < budgets.size(); ++y) {
    const double bias = rm.bias_terms.empty() ? 0.0 : rm.bias_terms[y];
    if (prior[y] == 0.0) continue;
    const double m = static_cast<double>(budgets[y]);
    if (m <= 0.0) return std::numeric_limits<double>::infinity();
    total += prior[y] * (rm.complexities[y] * std::pow(m, -rm.gamma) + bias);
  }
  return total;
}

}  // namespace

double representation_objective(const RateModel& rm, const PriorVector& prior,
                                 std::span<const double> budgets) {
  return objective_impl(rm, prior, budgets);
}

double representation_objective(const RateModel& rm, const PriorVector& prior,
                                 std::span<const std::size_t> budgets) {
  return objective_impl(rm, prior, budgets);
}

double floor_gain(std::size_t b, double gamma) {
  require(b >= 1, "floor b must be >= 1");
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
  return 1.0 - std::pow(static_cast<double>(b), -gamma);
}

AllocationPlan apply_floor(const AllocationPlan& plan, std::size_t b,
                           std::span<const std::size_t> class_sizes) {
  const std::size_t c = plan.budgets.size();
  require(class_sizes.size() == c, "need one class size per budget");
  std::vector<std::size_t> floors(c);
  std::size_t floor_total = 0;
  for (std::size_t y = 0; y < c; ++y) {
    floors[y] = std::min(b, class_sizes[y]);
    floor_total += floors[y];
  }
  if (floor_total > plan.total) {
    fail(ErrorCode::kInfeasible, "floor b=" + std::to_string(b) + " needs " +
                                     std::to_string(floor_total) + " samples but the budget is " +
                                     std::to_string(plan.total) + " (short by " +
                                     std::to_string(floor_total - plan.total) + ")");
  }
  AllocationPlan out = plan;
  out.floor = b;
  std::size_t sum = 0;
  for (std::size_t y = 0; y < c; ++y) {
    out.budgets[y] = std::max(out.budgets[y], floors[y]);
    sum += out.budgets[y];
  }
  while (sum > plan.total) {
    std::size_t pick = c;
    for (std::size_t y = 0; y < c; ++y) {
      if (out.budgets[y] <= floors[y]) continue;
      if (pick == c || out.budgets[y] > out.budgets[pick]) pick = y;
    }
    --out.budgets[pick];
    --sum;
  }
  return out;
}

std::vector<double> estimate_class_complexity(const EmbeddingDataset& ds) {
  const auto dist = score_scalar(ds, ScoreKind::kEmbeddingCenterDist);
  const auto counts = ds.class_counts();
  std::vector<double> c(ds.num_classes(), 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) c[ds.label(i)] += dist.values[i];
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < c.size(); ++y) {
    if (counts[y] > 0) c[y] /= static_cast<double>(counts[y]);
    if (c[y] > 0.0) smallest = std::min(smallest, c[y]);
  }
  // Singleton or empty classes have no measurable spread; give them the
  // smallest observed one so the model stays strictly positive.
  const double fallback = std::isfinite(smallest) ? smallest : 1.0;
  for (double& v : c) {
    if (!(v > 0.0)) v = fallback;
  }
  return c;
}

}  // namespace ltprune
