#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ltprune/dataset.hpp"
#include "ltprune/selection.hpp"
#include "ltprune/signals.hpp"

namespace ltprune {

struct SelectorSpec {
  SelectionMethod method = SelectionMethod::kFacilityLocationRbf;
  std::optional<ScoreKind> score_kind;
  std::optional<double> bandwidth;
  std::uint64_t seed = 0;
};

bool is_score_method(SelectionMethod method);
void validate_spec(const SelectorSpec& spec);

// Fills in the median-heuristic bandwidth for FL-RBF so repeated calls on
// sub-pools share one kernel scale.
SelectorSpec resolve_spec(const EmbeddingDataset& ds, SelectorSpec spec);

/// Seed-extensible selector: returns `init` followed by up to `budget` new
/// picks from `pool \ init`, in pick order, with uniform weights.
///
/// The pool is canonicalized by sample id first, so storage order never
/// matters; every tie goes to the lowest sample id. When fewer than `budget`
/// candidates remain, all of them are taken.
Selection select(const EmbeddingDataset& ds, std::span<const std::size_t> pool, std::size_t budget,
                 std::span<const std::size_t> init, const SelectorSpec& spec);

// F(S) = sum_i max_{j in S} K(i, j) over every row of K; F(empty) = 0.
double facility_location_value(const KernelMatrix& kernel, std::span<const std::size_t> subset);

// Greedy FL maximization on a kernel in local (row) coordinates. Returns only
// the new picks. The lazy variant keeps stale upper bounds in a priority
// queue and must agree with the naive one exactly.
std::vector<std::size_t> facility_location_greedy(const KernelMatrix& kernel, std::size_t budget,
                                                  std::span<const std::size_t> init = {});
std::vector<std::size_t> facility_location_greedy_naive(const KernelMatrix& kernel,
                                                        std::size_t budget,
                                                        std::span<const std::size_t> init = {});

// Farthest-first traversal. With empty init the first pick is the point
// farthest from the pool centroid.
Selection kcenter_greedy(const EmbeddingDataset& ds, std::span<const std::size_t> pool,
                         std::size_t budget, std::span<const std::size_t> init);

// Linear-kernel herding toward the pool mean.
Selection herding(const EmbeddingDataset& ds, std::span<const std::size_t> pool, std::size_t budget,
                  std::span<const std::size_t> init);

struct StratifiedResult {
  Selection selection;
  // Classes whose quota exceeded the class size and was clamped.
  std::size_t clamped_classes = 0;
};

// Runs `select` independently inside each class pool (class id order) and
// concatenates the picks.
StratifiedResult stratified_select(const EmbeddingDataset& ds,
                                   std::span<const std::size_t> per_class_budgets,
                                   const SelectorSpec& spec);

}  // namespace ltprune
