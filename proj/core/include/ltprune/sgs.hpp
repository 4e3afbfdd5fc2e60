#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "ltprune/dataset.hpp"
#include "ltprune/selection.hpp"
#include "ltprune/selectors.hpp"

namespace ltprune {

// Seeded Global Selection settings. k_ratio in [0, 1] is the share of the
// budget reserved for per-class seeding.
struct SgsConfig {
  double k_ratio = 0.0;
  std::size_t budget = 1;
  SelectorSpec base_selector;
  std::uint64_t seed = 0;
};

// Per-class seed quota b = floor(K * B / C).
std::size_t sgs_floor(double k_ratio, std::size_t budget, std::size_t num_classes);

/// Seeded Global Selection.
///
///   b      = floor(K*B / C)
///   S_strat = union over classes of base(D_y, min(b, n_y), {})
///   S_glob  = base(D, B - b*C, {})
///   S       = S_strat u S_glob, topped up with base(D, B - |S|, S)
///
/// Returns exactly B samples; every class keeps at least min(b, n_y).
Selection sgs_select(const EmbeddingDataset& ds, const SgsConfig& cfg);

struct SweepRow {
  double k_ratio = 0.0;
  std::size_t budget = 0;
  double oa = 0.0;
  double macc = 0.0;
  std::uint64_t seed = 0;
};

struct Accuracy {
  double oa = 0.0;
  double macc = 0.0;
};

using SelectionEvaluator = std::function<Accuracy(const Selection&)>;

// One row per (budget, K) pair, budgets outer.
std::vector<SweepRow> sweep_k(const EmbeddingDataset& ds, std::span<const std::size_t> budgets,
                              std::span<const double> k_grid, const SelectorSpec& base,
                              std::uint64_t seed, const SelectionEvaluator& evaluate);

// CSV with header "k,budget,oa,macc,seed".
void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);

}  // namespace ltprune
