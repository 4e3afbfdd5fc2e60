#include "ltprune/sgs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <unordered_set>

#include "ltprune/error.hpp"
#include "ltprune/parallel.hpp"

namespace ltprune {

std::size_t sgs_floor(double k_ratio, std::size_t budget, std::size_t num_classes) {
  require(k_ratio >= 0.0 && k_ratio <= 1.0, "K must lie in [0, 1]");
  require(num_classes >= 1, "need at least one class");
  // The relative nudge keeps K*B/C from landing one ulp under an exact integer.
  const double exact = k_ratio * static_cast<double>(budget) / static_cast<double>(num_classes);
  return static_cast<std::size_t>(std::floor(exact * (1.0 + 1e-12)));
}

Selection sgs_select(const EmbeddingDataset& ds, const SgsConfig& cfg) {
  require(cfg.budget >= 1, "SGS budget must be >= 1");
  require(cfg.budget <= ds.size(), "SGS budget " + std::to_string(cfg.budget) +
                                       " exceeds dataset size " + std::to_string(ds.size()));
  SelectorSpec base = resolve_spec(ds, cfg.base_selector);
  base.seed = cfg.seed;
  validate_spec(base);

  const std::size_t c = ds.num_classes();
  const std::size_t b = sgs_floor(cfg.k_ratio, cfg.budget, c);

  // Seeding: per-class quota min(b, n_y), merged in class order.
  std::vector<std::vector<std::size_t>> seeded(c);
  if (b > 0) {
    parallel_for(c, [&](std::size_t y) {
      const auto pool = ds.class_pool(static_cast<Label>(y));
      const std::size_t quota = std::min(b, pool.size());
      if (quota == 0) return;
      seeded[y] = select(ds, pool, quota, {}, base).indices;
    });
  }

  const auto all = ds.all_indices();
  const std::size_t global_budget = cfg.budget - std::min(cfg.budget, b * c);
  std::vector<std::size_t> global;
  if (global_budget > 0) global = select(ds, all, global_budget, {}, base).indices;

  std::vector<std::size_t> merged;
  merged.reserve(cfg.budget);
  std::unordered_set<std::size_t> seen;
  for (const auto& part : seeded) {
    for (std::size_t i : part) {
      if (seen.insert(i).second) merged.push_back(i);
    }
  }
  for (std::size_t i : global) {
    if (seen.insert(i).second) merged.push_back(i);
  }
  if (merged.size() < cfg.budget) {
    merged = select(ds, all, cfg.budget - merged.size(), merged, base).indices;
  }
  return make_uniform_selection(std::move(merged), ds.labels(), c, SelectionMethod::kSgs, cfg.seed);
}

std::vector<SweepRow> sweep_k(const EmbeddingDataset& ds, std::span<const std::size_t> budgets,
                              std::span<const double> k_grid, const SelectorSpec& base,
                              std::uint64_t seed, const SelectionEvaluator& evaluate) {
  require(!k_grid.empty(), "K grid is empty");
  require(!budgets.empty(), "budget list is empty");
  require(static_cast<bool>(evaluate), "sweep needs an evaluator");
  const SelectorSpec resolved = resolve_spec(ds, base);
  std::vector<SweepRow> rows;
  rows.reserve(budgets.size() * k_grid.size());
  for (std::size_t budget : budgets) {
    for (double k : k_grid) {
      const Selection sel = sgs_select(ds, SgsConfig{k, budget, resolved, seed});
      const Accuracy acc = evaluate(sel);
      rows.push_back(SweepRow{k, budget, acc.oa, acc.macc, seed});
    }
  }
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "k,budget,oa,macc,seed\n";
  for (const auto& r : rows) {
    out << r.k_ratio << ',' << r.budget << ',' << r.oa << ',' << r.macc << ',' << r.seed << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace ltprune
