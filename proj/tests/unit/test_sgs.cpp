#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <string>

#include "ltprune/diagnostics.hpp"
#include "ltprune/parallel.hpp"
#include "ltprune/sgs.hpp"
#include "test_support.hpp"

namespace ltprune {
namespace {

using test::throws_code;

EmbeddingDataset long_tail(std::uint64_t seed, Split split = Split::kTrain) {
  LongTailSpec spec;
  spec.num_classes = 10;
  spec.head_count = 100;
  spec.imbalance_ratio = 50.0;
  spec.dims = 16;
  spec.seed = seed;
  return generate_long_tail(spec, split);
}

SgsConfig config(const EmbeddingDataset& ds, double k, std::size_t budget) {
  SgsConfig cfg;
  cfg.k_ratio = k;
  cfg.budget = budget;
  cfg.base_selector = resolve_spec(ds, SelectorSpec{});
  return cfg;
}

TEST(SgsFloor, Values) {
  EXPECT_EQ(sgs_floor(0.4, 100, 10), 4u);
  EXPECT_EQ(sgs_floor(0.0, 100, 10), 0u);
  EXPECT_EQ(sgs_floor(1.0, 7, 10), 0u);
  EXPECT_EQ(sgs_floor(1.0, 30, 10), 3u);
  // 0.29 * 100 evaluates to 28.999999999999996 in double.
  EXPECT_EQ(sgs_floor(0.29, 100, 1), 29u);
  EXPECT_TRUE(throws_code([] { sgs_floor(1.5, 10, 2); }, ErrorCode::kInvalidArgument));
  EXPECT_TRUE(throws_code([] { sgs_floor(-0.1, 10, 2); }, ErrorCode::kInvalidArgument));
}

TEST(Sgs, KZeroIsPureGlobal) {
  const auto ds = long_tail(1);
  const auto cfg = config(ds, 0.0, 60);
  const auto sel = sgs_select(ds, cfg);
  const auto global = select(ds, ds.all_indices(), 60, {}, cfg.base_selector);
  EXPECT_EQ(sel.indices, global.indices);
}

TEST(Sgs, KOneBalancedIsStratified) {
  LongTailSpec spec;
  spec.num_classes = 4;
  spec.head_count = 30;
  spec.imbalance_ratio = 1.0;
  spec.dims = 5;
  const auto ds = generate_long_tail(spec);
  const auto cfg = config(ds, 1.0, 4 * 6);
  const auto sel = sgs_select(ds, cfg);
  const std::vector<std::size_t> quota(4, 6);
  const auto strat = stratified_select(ds, quota, cfg.base_selector).selection;
  EXPECT_EQ(sel.indices, strat.indices);
  EXPECT_EQ(sel.per_class_counts, quota);
}

TEST(Sgs, FloorHoldsOnLongTail) {
  const auto ds = long_tail(2);
  const auto sel = sgs_select(ds, config(ds, 0.4, 100));
  EXPECT_EQ(sel.size(), 100u);
  const auto counts = ds.class_counts();
  for (std::size_t y = 0; y < ds.num_classes(); ++y) {
    EXPECT_GE(sel.per_class_counts[y], std::min<std::size_t>(4, counts[y])) << "class " << y;
  }
  validate_selection(sel, ds);
}

TEST(Sgs, ExactBudgetAcrossGrid) {
  const auto ds = long_tail(3);
  for (double k : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    for (std::size_t b : {1u, 9u, 10u, 55u, 200u}) {
      const auto sel = sgs_select(ds, config(ds, k, b));
      EXPECT_EQ(sel.size(), b) << "K=" << k << " B=" << b;
      validate_selection(sel, ds);
    }
  }
  const auto all = sgs_select(ds, config(ds, 0.5, ds.size()));
  EXPECT_EQ(all.size(), ds.size());
}

TEST(Sgs, FloorNeverDropsAsKGrows) {
  const auto ds = long_tail(4);
  std::vector<std::size_t> prev(ds.num_classes(), 0);
  for (double k : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    const std::size_t b = sgs_floor(k, 120, ds.num_classes());
    const auto sel = sgs_select(ds, config(ds, k, 120));
    for (std::size_t y = 0; y < ds.num_classes(); ++y) {
      const std::size_t guaranteed = std::min(b, ds.class_counts()[y]);
      EXPECT_GE(sel.per_class_counts[y], guaranteed);
      EXPECT_GE(guaranteed, prev[y]);
      prev[y] = guaranteed;
    }
  }
}

TEST(Sgs, RejectsBadConfig) {
  const auto ds = long_tail(5);
  EXPECT_TRUE(throws_code([&] { sgs_select(ds, config(ds, 0.5, ds.size() + 1)); },
                          ErrorCode::kInvalidArgument));
  EXPECT_TRUE(throws_code([&] { sgs_select(ds, config(ds, 1.2, 10)); },
                          ErrorCode::kInvalidArgument));
  EXPECT_TRUE(throws_code([&] { sgs_select(ds, config(ds, 0.5, 0)); },
                          ErrorCode::kInvalidArgument));
}

TEST(Sgs, SeedExtensionKeepsSeeds) {
  // The top-up phase only appends to the union of seeded and global picks.
  const auto ds = long_tail(6);
  const auto cfg = config(ds, 0.8, 90);
  const auto sel = sgs_select(ds, cfg);
  const std::size_t b = sgs_floor(0.8, 90, ds.num_classes());
  for (std::size_t y = 0; y < ds.num_classes(); ++y) {
    const auto pool = ds.class_pool(static_cast<Label>(y));
    const auto seeded = select(ds, pool, std::min(b, pool.size()), {}, cfg.base_selector);
    for (std::size_t i : seeded.indices) {
      EXPECT_NE(std::find(sel.indices.begin(), sel.indices.end(), i), sel.indices.end());
    }
  }
}

TEST(Sgs, ThreadCountDoesNotChangeResult) {
  const auto ds = long_tail(7);
  set_max_threads(1);
  const auto a = sgs_select(ds, config(ds, 0.4, 80));
  set_max_threads(4);
  const auto b = sgs_select(ds, config(ds, 0.4, 80));
  set_max_threads(1);
  EXPECT_EQ(a.indices, b.indices);
}

TEST(Sweep, RowCountAndEndpoints) {
  const auto ds = long_tail(8);
  const auto test = long_tail(8, Split::kTest);
  const auto base = resolve_spec(ds, SelectorSpec{});
  TrainerParams probe;
  probe.max_iterations = 50;
  const SelectionEvaluator eval = [&](const Selection& s) {
    const auto r = probe_selection(ds, s, test, probe);
    return Accuracy{r.oa, r.macc};
  };
  const std::vector<std::size_t> budgets{50, 100};
  const std::vector<double> grid{0.0, 1.0};
  const auto rows = sweep_k(ds, budgets, grid, base, 8, eval);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].budget, 50u);
  EXPECT_EQ(rows[1].k_ratio, 1.0);
  EXPECT_EQ(rows[2].budget, 100u);

  const auto global = eval(select(ds, ds.all_indices(), 100, {}, base));
  EXPECT_EQ(rows[2].oa, global.oa);
  EXPECT_EQ(rows[2].macc, global.macc);
  SgsConfig k1 = config(ds, 1.0, 100);
  k1.seed = 8;
  const auto pure = eval(sgs_select(ds, k1));
  EXPECT_EQ(rows[3].oa, pure.oa);
  EXPECT_EQ(rows[3].macc, pure.macc);

  const std::vector<double> empty;
  EXPECT_TRUE(throws_code([&] { sweep_k(ds, budgets, empty, base, 8, eval); },
                          ErrorCode::kInvalidArgument));
}

TEST(Sweep, FullBalanceIsUsuallyMatchedBySomeSmallerK) {
  const std::vector<double> grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  const std::vector<std::size_t> budgets{100};
  TrainerParams probe;
  probe.max_iterations = 50;
  int matched = 0;
  const int seeds = 4;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto ds = long_tail(100 + seed);
    const auto test = long_tail(100 + seed, Split::kTest);
    const SelectionEvaluator eval = [&](const Selection& s) {
      const auto r = probe_selection(ds, s, test, probe);
      return Accuracy{r.oa, r.macc};
    };
    const auto rows = sweep_k(ds, budgets, grid, resolve_spec(ds, SelectorSpec{}),
                              static_cast<std::uint64_t>(seed), eval);
    const auto& last = rows.back();
    for (std::size_t r = 0; r + 1 < rows.size(); ++r) {
      if (rows[r].oa >= last.oa && rows[r].macc >= last.macc) {
        ++matched;
        break;
      }
    }
  }
  EXPECT_GE(2 * matched, seeds);
}

TEST(Sweep, CsvLayout) {
  const auto dir = test::scratch_dir("sweep_csv");
  const std::vector<SweepRow> rows{{0.0, 10, 0.5, 0.25, 3}, {1.0, 10, 0.75, 0.5, 3}};
  write_sweep_csv(rows, dir / "s.csv");
  std::ifstream in(dir / "s.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,budget,oa,macc,seed");
  int n = 0;
  while (std::getline(in, line)) ++n;
  EXPECT_EQ(n, 2);
}

}  // namespace
}  // namespace ltprune
