#include "ltprune/selectors.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <string>

#include "ltprune/error.hpp"
#include "ltprune/parallel.hpp"

namespace ltprune {

bool is_score_method(SelectionMethod method) {
  return method == SelectionMethod::kScoreTopK || method == SelectionMethod::kScoreBottomK;
}

void validate_spec(const SelectorSpec& spec) {
  switch (spec.method) {
    case SelectionMethod::kScoreTopK:
    case SelectionMethod::kScoreBottomK:
    case SelectionMethod::kHerding:
    case SelectionMethod::kKCenter:
    case SelectionMethod::kFacilityLocationRbf:
      break;
    default:
      fail(ErrorCode::kInvalidArgument,
           "'" + std::string(to_string(spec.method)) + "' is not a base selector");
  }
  require(is_score_method(spec.method) == spec.score_kind.has_value(),
          "score_kind is required for score selectors and only for them");
  if (spec.bandwidth) require(*spec.bandwidth > 0.0, "bandwidth must be positive");
}

SelectorSpec resolve_spec(const EmbeddingDataset& ds, SelectorSpec spec) {
  if (spec.method == SelectionMethod::kFacilityLocationRbf && !spec.bandwidth) {
    spec.bandwidth = median_heuristic_bandwidth(ds);
  }
  return spec;
}

namespace {

struct Prepared {
  std::vector<std::size_t> pool;        // sorted, unique sample ids
  std::vector<std::size_t> init_local;  // positions of init within pool, in init order
  std::vector<char> taken;              // per pool position
  std::size_t take = 0;
};

Prepared prepare(const EmbeddingDataset& ds, std::span<const std::size_t> pool,
                 std::size_t budget, std::span<const std::size_t> init) {
  require(!pool.empty(), "selection pool is empty");
  Prepared p;
  p.pool.assign(pool.begin(), pool.end());
  std::sort(p.pool.begin(), p.pool.end());
  p.pool.erase(std::unique(p.pool.begin(), p.pool.end()), p.pool.end());
  require(p.pool.back() < ds.size(), "pool index out of range");
  p.taken.assign(p.pool.size(), 0);
  p.init_local.reserve(init.size());
  for (std::size_t id : init) {
    auto it = std::lower_bound(p.pool.begin(), p.pool.end(), id);
    require(it != p.pool.end() && *it == id,
            "initial selection is not a subset of the pool (id " + std::to_string(id) + ")");
    const auto local = static_cast<std::size_t>(it - p.pool.begin());
    require(!p.taken[local], "duplicate id " + std::to_string(id) + " in initial selection");
    p.taken[local] = 1;
    p.init_local.push_back(local);
  }
  p.take = std::min(budget, p.pool.size() - init.size());
  return p;
}

Selection finish(const EmbeddingDataset& ds, std::span<const std::size_t> init,
                 const Prepared& p, std::span<const std::size_t> picks_local,
                 SelectionMethod method, std::uint64_t seed) {
  std::vector<std::size_t> indices(init.begin(), init.end());
  indices.reserve(init.size() + picks_local.size());
  for (std::size_t local : picks_local) indices.push_back(p.pool[local]);
  return make_uniform_selection(std::move(indices), ds.labels(), ds.num_classes(), method, seed);
}

// Returns the unselected position with the largest value; lowest position
// (= lowest sample id, the pool being sorted) on ties.
std::size_t argmax_free(std::span<const double> values, std::span<const char> taken) {
  std::size_t best = values.size();
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (taken[j]) continue;
    if (best == values.size() || values[j] > best_value) {
      best = j;
      best_value = values[j];
    }
  }
  return best;
}

std::vector<double> initial_cover(const KernelMatrix& kernel, std::span<const std::size_t> init) {
  std::vector<double> cover(kernel.size(), 0.0);
  for (std::size_t j : init) {
    auto row = kernel.row(j);
    for (std::size_t i = 0; i < cover.size(); ++i) cover[i] = std::max(cover[i], row[i]);
  }
  return cover;
}

// Kernel rows are exact mirrors of columns, so row j holds K(i, j) for all i.
double marginal_gain(const KernelMatrix& kernel, std::span<const double> cover, std::size_t j) {
  auto row = kernel.row(j);
  double gain = 0.0;
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const double delta = row[i] - cover[i];
    if (delta > 0.0) gain += delta;
  }
  return gain;
}

void absorb(const KernelMatrix& kernel, std::vector<double>& cover, std::size_t j) {
  auto row = kernel.row(j);
  for (std::size_t i = 0; i < cover.size(); ++i) cover[i] = std::max(cover[i], row[i]);
}

std::vector<char> taken_mask(std::size_t n, std::span<const std::size_t> init) {
  std::vector<char> taken(n, 0);
  for (std::size_t j : init) {
    require(j < n, "initial index out of range");
    taken[j] = 1;
  }
  return taken;
}

}  // namespace

double facility_location_value(const KernelMatrix& kernel, std::span<const std::size_t> subset) {
  if (subset.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    double best = 0.0;
    for (std::size_t j : subset) best = std::max(best, kernel(i, j));
    total += best;
  }
  return total;
}

std::vector<std::size_t> facility_location_greedy_naive(const KernelMatrix& kernel,
                                                        std::size_t budget,
                                                        std::span<const std::size_t> init) {
  const std::size_t n = kernel.size();
  auto taken = taken_mask(n, init);
  auto cover = initial_cover(kernel, init);
  const std::size_t take = std::min(budget, n - init.size());
  std::vector<std::size_t> picks;
  picks.reserve(take);
  std::vector<double> gains(n);
  while (picks.size() < take) {
    parallel_for(n, [&](std::size_t j) {
      gains[j] = taken[j] ? 0.0 : marginal_gain(kernel, cover, j);
    });
    const std::size_t best = argmax_free(gains, taken);
    taken[best] = 1;
    absorb(kernel, cover, best);
    picks.push_back(best);
  }
  return picks;
}

std::vector<std::size_t> facility_location_greedy(const KernelMatrix& kernel, std::size_t budget,
                                                  std::span<const std::size_t> init) {
  const std::size_t n = kernel.size();
  auto taken = taken_mask(n, init);
  auto cover = initial_cover(kernel, init);
  const std::size_t take = std::min(budget, n - init.size());
  std::vector<std::size_t> picks;
  if (take == 0) return picks;
  picks.reserve(take);

  struct Entry {
    double bound;
    std::size_t index;
    std::size_t round;  // pick count when `bound` was computed
  };
  // Top of the heap: largest bound, then lowest index.
  auto lower_priority = [](const Entry& a, const Entry& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.index > b.index;
  };
  std::vector<double> gains(n, 0.0);
  parallel_for(n, [&](std::size_t j) {
    if (!taken[j]) gains[j] = marginal_gain(kernel, cover, j);
  });
  std::vector<Entry> heap;
  heap.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!taken[j]) heap.push_back({gains[j], j, 0});
  }
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> queue(
      lower_priority, std::move(heap));

  std::size_t round = 0;
  while (picks.size() < take) {
    Entry top = queue.top();
    queue.pop();
    if (top.round == round) {
      // Every other bound is <= top.bound, and stale bounds only overestimate
      // (submodularity), so this is the exact greedy choice.
      taken[top.index] = 1;
      absorb(kernel, cover, top.index);
      picks.push_back(top.index);
      ++round;
    } else {
      top.bound = marginal_gain(kernel, cover, top.index);
      top.round = round;
      queue.push(top);
    }
  }
  return picks;
}

Selection kcenter_greedy(const EmbeddingDataset& ds, std::span<const std::size_t> pool,
                         std::size_t budget, std::span<const std::size_t> init) {
  Prepared p = prepare(ds, pool, budget, init);
  const std::size_t n = p.pool.size();
  const std::size_t d = ds.dims();
  std::vector<std::size_t> picks;
  picks.reserve(p.take);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> nearest(n, kInf);

  auto absorb_center = [&](std::size_t center) {
    auto ec = ds.embedding(p.pool[center]);
    parallel_for(n, [&](std::size_t j) {
      if (p.taken[j]) return;
      nearest[j] = std::min(nearest[j], squared_distance(ds.embedding(p.pool[j]), ec));
    });
  };

  if (p.take > 0 && p.init_local.empty()) {
    std::vector<double> centroid(d, 0.0);
    for (std::size_t id : p.pool) {
      auto e = ds.embedding(id);
      for (std::size_t k = 0; k < d; ++k) centroid[k] += e[k];
    }
    for (double& v : centroid) v /= static_cast<double>(n);
    std::vector<double> dist(n);
    parallel_for(n, [&](std::size_t j) {
      auto e = ds.embedding(p.pool[j]);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = e[k] - centroid[k];
        s += diff * diff;
      }
      dist[j] = s;
    });
    const std::size_t first = argmax_free(dist, p.taken);
    p.taken[first] = 1;
    picks.push_back(first);
    absorb_center(first);
  } else {
    for (std::size_t local : p.init_local) absorb_center(local);
  }

  while (picks.size() < p.take) {
    const std::size_t next = argmax_free(nearest, p.taken);
    p.taken[next] = 1;
    picks.push_back(next);
    absorb_center(next);
  }
  return finish(ds, init, p, picks, SelectionMethod::kKCenter, 0);
}

Selection herding(const EmbeddingDataset& ds, std::span<const std::size_t> pool,
                  std::size_t budget, std::span<const std::size_t> init) {
  Prepared p = prepare(ds, pool, budget, init);
  const std::size_t n = p.pool.size();
  const std::size_t d = ds.dims();
  std::vector<double> mean(d, 0.0);
  for (std::size_t id : p.pool) {
    auto e = ds.embedding(id);
    for (std::size_t k = 0; k < d; ++k) mean[k] += e[k];
  }
  for (double& v : mean) v /= static_cast<double>(n);

  // After t picks: w_t = (t + 1) mu - sum of picked embeddings.
  std::vector<double> w(d);
  for (std::size_t k = 0; k < d; ++k) {
    w[k] = static_cast<double>(p.init_local.size() + 1) * mean[k];
  }
  for (std::size_t local : p.init_local) {
    auto e = ds.embedding(p.pool[local]);
    for (std::size_t k = 0; k < d; ++k) w[k] -= e[k];
  }

  std::vector<std::size_t> picks;
  picks.reserve(p.take);
  std::vector<double> scores(n);
  while (picks.size() < p.take) {
    parallel_for(n, [&](std::size_t j) {
      if (p.taken[j]) return;
      auto e = ds.embedding(p.pool[j]);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += w[k] * e[k];
      scores[j] = s;
    });
    const std::size_t best = argmax_free(scores, p.taken);
    p.taken[best] = 1;
    picks.push_back(best);
    auto e = ds.embedding(p.pool[best]);
    for (std::size_t k = 0; k < d; ++k) w[k] += mean[k] - e[k];
  }
  return finish(ds, init, p, picks, SelectionMethod::kHerding, 0);
}

namespace {

Selection score_select(const EmbeddingDataset& ds, Prepared& p,
                       std::span<const std::size_t> init, const SelectorSpec& spec) {
  const auto scores = score_scalar(ds, *spec.score_kind);
  std::vector<std::size_t> candidates;
  candidates.reserve(p.pool.size());
  for (std::size_t j = 0; j < p.pool.size(); ++j) {
    if (!p.taken[j]) candidates.push_back(j);
  }
  const bool top = spec.method == SelectionMethod::kScoreTopK;
  auto before = [&](std::size_t a, std::size_t b) {
    const double sa = scores.values[p.pool[a]];
    const double sb = scores.values[p.pool[b]];
    if (sa != sb) return top ? sa > sb : sa < sb;
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(p.take),
                    candidates.end(), before);
  candidates.resize(p.take);
  return finish(ds, init, p, candidates, spec.method, spec.seed);
}

}  // namespace

Selection select(const EmbeddingDataset& ds, std::span<const std::size_t> pool, std::size_t budget,
                 std::span<const std::size_t> init, const SelectorSpec& spec) {
  validate_spec(spec);
  Selection sel;
  switch (spec.method) {
    case SelectionMethod::kScoreTopK:
    case SelectionMethod::kScoreBottomK: {
      Prepared p = prepare(ds, pool, budget, init);
      sel = score_select(ds, p, init, spec);
      break;
    }
    case SelectionMethod::kHerding:
      sel = herding(ds, pool, budget, init);
      break;
    case SelectionMethod::kKCenter:
      sel = kcenter_greedy(ds, pool, budget, init);
      break;
    case SelectionMethod::kFacilityLocationRbf: {
      Prepared p = prepare(ds, pool, budget, init);
      std::vector<std::size_t> picks;
      if (p.take > 0) {
        const double sigma = spec.bandwidth ? *spec.bandwidth : median_heuristic_bandwidth(ds);
        const auto kernel = rbf_kernel(ds, p.pool, sigma);
        picks = facility_location_greedy(kernel, p.take, p.init_local);
      }
      sel = finish(ds, init, p, picks, spec.method, spec.seed);
      break;
    }
    default:
      fail(ErrorCode::kInvalidArgument, "not a base selector");
  }
  sel.method = spec.method;
  sel.seed_used = spec.seed;
  return sel;
}

StratifiedResult stratified_select(const EmbeddingDataset& ds,
                                   std::span<const std::size_t> per_class_budgets,
                                   const SelectorSpec& spec) {
  require(per_class_budgets.size() == ds.num_classes(), "need one quota per class");
  const SelectorSpec resolved = resolve_spec(ds, spec);
  validate_spec(resolved);
  const std::size_t c = ds.num_classes();
  std::vector<std::vector<std::size_t>> picks(c);
  std::vector<char> clamped(c, 0);
  parallel_for(c, [&](std::size_t y) {
    const auto pool = ds.class_pool(static_cast<Label>(y));
    std::size_t quota = per_class_budgets[y];
    if (quota > pool.size()) {
      clamped[y] = 1;
      quota = pool.size();
    }
    if (quota == 0) return;
    picks[y] = select(ds, pool, quota, {}, resolved).indices;
  });
  StratifiedResult result;
  std::vector<std::size_t> indices;
  for (std::size_t y = 0; y < c; ++y) {
    indices.insert(indices.end(), picks[y].begin(), picks[y].end());
    result.clamped_classes += clamped[y];
  }
  result.selection = make_uniform_selection(std::move(indices), ds.labels(), c,
                                            SelectionMethod::kStratified, spec.seed);
  return result;
}

}  // namespace ltprune
