// Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "cli.hpp"
#include "ltprune/allocation.hpp"
#include "ltprune/dataset.hpp"
#include "ltprune/diagnostics.hpp"
#include "ltprune/distill.hpp"
#include "ltprune/parallel.hpp"
#include "ltprune/rng.hpp"
#include "ltprune/selectors.hpp"
#include "ltprune/sgs.hpp"

namespace fs = std::filesystem;
using namespace ltprune;

namespace {

// Tolerances and limits, fixed up front.
constexpr double kAllocRelTol = 1e-9;
constexpr double kIntegerSlack = 1.0;
constexpr double kGreedyRatio = 1.0 - 1.0 / 2.718281828459045;
constexpr double kTvTol = 1e-12;
constexpr double kKdGapTol = 1e-4;
constexpr double kHardShiftMin = 0.1;
constexpr double kFdRelTol = 1e-4;
constexpr double kInvarianceTol = 1e-10;
constexpr double kFloorGainTol = 1e-15;
constexpr double kRatioRounding = 0.05;

constexpr double kLimitAllocation = 10.0;
constexpr double kLimitSubmodular = 60.0;
constexpr double kLimitQuadLab = 30.0;
constexpr double kLimitKd = 10.0;
constexpr double kLimitAudit = 120.0;

// Synthetic long-tail benchmark shared by the audit and SGS criteria.
constexpr std::size_t kBenchClasses = 20;
constexpr double kBenchRatio = 100.0;
constexpr std::size_t kBenchHead = 500;
constexpr std::size_t kBenchDims = 32;
constexpr double kBenchSeparation = 3.0;
constexpr std::size_t kProbeIterations = 20;
constexpr double kAuditBudgetFraction = 0.02;
constexpr double kSgsBudgetFraction = 0.2;
constexpr std::size_t kBenchSeeds = 10;
constexpr std::size_t kBenchRequired = 8;

struct Outcome {
  bool pass = false;
  std::string detail;
  double limit_seconds = 0.0;  // 0 = no runtime bound
};

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

// ---------------------------------------------------------------- 1
Outcome allocation_optimality() {
  std::mt19937_64 rng(derive_seed(1, "acceptance.allocation"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 2 + rng() % 7;
    RateModel rm;
    rm.gamma = 0.1 + 1.9 * unit(rng);
    std::vector<double> pi(c);
    for (std::size_t y = 0; y < c; ++y) {
      rm.complexities.push_back(std::exp(std::log(0.1) + unit(rng) * std::log(100.0)));
      pi[y] = -std::log(1.0 - unit(rng));
    }
    const double s = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (double& p : pi) p /= s;
    const PriorVector prior(pi);
    const std::size_t total = c + rng() % 2000;
    const auto closed = continuous_allocation(rm, prior, static_cast<double>(total));
    const auto oracle = allocation_oracle(rm, prior, static_cast<double>(total));
    const auto plan = optimal_allocation(rm, prior, total);
    for (std::size_t y = 0; y < c; ++y) {
      worst_rel = std::max(worst_rel, rel_err(closed[y], oracle[y]));
    }
    if (std::accumulate(plan.budgets.begin(), plan.budgets.end(), std::size_t{0}) != total) {
      worst_rel = std::numeric_limits<double>::infinity();
    }
  }

  // Exhaustive integer optimum for C <= 3, m <= 30.
  std::size_t worst_unit = 0;
  std::size_t enumerated = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 2 + rng() % 2;
    RateModel rm;
    rm.gamma = 0.1 + 1.9 * unit(rng);
    std::vector<double> pi(c);
    for (std::size_t y = 0; y < c; ++y) {
      rm.complexities.push_back(std::exp(std::log(0.1) + unit(rng) * std::log(100.0)));
      pi[y] = -std::log(1.0 - unit(rng));
    }
    const double s = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (double& p : pi) p /= s;
    const PriorVector prior(pi);
    const std::size_t m = c + rng() % (31 - c);
    const auto plan = optimal_allocation(rm, prior, m);

    std::vector<std::size_t> best;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> cur(c, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t y, std::size_t left) {
      if (y + 1 == c) {
        cur[y] = left;
        const double v = representation_objective(rm, prior, std::span<const std::size_t>(cur));
        if (v < best_value) {
          best_value = v;
          best = cur;
        }
        return;
      }
      for (std::size_t k = 0; k <= left; ++k) {
        cur[y] = k;
        rec(y + 1, left - k);
      }
    };
    rec(0, m);
    ++enumerated;
    for (std::size_t y = 0; y < c; ++y) {
      const std::size_t diff = plan.budgets[y] > best[y] ? plan.budgets[y] - best[y] : best[y] - plan.budgets[y];
      worst_unit = std::max(worst_unit, diff);
    }
  }
  std::ostringstream os;
  os << "max rel err " << worst_rel << " over 100 instances; max per-class gap to integer optimum " << worst_unit << " over " << enumerated
     << " enumerations";
  return {worst_rel <= kAllocRelTol &&
              static_cast<double>(worst_unit) <= kIntegerSlack,
          os.str(), kLimitAllocation};
}

// ---------------------------------------------------------------- 2
EmbeddingDataset gaussian_cloud(std::size_t n, std::size_t d, std::uint64_t seed, bool duplicates) {
  std::mt19937_64 rng(derive_seed(seed, "acceptance.cloud"));
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> emb(n * d);
  for (float& v : emb) v = normal(rng);
  if (duplicates) {
    // Exact copies force gain ties.
    for (std::size_t i = 1; i < n; i += 3) {
      std::copy_n(emb.begin() + static_cast<std::ptrdiff_t>((i - 1) * d), d,
                  emb.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
  }
  return EmbeddingDataset(d, 1, std::move(emb), std::vector<Label>(n, 0));
}

Outcome submodular_quality() {
  std::mt19937_64 rng(derive_seed(2, "acceptance.submodular"));
  std::size_t mismatches = 0;
  std::size_t instances = 0;
  for (std::size_t trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    const std::size_t d = 1 + rng() % 8;
    const auto ds = gaussian_cloud(n, d, trial, n >= 10 && trial % 4 == 0);
    const auto kernel = rbf_kernel(ds, std::nullopt);
    const std::size_t budget = 1 + rng() % n;
    std::vector<std::size_t> init;
    if (trial % 3 == 0) {
      for (std::size_t k = 0; k < std::min<std::size_t>(3, n - 1); ++k) init.push_back(k * 2 % n);
      std::sort(init.begin(), init.end());
      init.erase(std::unique(init.begin(), init.end()), init.end());
    }
    const auto lazy = facility_location_greedy(kernel, budget, init);
    const auto naive = facility_location_greedy_naive(kernel, budget, init);
    ++instances;
    if (lazy != naive) ++mismatches;
  }

  std::size_t below = 0;
  double worst_ratio = 1.0;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng() % 10;
    const std::size_t m = 1 + rng() % 4;
    const auto ds = gaussian_cloud(n, 2, 1000 + trial, false);
    const auto kernel = rbf_kernel(ds, std::nullopt);
    const auto greedy = facility_location_greedy(kernel, m);
    const double g = facility_location_value(kernel, greedy);
    double opt = 0.0;
    std::vector<char> mask(n, 0);
    std::fill(mask.end() - static_cast<std::ptrdiff_t>(m), mask.end(), 1);
    do {
      std::vector<std::size_t> subset;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask[i]) subset.push_back(i);
      }
      opt = std::max(opt, facility_location_value(kernel, subset));
    } while (std::next_permutation(mask.begin(), mask.end()));
    worst_ratio = std::min(worst_ratio, g / opt);
    if (g < kGreedyRatio * opt) ++below;
  }
  std::ostringstream os;
  os << mismatches << "/" << instances << " lazy/naive mismatches; worst greedy/OPT " << worst_ratio
     << " over 50 exhaustive instances";
  return {mismatches == 0 && below == 0, os.str(), kLimitSubmodular};
}

// ---------------------------------------------------------------- 3
Outcome quadrature_lab() {
  std::size_t bound_viol = 0;
  std::size_t decomposition = 0;
  std::size_t reweighed_violations = 0;
  double worst_tv = 0.0;
  double worst_term_b = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto spec = random_threshold_lab(seed);
    const auto report = quad_lab(spec, random_lab_subset(spec, 5, seed));
    bound_viol += report.bound_violations;
    decomposition += report.decomposition_violations;

    // A subset that covers every class, so reweighing is feasible.
    Selection covered;
    for (std::uint64_t k = 0;; ++k) {
      covered = random_lab_subset(spec, 5, seed + 1000 * (k + 1));
      if (std::all_of(covered.per_class_counts.begin(), covered.per_class_counts.end(),
                      [](std::size_t v) { return v > 0; })) {
        break;
      }
    }
    const auto weighted = reweigh_to_prior(covered, spec.point_labels, spec.target_prior);
    const auto after = quad_lab(spec, weighted);
    worst_tv = std::max(worst_tv, after.tv);
    worst_term_b = std::max(worst_term_b, after.term_b);
    reweighed_violations += after.bound_violations + after.decomposition_violations;
  }
  std::ostringstream os;
  os << "violations: bound " << bound_viol << ", decomposition " << decomposition
     << ", after reweigh " << reweighed_violations << "; max TV after reweigh " << worst_tv;
  return {bound_viol == 0 && decomposition == 0 && reweighed_violations == 0 && worst_tv <= kTvTol &&
              worst_term_b <= 2.0 * kTvTol,
          os.str(), kLimitQuadLab};
}

// ---------------------------------------------------------------- 4
Outcome kd_robustness() {
  KdToySpec spec;
  spec.tolerance = kKdGapTol;
  const auto r = kd_robustness_check(spec);
  std::ostringstream os;
  os << "L1 gap uniform " << r.max_l1_gap_uniform << ", class-balanced "
     << r.max_l1_gap_class_balanced << "; hard-label shift " << r.hard_l1_shift;
  return {r.max_l1_gap_uniform <= kKdGapTol && r.max_l1_gap_class_balanced <= kKdGapTol &&
              r.hard_l1_shift >= kHardShiftMin,
          os.str(), kLimitKd};
}

// ---------------------------------------------------------------- 5
std::vector<double> random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> m(rows * cols);
  for (double& v : m) v = normal(rng);
  return m;
}

// Random orthogonal d x d via Gram-Schmidt.
std::vector<double> random_rotation(std::mt19937_64& rng, std::size_t d) {
  auto q = random_matrix(rng, d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += q[i * d + k] * q[j * d + k];
      for (std::size_t k = 0; k < d; ++k) q[i * d + k] -= dot * q[j * d + k];
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < d; ++k) norm += q[i * d + k] * q[i * d + k];
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < d; ++k) q[i * d + k] /= norm;
  }
  return q;
}

std::vector<double> similarity(const std::vector<double>& x, std::size_t d,
                               const std::vector<double>& rot, double scale,
                               const std::vector<double>& shift) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size() / d; ++i) {
    for (std::size_t r = 0; r < d; ++r) {
      double v = 0.0;
      for (std::size_t k = 0; k < d; ++k) v += rot[r * d + k] * x[i * d + k];
      out[i * d + r] = scale * v + shift[r];
    }
  }
  return out;
}

Outcome rkd_gradients() {
  std::mt19937_64 rng(derive_seed(5, "acceptance.rkd"));
  double worst_d = 0.0;
  double worst_a = 0.0;
  double worst_inv = 0.0;
  for (int batch = 0; batch < 20; ++batch) {
    const std::size_t n = 3 + rng() % 6;
    const std::size_t ds = 2 + rng() % 5;
    const std::size_t dt = 2 + rng() % 5;
    auto s = random_matrix(rng, n, ds);
    const auto t = random_matrix(rng, n, dt);
    const auto base = rkd_loss(s, ds, t, dt, {}, true);
    std::vector<double> fd_d(s.size()), fd_a(s.size());
    const double h = 1e-6;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double keep = s[k];
      s[k] = keep + h;
      const auto up = rkd_loss(s, ds, t, dt);
      s[k] = keep - h;
      const auto down = rkd_loss(s, ds, t, dt);
      s[k] = keep;
      fd_d[k] = (up.distance - down.distance) / (2 * h);
      fd_a[k] = (up.angle - down.angle) / (2 * h);
    }
    auto rel = [](const std::vector<double>& a, const std::vector<double>& b) {
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a[k] - b[k]) * (a[k] - b[k]);
        den += b[k] * b[k];
      }
      return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
    };
    worst_d = std::max(worst_d, rel(base.distance_grad, fd_d));
    worst_a = std::max(worst_a, rel(base.angle_grad, fd_a));

    // Rotating, scaling and shifting the student leaves both potentials unchanged.
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> shift(ds);
    for (double& v : shift) v = normal(rng);
    const auto moved = similarity(s, ds, random_rotation(rng, ds), 0.5 + 2.0 * (rng() % 1000) / 1000.0, shift);
    const auto again = rkd_loss(moved, ds, t, dt);
    worst_inv = std::max({worst_inv, std::abs(again.distance - base.distance),
                          std::abs(again.angle - base.angle)});
    // A similarity copy of the teacher is a perfect student.
    std::vector<double> tshift(dt);
    for (double& v : tshift) v = normal(rng);
    const auto copy = similarity(t, dt, random_rotation(rng, dt), 3.0, tshift);
    const auto perfect = rkd_loss(copy, dt, t, dt);
    worst_inv = std::max({worst_inv, std::abs(perfect.distance), std::abs(perfect.angle)});
  }
  std::ostringstream os;
  os << "max grad rel err distance " << worst_d << ", angle " << worst_a
     << "; max invariance deviation " << worst_inv;
  return {worst_d <= kFdRelTol && worst_a <= kFdRelTol && worst_inv <= kInvarianceTol, os.str()};
}

// ---------------------------------------------------------------- 6
Outcome floor_gain_law() {
  // The gain takes no prior argument.
  static_assert(std::is_same_v<decltype(&floor_gain), double (*)(std::size_t, double)>);
  double worst = 0.0;
  bool monotone = true;
  for (double gamma : {0.05, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    double prev = -1.0;
    for (std::size_t b = 1; b <= 2000; ++b) {
      const double g = floor_gain(b, gamma);
      const double expected = 1.0 - std::exp(-gamma * std::log(static_cast<double>(b)));
      worst = std::max(worst, std::abs(g - expected));
      if (!(g > prev)) monotone = false;
      prev = g;
    }
  }
  std::ostringstream os;
  os << "max deviation " << worst << " on 16000 grid points; strictly increasing in b: "
     << (monotone ? "yes" : "no");
  return {worst <= kFloorGainTol && monotone, os.str()};
}

// ---------------------------------------------------------------- 7, 8
struct Bench {
  EmbeddingDataset train;
  EmbeddingDataset test;
};

Bench make_bench(std::uint64_t seed) {
  const LongTailSpec spec{kBenchClasses, kBenchHead, kBenchRatio, kBenchDims, kBenchSeparation, seed};
  auto train = generate_long_tail(spec, Split::kTrain);
  TrainerParams probe;
  probe.max_iterations = kProbeIterations;
  const auto fit = calibrate_head(train, std::nullopt, probe);
  auto with_logits = train.with_logits(fit.head.dataset_logits(train));
  return {std::move(with_logits), generate_long_tail(spec, Split::kTest)};
}

Outcome signal_audit_direction() {
  std::size_t ordering = 0;
  std::size_t correlation = 0;
  std::ostringstream rows;
  for (std::uint64_t seed = 0; seed < kBenchSeeds; ++seed) {
    const Bench b = make_bench(seed);
    const auto& ds = b.train;
    const auto all = ds.all_indices();
    const std::size_t budget = static_cast<std::size_t>(kAuditBudgetFraction * static_cast<double>(ds.size()));
    const auto loss = score_scalar(ds, ScoreKind::kLoss);
    const auto el2n = score_scalar(ds, ScoreKind::kEl2n);
    const auto center = score_scalar(ds, ScoreKind::kEmbeddingCenterDist);
    const auto s_loss = select(ds, all, budget, {}, {SelectionMethod::kScoreTopK, ScoreKind::kLoss, {}, seed});
    const auto s_el2n = select(ds, all, budget, {}, {SelectionMethod::kScoreTopK, ScoreKind::kEl2n, {}, seed});
    const auto s_fl = select(ds, all, budget, {}, {SelectionMethod::kFacilityLocationRbf, {}, {}, seed});
    const auto a_loss = signal_audit(ds, loss, &s_loss);
    const auto a_el2n = signal_audit(ds, el2n, &s_el2n);
    const auto a_fl = signal_audit(ds, center, &s_fl);
    const double ir_l = a_loss.selection_imbalance_ratio.value_or(0.0);
    const double ir_e = a_el2n.selection_imbalance_ratio.value_or(0.0);
    const double ir_f = a_fl.selection_imbalance_ratio.value_or(0.0);
    if (ir_l > ir_e && ir_e > ir_f) ++ordering;
    if (std::abs(a_fl.pearson_rho) < std::abs(a_loss.pearson_rho)) ++correlation;
    rows << " [" << seed << ": " << ir_l << ">" << ir_e << ">" << ir_f << "]";
  }
  std::ostringstream os;
  os << "imbalance ordering " << ordering << "/" << kBenchSeeds << ", |rho| ordering " << correlation
     << "/" << kBenchSeeds << ";" << rows.str();
  return {ordering >= kBenchRequired && correlation >= kBenchRequired, os.str(), kLimitAudit};
}

Outcome sgs_behavior() {
  std::size_t improved = 0;
  std::size_t floors_ok = 0;
  std::size_t endpoints_ok = 0;
  const std::vector<double> grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  TrainerParams probe;
  probe.max_iterations = kProbeIterations;
  for (std::uint64_t seed = 0; seed < kBenchSeeds; ++seed) {
    const Bench b = make_bench(seed);
    const auto& ds = b.train;
    const auto all = ds.all_indices();
    const SelectorSpec base = resolve_spec(ds, {SelectionMethod::kFacilityLocationRbf, {}, {}, seed});
    const std::size_t budget = static_cast<std::size_t>(kSgsBudgetFraction * static_cast<double>(ds.size()));

    const auto k0 = sgs_select(ds, {0.0, budget, base, seed});
    const auto k4 = sgs_select(ds, {0.4, budget, base, seed});
    if (probe_selection(ds, k4, b.test, probe).macc >= probe_selection(ds, k0, b.test, probe).macc) {
      ++improved;
    }

    bool floors = true;
    for (double k : grid) {
      const auto sel = k == 0.0 ? k0 : (k == 0.4 ? k4 : sgs_select(ds, {k, budget, base, seed}));
      const std::size_t f = sgs_floor(k, budget, ds.num_classes());
      floors = floors && sel.size() == budget;
      for (std::size_t y = 0; y < ds.num_classes(); ++y) {
        floors = floors && sel.per_class_counts[y] >= std::min(f, ds.class_counts()[y]);
      }
    }
    if (floors) ++floors_ok;

    // K=0 is pure global selection; K=1 with B = C*b (b <= smallest class) is
    // pure stratified selection.
    const auto global = select(ds, all, budget, {}, base);
    const std::size_t smallest = *std::min_element(ds.class_counts().begin(), ds.class_counts().end());
    const std::size_t strat_budget = smallest * ds.num_classes();
    const auto k1 = sgs_select(ds, {1.0, strat_budget, base, seed});
    const std::vector<std::size_t> quotas(ds.num_classes(), smallest);
    const auto strat = stratified_select(ds, quotas, base).selection;
    if (k0.indices == global.indices && k0.weights == global.weights &&
        k1.indices == strat.indices && k1.weights == strat.weights) {
      ++endpoints_ok;
    }
  }
  std::ostringstream os;
  os << "mAcc(K=0.4) >= mAcc(K=0) in " << improved << "/" << kBenchSeeds << "; floors hold in "
     << floors_ok << "/" << kBenchSeeds << "; endpoints bit-match in " << endpoints_ok << "/"
     << kBenchSeeds;
  return {improved >= kBenchRequired && floors_ok == kBenchSeeds && endpoints_ok == kBenchSeeds,
          os.str()};
}

// ---------------------------------------------------------------- 9
std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::ifstream in(entry.path(), std::ios::binary);
    files[entry.path().filename().string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return files;
}

bool run_pipeline(const fs::path& dir, std::uint64_t seed, std::size_t threads, std::string& error) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string() + "/";
  const std::string s = std::to_string(seed);
  const std::string t = std::to_string(threads);
  const std::vector<std::vector<std::string>> steps{
      {"generate", "--classes", "8", "--head", "150", "--ratio", "20", "--dims", "16", "--out", d + "train.emb"},
      {"generate", "--classes", "8", "--head", "150", "--ratio", "20", "--dims", "16", "--split", "test", "--out", d + "test.emb"},
      {"score", "--data", d + "train.emb", "--kind", "center-dist", "--out", d + "center.csv"},
      {"calibrate", "--data", d + "train.emb", "--policy", "cb", "--iterations", "200", "--out", d + "head.json", "--emit-data", d + "train_logits.emb"},
      {"score", "--data", d + "train_logits.emb", "--kind", "el2n", "--out", d + "el2n.csv"},
      {"allocate", "--data", d + "train.emb", "--budget", "120", "--floor", "3", "--out", d + "plan.json"},
      {"select", "--data", d + "train_logits.emb", "--method", "flrbf", "--budget", "100", "--out", d + "flrbf.json"},
      {"select", "--data", d + "train_logits.emb", "--method", "kcenter", "--budget", "60", "--out", d + "kcenter.json"},
      {"select", "--data", d + "train_logits.emb", "--method", "herding", "--budget", "60", "--out", d + "herding.json"},
      {"select", "--data", d + "train_logits.emb", "--method", "topk", "--score", "loss", "--budget", "60", "--out", d + "topk.json"},
      {"select", "--data", d + "train_logits.emb", "--method", "stratified", "--plan", d + "plan.json", "--budget", "120", "--out", d + "strat.json"},
      {"select", "--data", d + "train_logits.emb", "--method", "sgs", "--k", "0.4", "--budget", "100", "--out", d + "sgs.json"},
      {"reweigh", "--data", d + "train.emb", "--selection", d + "sgs.json", "--prior", "uniform", "--out", d + "sgs_uniform.json"},
      {"audit", "--data", d + "train_logits.emb", "--kind", "loss", "--selection", d + "topk.json", "--out", d + "audit.json"},
      {"diagnose", "--data", d + "train.emb", "--selection", d + "sgs.json", "--lab-instances", "5", "--out", d + "diagnose.json"},
      {"eval", "--head", d + "head.json", "--data", d + "test.emb", "--out", d + "eval.json"},
      {"sweep", "--data", d + "train.emb", "--test", d + "test.emb", "--budgets", "60,100", "--k", "0,0.5,1", "--out", d + "sweep.csv"},
      {"kd-check", "--out", d + "kd.json"},
  };
  for (auto args : steps) {
    args.insert(args.begin(), {"--seed", s, "--threads", t});
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) {
      error = args[4] + " exited " + std::to_string(code) + ": " + err.str();
      return false;
    }
  }
  return true;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "ltprune_acceptance_determinism";
  std::size_t compared = 0;
  std::size_t differing = 0;
  std::string error;
  for (std::uint64_t seed : {3u, 17u, 101u}) {
    std::map<std::string, std::string> reference;
    bool first = true;
    for (std::size_t threads : {1u, 4u}) {
      for (int repeat = 0; repeat < 2; ++repeat) {
        if (!run_pipeline(dir, seed, threads, error)) {
          fs::remove_all(dir);
          set_max_threads(1);
          return {false, error};
        }
        auto files = read_tree(dir);
        if (first) {
          reference = std::move(files);
          first = false;
          continue;
        }
        for (const auto& [name, bytes] : reference) {
          ++compared;
          auto it = files.find(name);
          if (it == files.end() || it->second != bytes) ++differing;
        }
      }
    }
  }
  fs::remove_all(dir);
  set_max_threads(1);
  std::ostringstream os;
  os << differing << " differing artifacts out of " << compared
     << " comparisons (3 seeds, threads {1,4}, 2 runs each)";
  return {differing == 0 && compared > 0, os.str()};
}

// ---------------------------------------------------------------- 10
Outcome dataset_statistics() {
  struct Shape {
    const char* name;
    std::size_t classes;
    std::size_t head;
    std::size_t tail;
    double cited;
  };
  const Shape shapes[] = {
      {"ScanObjectNN", 15, 1585, 298, 5.3},
      {"ModelNet40", 40, 889, 64, 13.9},
      {"ShapeNet55", 55, 6747, 44, 153.3},
  };
  bool ok = true;
  std::ostringstream os;
  for (const auto& s : shapes) {
    LongTailSpec spec;
    spec.num_classes = s.classes;
    spec.head_count = s.head;
    spec.imbalance_ratio = static_cast<double>(s.head) / static_cast<double>(s.tail);
    spec.dims = 4;
    const auto ds = generate_long_tail(spec);
    const auto counts = ds.class_counts();
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    const double ratio = static_cast<double>(*hi) / static_cast<double>(*lo);
    const auto expected = long_tail_class_sizes(spec);
    const bool match = std::equal(counts.begin(), counts.end(), expected.begin(), expected.end());
    const bool pass = match && *hi == s.head && *lo == s.tail && std::abs(ratio - s.cited) <= kRatioRounding;
    ok = ok && pass;
    os << s.name << " " << *hi << "/" << *lo << "=" << ratio << " (cited " << s.cited << ") ";
  }
  return {ok, os.str()};
}

}  // namespace

int main() {
  set_max_threads(threads_from_env(1));
  struct Criterion {
    const char* name;
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> criteria{
      {"allocation optimality", allocation_optimality},
      {"submodular quality", submodular_quality},
      {"quadrature lab bounds", quadrature_lab},
      {"soft-target weighting robustness", kd_robustness},
      {"relational gradients and invariance", rkd_gradients},
      {"floor-gain law", floor_gain_law},
      {"signal-audit direction", signal_audit_direction},
      {"seeded global selection behavior", sgs_behavior},
      {"determinism", determinism},
      {"dataset statistics", dataset_statistics},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].body();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = o.pass;
    if (o.limit_seconds > 0.0 && secs > o.limit_seconds) {
      pass = false;
      o.detail += "; runtime limit exceeded";
    }
    if (!pass) ++failures;
    std::printf("[%s] AC%zu %s: %s (%.2fs)\n", pass ? "PASS" : "FAIL", k + 1, criteria[k].name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
