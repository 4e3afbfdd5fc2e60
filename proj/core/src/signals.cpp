#include "ltprune/signals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "ltprune/error.hpp"
#include "ltprune/parallel.hpp"

namespace ltprune {

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kLoss: return "loss";
    case ScoreKind::kEntropy: return "entropy";
    case ScoreKind::kEl2n: return "el2n";
    case ScoreKind::kGradNorm: return "gradnorm";
    case ScoreKind::kEmbeddingCenterDist: return "center-dist";
  }
  return "unknown";
}

ScoreKind parse_score_kind(std::string_view name) {
  for (auto k : {ScoreKind::kLoss, ScoreKind::kEntropy, ScoreKind::kEl2n, ScoreKind::kGradNorm,
                 ScoreKind::kEmbeddingCenterDist}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorCode::kInvalidArgument, "unknown score kind '" + std::string(name) + "'");
}

bool needs_logits(ScoreKind kind) { return kind != ScoreKind::kEmbeddingCenterDist; }

std::vector<double> softmax_rows(std::span<const float> logits, std::size_t num_classes) {
  require(num_classes >= 1 && logits.size() % num_classes == 0, "logit block must be n x C");
  const std::size_t n = logits.size() / num_classes;
  std::vector<double> probs(logits.size());
  parallel_for(n, [&](std::size_t i) {
    const float* z = logits.data() + i * num_classes;
    double* p = probs.data() + i * num_classes;
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < num_classes; ++c) zmax = std::max(zmax, double{z[c]});
    double sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      p[c] = std::exp(double{z[c]} - zmax);
      sum += p[c];
    }
    for (std::size_t c = 0; c < num_classes; ++c) p[c] /= sum;
  });
  return probs;
}

std::vector<double> class_means(const EmbeddingDataset& ds) {
  const std::size_t d = ds.dims();
  std::vector<double> means(ds.num_classes() * d, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto e = ds.embedding(i);
    double* m = means.data() + ds.label(i) * d;
    for (std::size_t k = 0; k < d; ++k) m[k] += e[k];
  }
  const auto counts = ds.class_counts();
  for (std::size_t y = 0; y < ds.num_classes(); ++y) {
    if (counts[y] == 0) continue;
    for (std::size_t k = 0; k < d; ++k) means[y * d + k] /= static_cast<double>(counts[y]);
  }
  return means;
}

ScoreVector score_scalar(const EmbeddingDataset& ds, ScoreKind kind) {
  const std::size_t n = ds.size();
  const std::size_t c = ds.num_classes();
  const std::size_t d = ds.dims();
  ScoreVector out{std::vector<double>(n, 0.0), kind};

  if (kind == ScoreKind::kEmbeddingCenterDist) {
    const auto means = class_means(ds);
    parallel_for(n, [&](std::size_t i) {
      auto e = ds.embedding(i);
      const double* m = means.data() + ds.label(i) * d;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = e[k] - m[k];
        s += diff * diff;
      }
      out.values[i] = std::sqrt(s);
    });
    return out;
  }

  if (!ds.has_logits()) {
    fail(ErrorCode::kMissingLogits,
         "score kind '" + std::string(to_string(kind)) + "' needs teacher logits");
  }
  const auto logits = ds.logits();
  const auto probs = softmax_rows(logits, c);
  parallel_for(n, [&](std::size_t i) {
    const double* p = probs.data() + i * c;
    const Label y = ds.label(i);
    switch (kind) {
      case ScoreKind::kLoss: {
        const float* z = logits.data() + i * c;
        double zmax = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < c; ++k) zmax = std::max(zmax, double{z[k]});
        double sum = 0.0;
        for (std::size_t k = 0; k < c; ++k) sum += std::exp(double{z[k]} - zmax);
        out.values[i] = std::max(0.0, zmax + std::log(sum) - double{z[y]});
        break;
      }
      case ScoreKind::kEntropy: {
        double h = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
          if (p[k] > 0.0) h -= p[k] * std::log(p[k]);
        }
        out.values[i] = std::max(0.0, h);
        break;
      }
      case ScoreKind::kEl2n:
      case ScoreKind::kGradNorm: {
        double s = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
          const double r = p[k] - (k == y ? 1.0 : 0.0);
          s += r * r;
        }
        double value = std::sqrt(s);
        if (kind == ScoreKind::kGradNorm) {
          auto e = ds.embedding(i);
          double sq = 1.0;
          for (float v : e) sq += double{v} * double{v};
          value *= std::sqrt(sq);
        }
        out.values[i] = value;
        break;
      }
      case ScoreKind::kEmbeddingCenterDist: break;
    }
  });
  return out;
}

KernelMatrix::KernelMatrix(std::size_t n, double bandwidth, std::vector<double> values)
    : n_(n), bandwidth_(bandwidth), values_(std::move(values)) {
  require(bandwidth_ > 0.0 && std::isfinite(bandwidth_), "kernel bandwidth must be positive");
  require(values_.size() == n_ * n_, "kernel matrix must be n x n");
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = double{a[k]} - double{b[k]};
    s += diff * diff;
  }
  return s;
}

double median_heuristic_bandwidth(const EmbeddingDataset& ds) {
  constexpr std::size_t kMaxSample = 2048;
  const std::size_t n = ds.size();
  require(n >= 2, "median heuristic needs at least two samples");
  const std::size_t m = std::min(n, kMaxSample);
  std::vector<std::size_t> sample(m);
  for (std::size_t k = 0; k < m; ++k) sample[k] = k * n / m;

  std::vector<double> dists(m * (m - 1) / 2);
  parallel_for(m, [&](std::size_t a) {
    // Row a owns pairs (a, b > a), stored contiguously.
    std::size_t offset = a * (2 * m - a - 1) / 2;
    for (std::size_t b = a + 1; b < m; ++b) {
      dists[offset++] = std::sqrt(squared_distance(ds.embedding(sample[a]), ds.embedding(sample[b])));
    }
  });
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  if (!(median > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "median pairwise distance is zero; pass a bandwidth");
  }
  return median;
}

KernelMatrix rbf_kernel(const EmbeddingDataset& ds, std::span<const std::size_t> indices,
                        double bandwidth) {
  require(bandwidth > 0.0 && std::isfinite(bandwidth), "kernel bandwidth must be positive");
  const std::size_t n = indices.size();
  const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
  std::vector<double> values(n * n);
  parallel_for(n, [&](std::size_t i) {
    values[i * n + i] = 1.0;
    auto ei = ds.embedding(indices[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double k = std::exp(-squared_distance(ei, ds.embedding(indices[j])) * scale);
      values[i * n + j] = k;
      values[j * n + i] = k;
    }
  });
  return KernelMatrix(n, bandwidth, std::move(values));
}

KernelMatrix rbf_kernel(const EmbeddingDataset& ds, std::optional<double> bandwidth) {
  if (bandwidth) require(*bandwidth > 0.0, "kernel bandwidth must be positive");
  const double sigma = bandwidth ? *bandwidth : median_heuristic_bandwidth(ds);
  const auto all = ds.all_indices();
  return rbf_kernel(ds, all, sigma);
}

void write_scores_csv(const ScoreVector& scores, std::span<const Label> labels,
                      const std::filesystem::path& path) {
  require(scores.values.size() == labels.size(), "scores and labels differ in length");
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "index,score,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << ',' << scores.values[i] << ',' << labels[i] << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace ltprune
