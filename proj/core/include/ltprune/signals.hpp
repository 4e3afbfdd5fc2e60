#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ltprune/dataset.hpp"

namespace ltprune {

enum class ScoreKind { kLoss, kEntropy, kEl2n, kGradNorm, kEmbeddingCenterDist };

std::string_view to_string(ScoreKind kind);
ScoreKind parse_score_kind(std::string_view name);
bool needs_logits(ScoreKind kind);

struct ScoreVector {
  std::vector<double> values;
  ScoreKind kind = ScoreKind::kLoss;
};

// Row-wise softmax of an n x C logit block, computed in double.
std::vector<double> softmax_rows(std::span<const float> logits, std::size_t num_classes);

/// Per-sample scalar signal.
///
/// Logit-based kinds (Loss, Entropy, EL2N, GradNorm) apply softmax at unit
/// temperature to the dataset's teacher logits. GradNorm is the exact
/// Frobenius norm of the cross-entropy gradient w.r.t. a linear head (W, b)
/// acting on the embedding: ||p - onehot(y)|| * sqrt(||e||^2 + 1).
/// EmbeddingCenterDist is the distance to the sample's class mean and needs
/// no logits.
ScoreVector score_scalar(const EmbeddingDataset& ds, ScoreKind kind);

// Per-class mean embedding (C x d, double). Empty classes get a zero row.
std::vector<double> class_means(const EmbeddingDataset& ds);

// Dense symmetric RBF kernel over a list of samples.
class KernelMatrix {
 public:
  KernelMatrix(std::size_t n, double bandwidth, std::vector<double> values);

  std::size_t size() const { return n_; }
  double bandwidth() const { return bandwidth_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * n_, n_}; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t n_;
  double bandwidth_;
  std::vector<double> values_;
};

// Median pairwise distance over min(n, 2048) evenly strided samples.
// Throws when the median is zero (all sampled embeddings identical).
double median_heuristic_bandwidth(const EmbeddingDataset& ds);

// k(i,j) = exp(-||e_i - e_j||^2 / (2 sigma^2)); sigma from the median
// heuristic when omitted.
KernelMatrix rbf_kernel(const EmbeddingDataset& ds, std::optional<double> bandwidth = std::nullopt);

// Kernel restricted to `indices` (row r corresponds to indices[r]).
KernelMatrix rbf_kernel(const EmbeddingDataset& ds, std::span<const std::size_t> indices,
                        double bandwidth);

double squared_distance(std::span<const float> a, std::span<const float> b);

// CSV with header "index,score,label".
void write_scores_csv(const ScoreVector& scores, std::span<const Label> labels,
                      const std::filesystem::path& path);

}  // namespace ltprune
