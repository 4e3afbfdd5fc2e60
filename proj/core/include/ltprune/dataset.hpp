#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace ltprune {

using Label = std::uint32_t;

// Per-sample embeddings (row-major n x d, f32 to match the on-disk format
// bit for bit), class labels and optional teacher logits (n x C).
// Invariants are checked at construction; instances are immutable.
class EmbeddingDataset {
 public:
  EmbeddingDataset(std::size_t dims, std::size_t num_classes, std::vector<float> embeddings,
                   std::vector<Label> labels,
                   std::optional<std::vector<float>> teacher_logits = std::nullopt);

  std::size_t size() const { return labels_.size(); }
  std::size_t dims() const { return dims_; }
  std::size_t num_classes() const { return num_classes_; }

  std::span<const float> embedding(std::size_t i) const {
    return {embeddings_.data() + i * dims_, dims_};
  }
  std::span<const float> embeddings() const { return embeddings_; }
  std::span<const Label> labels() const { return labels_; }
  Label label(std::size_t i) const { return labels_[i]; }
  std::span<const std::size_t> class_counts() const { return class_counts_; }

  bool has_logits() const { return teacher_logits_.has_value(); }
  // Throws kMissingLogits when absent.
  std::span<const float> logits(std::size_t i) const;
  std::span<const float> logits() const;

  // Indices of every sample with label y, ascending.
  std::vector<std::size_t> class_pool(Label y) const;
  std::vector<std::size_t> all_indices() const;

  EmbeddingDataset with_logits(std::vector<float> logits) const;
  EmbeddingDataset subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t dims_;
  std::size_t num_classes_;
  std::vector<float> embeddings_;
  std::vector<Label> labels_;
  std::optional<std::vector<float>> teacher_logits_;
  std::vector<std::size_t> class_counts_;
};

// Probability vector over classes; sums to 1 within 1e-12.
class PriorVector {
 public:
  explicit PriorVector(std::vector<double> probs);

  static PriorVector uniform(std::size_t num_classes);
  static PriorVector from_counts(std::span<const std::size_t> counts);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t y) const { return probs_[y]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

struct LongTailSpec {
  std::size_t num_classes = 10;
  std::size_t head_count = 500;
  double imbalance_ratio = 50.0;
  std::size_t dims = 32;
  double class_separation = 3.0;
  std::uint64_t seed = 0;
};

enum class Split { kTrain, kTest };

// n_y = round_half_up(n_max * R^{-y/(C-1)}), clamped to >= 1.
std::vector<std::size_t> long_tail_class_sizes(const LongTailSpec& spec);

// Gaussian class clusters with unit isotropic covariance. Class means have
// norm class_separation along random orthonormal directions (random unit
// directions when dims < num_classes). Both splits share the class means;
// they differ only in the sample noise stream.
EmbeddingDataset generate_long_tail(const LongTailSpec& spec, Split split = Split::kTrain);

PriorVector empirical_prior(const EmbeddingDataset& ds);

// Binary container: "EMB1" | u32 version | u64 n | u32 d | u32 C | u8 has_logits
// | n*d f32 | n u32 labels | [n*C f32], all little-endian.
std::vector<std::uint8_t> encode_dataset(const EmbeddingDataset& ds);
EmbeddingDataset decode_dataset(std::span<const std::uint8_t> bytes);

void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path);
EmbeddingDataset load_dataset(const std::filesystem::path& path);

}  // namespace ltprune
