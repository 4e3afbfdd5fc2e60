#include "ltprune/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "ltprune/error.hpp"
#include "numeric.hpp"
#include "ltprune/rng.hpp"

namespace ltprune {

EmbeddingDataset::EmbeddingDataset(std::size_t dims, std::size_t num_classes,
                                   std::vector<float> embeddings, std::vector<Label> labels,
                                   std::optional<std::vector<float>> teacher_logits)
    : dims_(dims),
      num_classes_(num_classes),
      embeddings_(std::move(embeddings)),
      labels_(std::move(labels)),
      teacher_logits_(std::move(teacher_logits)) {
  require(dims_ >= 1, "dataset needs d >= 1");
  require(num_classes_ >= 1, "dataset needs C >= 1");
  require(!labels_.empty(), "dataset needs n >= 1");
  require(embeddings_.size() == labels_.size() * dims_,
          "embedding block has " + std::to_string(embeddings_.size()) + " values, expected " +
              std::to_string(labels_.size() * dims_));
  for (std::size_t k = 0; k < embeddings_.size(); ++k) {
    if (!std::isfinite(embeddings_[k])) {
      fail(ErrorCode::kNonFiniteValue,
           "non-finite embedding value in row " + std::to_string(k / dims_));
    }
  }
  class_counts_.assign(num_classes_, 0);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= num_classes_) {
      fail(ErrorCode::kLabelOutOfRange, "label " + std::to_string(labels_[i]) + " at row " +
                                            std::to_string(i) + " with C=" +
                                            std::to_string(num_classes_));
    }
    ++class_counts_[labels_[i]];
  }
  if (teacher_logits_) {
    require(teacher_logits_->size() == labels_.size() * num_classes_,
            "teacher logits must be n x C");
    for (std::size_t k = 0; k < teacher_logits_->size(); ++k) {
      if (!std::isfinite((*teacher_logits_)[k])) {
        fail(ErrorCode::kNonFiniteValue,
             "non-finite teacher logit in row " + std::to_string(k / num_classes_));
      }
    }
  }
}

std::span<const float> EmbeddingDataset::logits(std::size_t i) const {
  if (!teacher_logits_) fail(ErrorCode::kMissingLogits, "dataset has no teacher logits");
  return {teacher_logits_->data() + i * num_classes_, num_classes_};
}

std::span<const float> EmbeddingDataset::logits() const {
  if (!teacher_logits_) fail(ErrorCode::kMissingLogits, "dataset has no teacher logits");
  return *teacher_logits_;
}

std::vector<std::size_t> EmbeddingDataset::class_pool(Label y) const {
  std::vector<std::size_t> pool;
  pool.reserve(y < num_classes_ ? class_counts_[y] : 0);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == y) pool.push_back(i);
  }
  return pool;
}

std::vector<std::size_t> EmbeddingDataset::all_indices() const {
  std::vector<std::size_t> idx(labels_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

EmbeddingDataset EmbeddingDataset::with_logits(std::vector<float> logits) const {
  return EmbeddingDataset(dims_, num_classes_, embeddings_, labels_, std::move(logits));
}

EmbeddingDataset EmbeddingDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<float> emb;
  std::vector<Label> labels;
  emb.reserve(indices.size() * dims_);
  labels.reserve(indices.size());
  std::optional<std::vector<float>> logits;
  if (teacher_logits_) logits.emplace();
  for (std::size_t i : indices) {
    require(i < labels_.size(), "subset index out of range");
    auto row = embedding(i);
    emb.insert(emb.end(), row.begin(), row.end());
    labels.push_back(labels_[i]);
    if (logits) {
      auto lr = this->logits(i);
      logits->insert(logits->end(), lr.begin(), lr.end());
    }
  }
  return EmbeddingDataset(dims_, num_classes_, std::move(emb), std::move(labels),
                          std::move(logits));
}

PriorVector::PriorVector(std::vector<double> probs) : probs_(std::move(probs)) {
  require(!probs_.empty(), "prior must have at least one class");
  for (double p : probs_) {
    require(std::isfinite(p) && p >= 0.0, "prior entries must be finite and >= 0");
  }
  const double sum = detail::compensated_sum(probs_);
  require(std::abs(sum - 1.0) <= 1e-12, "prior must sum to 1 (got " + std::to_string(sum) + ")");
}

PriorVector PriorVector::uniform(std::size_t num_classes) {
  require(num_classes >= 1, "uniform prior needs C >= 1");
  return PriorVector(std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)));
}

PriorVector PriorVector::from_counts(std::span<const std::size_t> counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  require(total >= 1, "prior from counts needs a positive total");
  std::vector<double> probs(counts.size());
  for (std::size_t y = 0; y < counts.size(); ++y) {
    probs[y] = static_cast<double>(counts[y]) / static_cast<double>(total);
  }
  return PriorVector(std::move(probs));
}

PriorVector empirical_prior(const EmbeddingDataset& ds) {
  return PriorVector::from_counts(ds.class_counts());
}

std::vector<std::size_t> long_tail_class_sizes(const LongTailSpec& spec) {
  require(spec.num_classes >= 2, "long-tail generator needs C >= 2");
  require(spec.imbalance_ratio >= 1.0, "imbalance ratio must be >= 1");
  require(spec.dims >= 1, "long-tail generator needs d >= 1");
  require(spec.head_count >= 1, "head count must be >= 1");
  require(spec.class_separation >= 0.0, "class separation must be >= 0");
  std::vector<std::size_t> sizes(spec.num_classes);
  const double last = static_cast<double>(spec.num_classes - 1);
  for (std::size_t y = 0; y < spec.num_classes; ++y) {
    const double exact = static_cast<double>(spec.head_count) *
                         std::pow(spec.imbalance_ratio, -static_cast<double>(y) / last);
    const double rounded = std::floor(exact + 0.5);
    sizes[y] = std::max<std::size_t>(1, static_cast<std::size_t>(rounded));
  }
  return sizes;
}

namespace {

std::vector<double> class_mean_directions(const LongTailSpec& spec) {
  const std::size_t c = spec.num_classes;
  const std::size_t d = spec.dims;
  std::mt19937_64 rng(derive_seed(spec.seed, "long_tail.means"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> means(c * d);
  for (double& v : means) v = normal(rng);
  const bool orthogonal = d >= c;
  for (std::size_t y = 0; y < c; ++y) {
    double* row = means.data() + y * d;
    if (orthogonal) {
      for (std::size_t prev = 0; prev < y; ++prev) {
        const double* p = means.data() + prev * d;
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += row[k] * p[k];
        for (std::size_t k = 0; k < d; ++k) row[k] -= dot * p[k];
      }
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < d; ++k) norm += row[k] * row[k];
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < d; ++k) row[k] /= norm;
  }
  for (double& v : means) v *= spec.class_separation;
  return means;
}

}  // namespace

EmbeddingDataset generate_long_tail(const LongTailSpec& spec, Split split) {
  const auto sizes = long_tail_class_sizes(spec);
  const auto means = class_mean_directions(spec);
  const std::size_t d = spec.dims;
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const std::string_view stream = split == Split::kTrain ? "long_tail.train" : "long_tail.test";

  std::vector<double> rows(n * d);
  std::vector<Label> labels(n);
  std::size_t offset = 0;
  for (std::size_t y = 0; y < sizes.size(); ++y) {
    std::mt19937_64 rng(derive_seed(spec.seed, stream, y));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t s = 0; s < sizes[y]; ++s, ++offset) {
      labels[offset] = static_cast<Label>(y);
      for (std::size_t k = 0; k < d; ++k) rows[offset * d + k] = means[y * d + k] + normal(rng);
    }
  }

  // Interleave classes so storage order carries no label information.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(derive_seed(spec.seed, stream, sizes.size()));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(shuffle_rng() % i);
    std::swap(order[i - 1], order[j]);
  }

  std::vector<float> emb(n * d);
  std::vector<Label> shuffled(n);
  for (std::size_t i = 0; i < n; ++i) {
    shuffled[i] = labels[order[i]];
    for (std::size_t k = 0; k < d; ++k) {
      emb[i * d + k] = static_cast<float>(rows[order[i] * d + k]);
    }
  }
  return EmbeddingDataset(d, spec.num_classes, std::move(emb), std::move(shuffled));
}

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 4 + 8 + 4 + 4 + 1;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.push_back(static_cast<std::uint8_t>((value >> (8 * b)) & 0xff));
  }
}

void put_f32(std::vector<std::uint8_t>& out, float value) {
  put_le(out, std::bit_cast<std::uint32_t>(value));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    value |= static_cast<T>(bytes[offset + b]) << (8 * b);
  }
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const EmbeddingDataset& ds) {
  std::vector<std::uint8_t> out;
  const std::size_t n = ds.size();
  out.reserve(kHeaderSize + n * ds.dims() * 4 + n * 4 +
              (ds.has_logits() ? n * ds.num_classes() * 4 : 0));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, n);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.dims()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.num_classes()));
  put_le<std::uint8_t>(out, ds.has_logits() ? 1 : 0);
  for (float v : ds.embeddings()) put_f32(out, v);
  for (Label y : ds.labels()) put_le<std::uint32_t>(out, y);
  if (ds.has_logits()) {
    for (float v : ds.logits()) put_f32(out, v);
  }
  return out;
}

EmbeddingDataset decode_dataset(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, "not an EMB1 dataset (bad magic)");
  }
  if (bytes.size() < kHeaderSize) {
    fail(ErrorCode::kTruncatedPayload, "dataset header truncated");
  }
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kVersion) {
    fail(ErrorCode::kUnsupportedVersion, "unsupported dataset version " + std::to_string(version));
  }
  const auto n = get_le<std::uint64_t>(bytes, 8);
  const auto d = get_le<std::uint32_t>(bytes, 16);
  const auto c = get_le<std::uint32_t>(bytes, 20);
  const auto has_logits = get_le<std::uint8_t>(bytes, 24);
  require(n >= 1 && d >= 1 && c >= 1, "dataset header declares an empty shape");
  require(has_logits <= 1, "has_logits flag must be 0 or 1");

  // Per-row payload, checked against overflow before multiplying by n.
  const std::uint64_t row_bytes = 4ULL * d + 4ULL + (has_logits ? 4ULL * c : 0ULL);
  const std::uint64_t available = bytes.size() - kHeaderSize;
  if (n > available / row_bytes) {
    fail(ErrorCode::kTruncatedPayload, "dataset payload truncated: expected " +
                                           std::to_string(n) + " rows");
  }
  const std::uint64_t expected = n * row_bytes;
  if (available > expected) {
    fail(ErrorCode::kTrailingBytes,
         std::to_string(available - expected) + " unexpected bytes after dataset payload");
  }

  std::size_t offset = kHeaderSize;
  std::vector<float> emb(n * d);
  for (auto& v : emb) {
    v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset));
    offset += 4;
  }
  std::vector<Label> labels(n);
  for (auto& y : labels) {
    y = get_le<std::uint32_t>(bytes, offset);
    offset += 4;
  }
  std::optional<std::vector<float>> logits;
  if (has_logits) {
    logits.emplace(n * c);
    for (auto& v : *logits) {
      v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset));
      offset += 4;
    }
  }
  return EmbeddingDataset(d, c, std::move(emb), std::move(labels), std::move(logits));
}

void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path) {
  const auto bytes = encode_dataset(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

EmbeddingDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_dataset(bytes);
}

}  // namespace ltprune
