#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ltprune/dataset.hpp"

namespace ltprune {

enum class SelectionMethod {
  kScoreTopK,
  kScoreBottomK,
  kHerding,
  kKCenter,
  kFacilityLocationRbf,
  kStratified,
  kSgs,
};

std::string_view to_string(SelectionMethod method);
SelectionMethod parse_selection_method(std::string_view name);

// Chosen sample ids in pick order, one weight per id, and per-class counts.
struct Selection {
  std::vector<std::size_t> indices;
  std::vector<double> weights;
  std::vector<std::size_t> per_class_counts;
  SelectionMethod method = SelectionMethod::kFacilityLocationRbf;
  std::uint64_t seed_used = 0;

  std::size_t size() const { return indices.size(); }
};

// Builds a Selection with uniform 1/|S| weights and counts taken from labels.
Selection make_uniform_selection(std::vector<std::size_t> indices, std::span<const Label> labels,
                                 std::size_t num_classes, SelectionMethod method,
                                 std::uint64_t seed);

std::vector<std::size_t> count_per_class(std::span<const std::size_t> indices,
                                         std::span<const Label> labels, std::size_t num_classes);

// Checks the Selection invariants against a dataset; throws kInvalidArgument.
void validate_selection(const Selection& sel, const EmbeddingDataset& ds);

struct ManifestInfo {
  std::uint64_t budget = 0;
  double k_ratio = 0.0;
  nlohmann::json config = nlohmann::json::object();
};

nlohmann::json selection_to_json(const Selection& sel, const ManifestInfo& info);
Selection selection_from_json(const nlohmann::json& j, ManifestInfo* info = nullptr);

void save_selection(const Selection& sel, const ManifestInfo& info,
                    const std::filesystem::path& path);
Selection load_selection(const std::filesystem::path& path, ManifestInfo* info = nullptr);

// Writes `j` pretty-printed with a trailing newline.
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ltprune
