#include "ltprune/selection.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <unordered_set>

#include "ltprune/error.hpp"
#include "numeric.hpp"

namespace ltprune {

std::string_view to_string(SelectionMethod method) {
  switch (method) {
    case SelectionMethod::kScoreTopK: return "topk";
    case SelectionMethod::kScoreBottomK: return "bottomk";
    case SelectionMethod::kHerding: return "herding";
    case SelectionMethod::kKCenter: return "kcenter";
    case SelectionMethod::kFacilityLocationRbf: return "flrbf";
    case SelectionMethod::kStratified: return "stratified";
    case SelectionMethod::kSgs: return "sgs";
  }
  return "unknown";
}

SelectionMethod parse_selection_method(std::string_view name) {
  for (auto m : {SelectionMethod::kScoreTopK, SelectionMethod::kScoreBottomK,
                 SelectionMethod::kHerding, SelectionMethod::kKCenter,
                 SelectionMethod::kFacilityLocationRbf, SelectionMethod::kStratified,
                 SelectionMethod::kSgs}) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCode::kInvalidArgument, "unknown selection method '" + std::string(name) + "'");
}

std::vector<std::size_t> count_per_class(std::span<const std::size_t> indices,
                                         std::span<const Label> labels, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i : indices) {
    require(i < labels.size(), "selected index " + std::to_string(i) + " out of range");
    require(labels[i] < num_classes, "label out of range in selection");
    ++counts[labels[i]];
  }
  return counts;
}

Selection make_uniform_selection(std::vector<std::size_t> indices, std::span<const Label> labels,
                                 std::size_t num_classes, SelectionMethod method,
                                 std::uint64_t seed) {
  Selection sel;
  sel.per_class_counts = count_per_class(indices, labels, num_classes);
  if (!indices.empty()) {
    sel.weights.assign(indices.size(), 1.0 / static_cast<double>(indices.size()));
  }
  sel.indices = std::move(indices);
  sel.method = method;
  sel.seed_used = seed;
  return sel;
}

void validate_selection(const Selection& sel, const EmbeddingDataset& ds) {
  require(sel.weights.size() == sel.indices.size(), "selection needs one weight per index");
  std::unordered_set<std::size_t> seen;
  for (std::size_t i : sel.indices) {
    require(i < ds.size(), "selection index " + std::to_string(i) + " out of range");
    require(seen.insert(i).second, "duplicate index " + std::to_string(i) + " in selection");
  }
  for (double w : sel.weights) {
    require(std::isfinite(w) && w >= 0.0, "selection weights must be finite and >= 0");
  }
  const double total = detail::compensated_sum(sel.weights);
  if (!sel.indices.empty()) {
    require(std::abs(total - 1.0) <= 1e-12, "selection weights must sum to 1");
  }
  require(sel.per_class_counts == count_per_class(sel.indices, ds.labels(), ds.num_classes()),
          "per_class_counts inconsistent with labels");
}

nlohmann::json selection_to_json(const Selection& sel, const ManifestInfo& info) {
  nlohmann::json j;
  j["indices"] = sel.indices;
  j["weights"] = sel.weights;
  j["per_class_counts"] = sel.per_class_counts;
  j["method"] = std::string(to_string(sel.method));
  j["budget"] = info.budget;
  j["k_ratio"] = info.k_ratio;
  j["seed"] = sel.seed_used;
  j["config"] = info.config;
  return j;
}

Selection selection_from_json(const nlohmann::json& j, ManifestInfo* info) {
  try {
    Selection sel;
    sel.indices = j.at("indices").get<std::vector<std::size_t>>();
    sel.weights = j.at("weights").get<std::vector<double>>();
    sel.per_class_counts = j.at("per_class_counts").get<std::vector<std::size_t>>();
    sel.method = parse_selection_method(j.at("method").get<std::string>());
    sel.seed_used = j.at("seed").get<std::uint64_t>();
    require(sel.weights.size() == sel.indices.size(), "manifest needs one weight per index");
    if (info != nullptr) {
      info->budget = j.at("budget").get<std::uint64_t>();
      info->k_ratio = j.at("k_ratio").get<double>();
      info->config = j.value("config", nlohmann::json::object());
    }
    return sel;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("malformed selection manifest: ") + e.what());
  }
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
}

void save_selection(const Selection& sel, const ManifestInfo& info,
                    const std::filesystem::path& path) {
  write_json_file(selection_to_json(sel, info), path);
}

Selection load_selection(const std::filesystem::path& path, ManifestInfo* info) {
  return selection_from_json(read_json_file(path), info);
}

}  // namespace ltprune
