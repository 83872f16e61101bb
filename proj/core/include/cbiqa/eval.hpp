#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbiqa/regression.hpp"

namespace cbiqa {

enum class MediaKind { image, video };

struct ManifestEntry {
  std::filesystem::path media_path;  // resolved against the manifest directory
  double mos = 0.0;
  std::string reference_id;
  std::string distortion_type;
  MediaKind kind = MediaKind::image;
  std::optional<double> bitrate;     // kbps
};

struct DatasetManifest {
  std::string name;
  std::vector<ManifestEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::vector<std::string> reference_ids() const;  // sorted, unique
};

// CSV with header `path,mos,reference_id,distortion_type,kind[,bitrate]`.
// Throws FormatError on missing columns, duplicate paths or bad numbers.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& csv_text, const std::filesystem::path& base_dir,
                               const std::string& name = "dataset");
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct Split {
  std::vector<std::size_t> train;  // entry indices
  std::vector<std::size_t> test;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

// Partitions reference ids (not items): round(fraction * ids) go to train,
// clamped so both sides are non-empty. Throws ParameterError with < 2 ids.
Split content_independent_split(std::span<const std::string> reference_ids, double train_fraction,
                                std::uint64_t seed);
Split content_independent_split(const DatasetManifest& manifest, double train_fraction, std::uint64_t seed);

// Pearson correlation. Throws ParameterError for length mismatch, fewer than
// two samples or a constant input.
double plcc(std::span<const double> x, std::span<const double> y);
// Spearman correlation: Pearson of mid-ranks.
double srcc(std::span<const double> x, std::span<const double> y);
std::vector<double> mid_ranks(std::span<const double> values);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
  double median = 0.0;
};
Summary summarize(std::span<const double> values);

// Features and MOS for one dataset; rows align with reference_ids and mos.
struct LabeledSet {
  std::string name;
  Eigen::MatrixXd features;  // one sample per row
  std::vector<double> mos;
  std::vector<std::string> reference_ids;

  std::size_t size() const { return mos.size(); }
};

struct ExperimentSpec {
  std::size_t splits = 10;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  SvrParams svr;
};

struct Correlation {
  double plcc = 0.0;
  double srcc = 0.0;
};

struct SplitResult {
  std::size_t index = 0;
  std::size_t train_items = 0;
  std::size_t support_vectors = 0;
  std::vector<std::string> test_ids;
  std::map<std::string, Correlation> by_test_set;
};

struct TimingStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  std::size_t samples = 0;
};

struct TimingReport {
  TimingStats descriptors;  // contrast, sampling, standardization, whitening
  TimingStats encoding;     // S = O^T Y and the max passes
  TimingStats prediction;
};

struct EvalReport {
  nlohmann::json config;
  std::vector<SplitResult> splits;
  std::vector<std::string> test_sets;  // in report order
  std::map<std::string, std::pair<Summary, Summary>> aggregates;  // plcc, srcc
  std::optional<TimingReport> timing;

  // Recomputes aggregates from the per-split values.
  void aggregate();
  nlohmann::json to_json() const;
  // Table-shaped CSV: descriptors,codevectors then plcc,plcc_std,srcc,srcc_std per test set.
  std::string table_csv(std::size_t descriptors, std::size_t codevectors) const;
};

// For each split of `train_set`: fit on the train side, evaluate on the held-out
// side (test set "<name>") and on every cross set in full.
EvalReport run_experiment(const LabeledSet& train_set, const std::vector<LabeledSet>& cross_sets,
                          const ExperimentSpec& spec);

nlohmann::json to_json(const TimingReport& timing);

}  // namespace cbiqa
