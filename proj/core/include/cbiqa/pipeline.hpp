#pragma once

#include <functional>
#include <string>

#include "cbiqa/codebook.hpp"
#include "cbiqa/config.hpp"
#include "cbiqa/desk.hpp"
#include "cbiqa/eval.hpp"

namespace cbiqa {

// Codebook as configured: synthetic dead-leaves images, an image directory,
// or an existing file.
Codebook make_codebook(const ExperimentConfig& config);

EncodeOptions encode_options(const ExperimentConfig& config, std::uint64_t item_seed);

// Features for every manifest entry (images or videos).
LabeledSet compute_features(const Codebook& book, const DatasetManifest& manifest,
                            const ExperimentConfig& config);

// Features for the in-memory desk benchmark.
LabeledSet compute_features(const Codebook& book, const std::vector<DeskItem>& items,
                            const ExperimentConfig& config, const std::string& name = "desk");

// Codebook, features, splits, report. The report's config echo is config.to_json().
// With `with_timing`, a model fit on the whole training set is timed on up to
// five of its images (wall-clock numbers make the report non-reproducible).
EvalReport run_configured_experiment(const ExperimentConfig& config, bool with_timing = false);

}  // namespace cbiqa
