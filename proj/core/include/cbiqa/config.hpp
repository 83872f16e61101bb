#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbiqa/codebook.hpp"
#include "cbiqa/regression.hpp"
#include "cbiqa/synthgen.hpp"
#include "cbiqa/video.hpp"

namespace cbiqa {

enum class CodebookSource { synthetic, dataset, file };
enum class ChannelMode { luma, luma_chroma };

// Experiment knobs. Defaults: 8x8 patches, 2048 codevectors, 2048
// descriptors per image, ZCA, RBF nu-SVR with C = 1, nu = 0.5.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t splits = 10;
  double train_fraction = 0.8;

  struct CodebookSection {
    CodebookSource source = CodebookSource::synthetic;
    std::filesystem::path path;  // image directory or codebook file
    std::size_t patch_size = 8;
    std::size_t codevectors = 2048;
    std::size_t patches_per_image = 512;
    WhiteningKind whitening = WhiteningKind::zca;
    std::size_t synthetic_images = 100;
    SynthParams synth;
  } codebook;

  struct FeatureSection {
    std::size_t descriptors = 2048;
    ChannelMode channels = ChannelMode::luma;
  } features;

  SvrParams regressor;

  struct PoolingSection {
    Pooling mode = Pooling::none;
    SamplingRate rate = SamplingRate::fps(1.0);
    std::size_t frame_step = 1;
    double segment_seconds = 1.0;
  } pooling;

  struct DatasetSection {
    std::string train = "desk";  // "desk" or a manifest path
    std::vector<std::string> cross;
    std::size_t desk_references = 40;
  } dataset;

  nlohmann::json to_json() const;
};

// Strict TOML parsing: unknown keys and range violations throw ParameterError
// naming the key path (e.g. "codebook.codevectors"). Relative paths resolve against
// `base_dir`; referenced paths must exist.
ExperimentConfig parse_config(const std::string& toml_text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace cbiqa
