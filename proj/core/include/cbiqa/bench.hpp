#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cbiqa/codebook.hpp"
#include "cbiqa/eval.hpp"
#include "cbiqa/image.hpp"
#include "cbiqa/regression.hpp"

namespace cbiqa {

struct BenchOptions {
  std::size_t descriptors = 2048;
  std::size_t repetitions = 10;
  std::size_t warmup = 3;
  std::uint64_t seed = 0;
};

// Per-image wall-clock timings of the inference stages, averaged over images
// and repetitions after `warmup` untimed passes.
TimingReport bench_timing(const Codebook& book, const std::vector<RgbImage>& images,
                          const SvrModel& model, const BenchOptions& options);

// Codebook with K random unit codevectors, identity whitening (timing only).
Codebook random_codebook(std::size_t patch_size, std::size_t codevectors, std::uint64_t seed);

// RBF model with `support_vectors` random vectors over `features` dims (timing only).
SvrModel random_model(std::size_t features, std::size_t support_vectors, std::uint64_t seed);

}  // namespace cbiqa
