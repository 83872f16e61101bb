#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cbiqa/eval.hpp"
#include "cbiqa/image.hpp"

namespace cbiqa {

// Synthetic stand-in for a MOS-annotated image quality dataset: dead-leaves
// references, each distorted by four distortion types at three levels.
enum class Distortion { blur, noise, quantization, resample };

const char* distortion_name(Distortion distortion);
constexpr std::size_t kDistortionLevels = 3;

// level in [1, kDistortionLevels]. Blur sigma {1, 2, 4}; noise sigma
// {8, 24, 48}; quantization to {16, 6, 3} grey levels; down/up-sampling
// by {2, 3, 5}. Fractional levels interpolate geometrically. Noise draws
// from `seed`.
ImagePlane apply_distortion(const ImagePlane& reference, Distortion distortion, double level,
                            std::uint64_t seed);

// Proxy MOS = 100 (1 - level / (kDistortionLevels + 1)).
double proxy_mos(double level);

ImagePlane gaussian_blur(const ImagePlane& plane, double sigma);

struct DeskParams {
  std::size_t references = 40;
  std::size_t width = 128;
  std::size_t height = 128;
  std::uint64_t seed = 2024;
};

struct DeskItem {
  std::string name;
  ImagePlane image;
  double mos = 0.0;
  std::string reference_id;
  Distortion distortion = Distortion::blur;
  std::size_t level = 1;
};

// Greyscale dead-leaves references with gamma spread over [2.5, 3.5], under
// a smooth illumination field.
std::vector<ImagePlane> desk_references(const DeskParams& params);
std::vector<DeskItem> make_desk_benchmark(const DeskParams& params);

// Writes PNGs plus manifest.csv into `dir`; returns the manifest path.
std::filesystem::path write_desk_benchmark(const std::filesystem::path& dir, const DeskParams& params);

struct DeskVideoParams {
  std::size_t references = 40;
  std::size_t width = 128;
  std::size_t height = 128;
  double fps = 30.0;
  double seconds = 10.0;
  std::uint64_t seed = 4048;
};

// A clip panning over a larger reference with a distortion level that drifts
// over time; MOS follows the clip's mean level.
struct DeskVideo {
  std::string reference_id;
  Distortion distortion = Distortion::blur;
  double mos = 0.0;
  double fps = 30.0;
  std::vector<ImagePlane> frames;
};

std::vector<DeskVideo> make_desk_videos(const DeskVideoParams& params);

}  // namespace cbiqa
