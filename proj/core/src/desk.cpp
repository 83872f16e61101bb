#include "cbiqa/desk.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "cbiqa/error.hpp"
#include "cbiqa/image_io.hpp"
#include "cbiqa/parallel.hpp"
#include "cbiqa/rng.hpp"
#include "cbiqa/synthgen.hpp"

namespace cbiqa {

namespace {

constexpr std::array<Distortion, 4> kDistortions = {Distortion::blur, Distortion::noise, Distortion::quantization,
                                                    Distortion::resample};

// Strength at levels 1, 2, 3; fractional levels interpolate geometrically.
double strength(Distortion d, double level) {
  static const std::array<double, 3> blur = {1.0, 2.0, 4.0};
  static const std::array<double, 3> noise = {8.0, 24.0, 48.0};
  static const std::array<double, 3> grey_levels = {16.0, 6.0, 3.0};
  static const std::array<double, 3> factor = {2.0, 3.0, 5.0};
  const std::array<double, 3>* table = &blur;
  switch (d) {
    case Distortion::blur: table = &blur; break;
    case Distortion::noise: table = &noise; break;
    case Distortion::quantization: table = &grey_levels; break;
    case Distortion::resample: table = &factor; break;
  }
  const double l = std::clamp(level, 1.0, 3.0) - 1.0;
  const auto lo = static_cast<std::size_t>(std::min(std::floor(l), 1.0));
  const double frac = l - static_cast<double>(lo);
  return std::exp((1.0 - frac) * std::log((*table)[lo]) + frac * std::log((*table)[lo + 1]));
}

double bilinear(const ImagePlane& p, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(p.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(p.height - 1));
  const auto x0 = static_cast<std::size_t>(x);
  const auto y0 = static_cast<std::size_t>(y);
  const std::size_t x1 = std::min(x0 + 1, p.width - 1);
  const std::size_t y1 = std::min(y0 + 1, p.height - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  return (1 - fy) * ((1 - fx) * p.at(x0, y0) + fx * p.at(x1, y0)) + fy * ((1 - fx) * p.at(x0, y1) + fx * p.at(x1, y1));
}

ImagePlane resize_bilinear(const ImagePlane& src, std::size_t w, std::size_t h) {
  ImagePlane out(w, h);
  const double sx = static_cast<double>(src.width) / static_cast<double>(w);
  const double sy = static_cast<double>(src.height) / static_cast<double>(h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      out.at(x, y) = bilinear(src, (static_cast<double>(x) + 0.5) * sx - 0.5, (static_cast<double>(y) + 0.5) * sy - 0.5);
  return out;
}

// Box-filtered downsampling by a possibly fractional factor, then bilinear upsampling.
ImagePlane resample(const ImagePlane& src, double factor) {
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(src.width) / factor)));
  const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(src.height) / factor)));
  const ImagePlane small = resize_bilinear(gaussian_blur(src, 0.5 * factor), w, h);
  return resize_bilinear(small, src.width, src.height);
}

// Flat dead-leaves objects hide quantization entirely; a smooth illumination
// field gives every object a gentle ramp so banding becomes visible.
void shade(ImagePlane& plane, std::uint64_t seed) {
  constexpr double kTwoPi = 6.283185307179586;
  Rng rng(seed);
  struct Wave {
    double fx, fy, phase;
  };
  std::array<Wave, 3> waves{};
  for (Wave& w : waves) {
    const double angle = rng.uniform(0.0, kTwoPi);
    const double period = rng.uniform(0.5, 1.5) * static_cast<double>(std::max(plane.width, plane.height));
    w = {std::cos(angle) / period, std::sin(angle) / period, rng.uniform(0.0, kTwoPi)};
  }
  for (std::size_t y = 0; y < plane.height; ++y)
    for (std::size_t x = 0; x < plane.width; ++x) {
      double illum = 0.0;
      for (const Wave& w : waves) illum += std::sin(kTwoPi * (w.fx * x + w.fy * y) + w.phase);
      illum = 0.5 + illum / 6.0;  // [0, 1]
      double& v = plane.at(x, y);
      v = 0.6 * v + 0.4 * 255.0 * illum;
    }
}

}  // namespace

const char* distortion_name(Distortion distortion) {
  switch (distortion) {
    case Distortion::blur: return "blur";
    case Distortion::noise: return "noise";
    case Distortion::quantization: return "quantization";
    case Distortion::resample: return "resample";
  }
  return "?";
}

ImagePlane gaussian_blur(const ImagePlane& plane, double sigma) {
  if (!(sigma > 0.0)) return plane;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) total += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& k : kernel) k /= total;
  const auto w = static_cast<long>(plane.width);
  const auto h = static_cast<long>(plane.height);
  ImagePlane tmp(plane.width, plane.height), out(plane.width, plane.height);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * plane.samples[y * w + std::clamp(x + i, 0L, w - 1)];
      tmp.samples[y * w + x] = acc;
    }
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * tmp.samples[std::clamp(y + i, 0L, h - 1) * w + x];
      out.samples[y * w + x] = acc;
    }
  return out;
}

ImagePlane apply_distortion(const ImagePlane& reference, Distortion distortion, double level, std::uint64_t seed) {
  if (!(level >= 1.0 && level <= static_cast<double>(kDistortionLevels)))
    throw ParameterError("distortion level must be in [1, 3]");
  const double s = strength(distortion, level);
  switch (distortion) {
    case Distortion::blur:
      return gaussian_blur(reference, s);
    case Distortion::noise: {
      ImagePlane out = reference;
      Rng rng(seed);
      for (double& v : out.samples) v = std::clamp(v + s * rng.normal(), 0.0, 255.0);
      return out;
    }
    case Distortion::quantization: {
      ImagePlane out = reference;
      const double steps = s - 1.0;
      for (double& v : out.samples) v = std::round(std::clamp(v, 0.0, 255.0) / 255.0 * steps) * 255.0 / steps;
      return out;
    }
    case Distortion::resample:
      return resample(reference, s);
  }
  return reference;
}

double proxy_mos(double level) { return 100.0 * (1.0 - level / static_cast<double>(kDistortionLevels + 1)); }

std::vector<ImagePlane> desk_references(const DeskParams& params) {
  std::vector<ImagePlane> refs(params.references);
  parallel_for(params.references, [&](std::size_t i) {
    SynthParams p;
    p.width = params.width;
    p.height = params.height;
    p.gamma = 2.5 + (params.references > 1 ? static_cast<double>(i) / static_cast<double>(params.references - 1) : 0.5);
    p.size_min = 2.0;
    p.size_max = static_cast<double>(std::min(params.width, params.height)) / 2.0;
    p.primitives = {Primitive::square, Primitive::circle, Primitive::ellipse};
    p.color_model = ColorModel::greyscale;
    p.seed = derive_seed(params.seed, "reference", i);
    refs[i] = generate_image(p).plane;
    shade(refs[i], derive_seed(params.seed, "shading", i));
  });
  return refs;
}

std::vector<DeskItem> make_desk_benchmark(const DeskParams& params) {
  const std::vector<ImagePlane> refs = desk_references(params);
  std::vector<DeskItem> items(refs.size() * kDistortions.size() * kDistortionLevels);
  parallel_for(items.size(), [&](std::size_t idx) {
    const std::size_t r = idx / (kDistortions.size() * kDistortionLevels);
    const Distortion d = kDistortions[(idx / kDistortionLevels) % kDistortions.size()];
    const std::size_t level = idx % kDistortionLevels + 1;
    char name[64];
    std::snprintf(name, sizeof name, "ref%03zu_%s_%zu", r, distortion_name(d), level);
    DeskItem& item = items[idx];
    item.name = name;
    item.reference_id = "ref" + std::to_string(r);
    item.distortion = d;
    item.level = level;
    item.mos = proxy_mos(static_cast<double>(level));
    item.image = apply_distortion(refs[r], d, static_cast<double>(level), derive_seed(params.seed, "noise", idx));
    // Match what an 8-bit PNG round trip would give.
    for (double& v : item.image.samples) v = std::round(std::clamp(v, 0.0, 255.0));
  });
  return items;
}

std::filesystem::path write_desk_benchmark(const std::filesystem::path& dir, const DeskParams& params) {
  std::filesystem::create_directories(dir);
  DatasetManifest manifest;
  manifest.name = "desk";
  for (const auto& item : make_desk_benchmark(params)) {
    const auto path = dir / (item.name + ".png");
    write_image(path, item.image);
    manifest.entries.push_back({path, item.mos, item.reference_id, distortion_name(item.distortion), MediaKind::image, {}});
  }
  const auto manifest_path = dir / "manifest.csv";
  save_manifest(manifest_path, manifest);
  return manifest_path;
}

std::vector<DeskVideo> make_desk_videos(const DeskVideoParams& params) {
  constexpr std::size_t kPan = 24;
  DeskParams ref_params{params.references, params.width + kPan, params.height + kPan, params.seed};
  const std::vector<ImagePlane> refs = desk_references(ref_params);
  const auto frames = static_cast<std::size_t>(std::lround(params.fps * params.seconds));
  std::vector<DeskVideo> videos(params.references);
  parallel_for(params.references, [&](std::size_t v) {
    Rng rng(derive_seed(params.seed, "video", v));
    DeskVideo& video = videos[v];
    video.reference_id = "ref" + std::to_string(v);
    video.distortion = kDistortions[v % kDistortions.size()];
    video.fps = params.fps;
    const double base = rng.uniform(1.3, 2.7);
    const double phase = rng.uniform(0.0, 2.0 * 3.141592653589793);
    double level_sum = 0.0;
    video.frames.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f) {
      const double t = static_cast<double>(f) / params.fps;
      const double level = std::clamp(base + 0.3 * std::sin(2.0 * 3.141592653589793 * t / params.seconds + phase), 1.0, 3.0);
      level_sum += level;
      // Slow diagonal pan across the reference.
      const double progress = static_cast<double>(f) / static_cast<double>(std::max<std::size_t>(1, frames - 1));
      const auto off = static_cast<std::size_t>(std::lround(progress * static_cast<double>(kPan)));
      ImagePlane crop(params.width, params.height);
      for (std::size_t y = 0; y < params.height; ++y)
        for (std::size_t x = 0; x < params.width; ++x) crop.at(x, y) = refs[v].at(x + off, y + off / 2);
      video.frames.push_back(apply_distortion(crop, video.distortion, level, derive_seed(params.seed, "frame-noise", v * frames + f)));
    }
    video.mos = proxy_mos(level_sum / static_cast<double>(frames));
  });
  return videos;
}

}  // namespace cbiqa
