#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cbiqa/image.hpp"
#include "cbiqa/rng.hpp"

namespace cbiqa {

enum class Primitive { square, circle, ellipse };
enum class ColorModel { binary, greyscale };
enum class SizeSource { power_law, delta };

// Dead-leaves generator parameters. For SizeSource::delta every object has
// linear size `size_min` (size_max is ignored).
struct SynthParams {
  std::size_t width = 256;
  std::size_t height = 256;
  double gamma = 3.3;
  double size_min = 4.0;
  double size_max = 256.0;
  std::vector<Primitive> primitives{Primitive::square, Primitive::circle};
  ColorModel color_model = ColorModel::binary;
  SizeSource source = SizeSource::power_law;
  std::uint64_t seed = 0;

  // Throws ParameterError when gamma <= 1, bounds are inverted or exceed the
  // canvas, or no primitive is enabled.
  void validate() const;
};

// Inverse CDF of the power law p(x) ~ x^-gamma truncated to [size_min,
// size_max], without rounding. u = 0 maps to size_min, u -> 1 to size_max.
double power_law_quantile(double gamma, double size_min, double size_max, double u);

// One sample of the truncated power law, rounded to the nearest pixel.
double sample_patch_size(double gamma, double size_min, double size_max, Rng& rng);

// Placed object. `size` is the side of a square or the diameter of a circle;
// ellipses carry both axis lengths and an orientation in [0, pi).
struct Placement {
  Primitive primitive;
  double center_x;
  double center_y;
  double size;
  double size_minor;
  double angle;
  double color;
};

struct SynthImage {
  ImagePlane plane;
  std::vector<Placement> placements;
};

// Places opaque primitives until every pixel was covered at least once and at
// least three times the expected covering number of objects were placed.
SynthImage generate_image(const SynthParams& params);

// Expected number of placements whose total area equals the canvas area.
double expected_cover_count(const SynthParams& params);

}  // namespace cbiqa
