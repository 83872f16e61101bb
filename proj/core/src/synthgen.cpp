#include "cbiqa/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cbiqa/error.hpp"

namespace cbiqa {

namespace {

// E[x^k] of the power law truncated to [lo, hi].
double power_law_moment(double gamma, double lo, double hi, double k) {
  if (hi <= lo) return std::pow(lo, k);
  auto integral = [&](double exponent) {
    // integral of x^exponent over [lo, hi]
    if (std::abs(exponent + 1.0) < 1e-12) return std::log(hi / lo);
    return (std::pow(hi, exponent + 1.0) - std::pow(lo, exponent + 1.0)) / (exponent + 1.0);
  };
  return integral(k - gamma) / integral(-gamma);
}

double linear_size_moment(const SynthParams& p, double k) {
  if (p.source == SizeSource::delta) return std::pow(p.size_min, k);
  return power_law_moment(p.gamma, p.size_min, p.size_max, k);
}

double draw_size(const SynthParams& p, Rng& rng) {
  if (p.source == SizeSource::delta) return p.size_min;
  return sample_patch_size(p.gamma, p.size_min, p.size_max, rng);
}

bool covers(const Placement& obj, double px, double py) {
  const double dx = px - obj.center_x;
  const double dy = py - obj.center_y;
  switch (obj.primitive) {
    case Primitive::square: {
      const double h = obj.size / 2.0;
      return dx >= -h && dx < h && dy >= -h && dy < h;
    }
    case Primitive::circle: {
      const double r = obj.size / 2.0;
      return dx * dx + dy * dy <= r * r;
    }
    case Primitive::ellipse: {
      const double c = std::cos(obj.angle);
      const double s = std::sin(obj.angle);
      const double u = (dx * c + dy * s) / (obj.size / 2.0);
      const double v = (-dx * s + dy * c) / (obj.size_minor / 2.0);
      return u * u + v * v <= 1.0;
    }
  }
  return false;
}

}  // namespace

void SynthParams::validate() const {
  if (width == 0 || height == 0) throw ParameterError("synth: canvas must be non-empty");
  if (!(gamma > 1.0)) throw ParameterError("synth: gamma must be > 1, got " + std::to_string(gamma));
  if (!(size_min >= 1.0)) throw ParameterError("synth: size_min must be >= 1");
  const double canvas = static_cast<double>(std::min(width, height));
  if (source == SizeSource::power_law) {
    if (!(size_max >= size_min)) throw ParameterError("synth: size_max must be >= size_min");
    if (size_max > canvas) throw ParameterError("synth: size_max exceeds the canvas");
  } else if (size_min > canvas) {
    throw ParameterError("synth: delta size exceeds the canvas");
  }
  if (primitives.empty()) throw ParameterError("synth: no primitives enabled");
}

double power_law_quantile(double gamma, double size_min, double size_max, double u) {
  if (!(gamma > 1.0)) throw ParameterError("power law: gamma must be > 1");
  if (!(size_min >= 1.0) || !(size_max >= size_min)) throw ParameterError("power law: invalid bounds");
  if (size_max == size_min) return size_min;
  const double e = 1.0 - gamma;
  const double lo = std::pow(size_min, e);
  const double hi = std::pow(size_max, e);
  const double x = std::pow(lo - u * (lo - hi), 1.0 / e);
  return std::clamp(x, size_min, size_max);
}

double sample_patch_size(double gamma, double size_min, double size_max, Rng& rng) {
  const double x = power_law_quantile(gamma, size_min, size_max, rng.uniform01());
  return std::clamp(std::round(x), std::round(size_min), std::round(size_max));
}

double expected_cover_count(const SynthParams& params) {
  params.validate();
  const double second = linear_size_moment(params, 2.0);
  const double first = linear_size_moment(params, 1.0);
  double area = 0.0;
  for (Primitive prim : params.primitives) {
    switch (prim) {
      case Primitive::square: area += second; break;
      case Primitive::circle: area += std::numbers::pi / 4.0 * second; break;
      case Primitive::ellipse: area += std::numbers::pi / 4.0 * first * first; break;
    }
  }
  area /= static_cast<double>(params.primitives.size());
  return static_cast<double>(params.width * params.height) / area;
}

SynthImage generate_image(const SynthParams& params) {
  params.validate();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SynthImage out{ImagePlane(params.width, params.height, nan), {}};
  const auto min_placements = static_cast<std::size_t>(std::ceil(3.0 * expected_cover_count(params)));
  std::size_t uncovered = params.width * params.height;

  Rng rng(params.seed);
  const double w = static_cast<double>(params.width);
  const double h = static_cast<double>(params.height);
  while (uncovered > 0 || out.placements.size() < min_placements) {
    Placement obj{};
    obj.primitive = params.primitives[rng.index(params.primitives.size())];
    obj.center_x = rng.uniform(0.0, w);
    obj.center_y = rng.uniform(0.0, h);
    obj.size = draw_size(params, rng);
    obj.size_minor = obj.size;
    obj.angle = 0.0;
    if (obj.primitive == Primitive::ellipse) {
      obj.size_minor = draw_size(params, rng);
      obj.angle = rng.uniform(0.0, std::numbers::pi);
    }
    obj.color = params.color_model == ColorModel::binary ? 255.0 * static_cast<double>(rng.index(2))
                                                         : static_cast<double>(rng.index(256));

    const double reach = std::max(obj.size, obj.size_minor) / 2.0 + 1.0;
    const auto x0 = static_cast<std::size_t>(std::max(0.0, std::floor(obj.center_x - reach)));
    const auto x1 = static_cast<std::size_t>(std::min(w - 1.0, std::ceil(obj.center_x + reach)));
    const auto y0 = static_cast<std::size_t>(std::max(0.0, std::floor(obj.center_y - reach)));
    const auto y1 = static_cast<std::size_t>(std::min(h - 1.0, std::ceil(obj.center_y + reach)));
    for (std::size_t y = y0; y <= y1; ++y) {
      for (std::size_t x = x0; x <= x1; ++x) {
        if (!covers(obj, static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) continue;
        double& px = out.plane.at(x, y);
        if (std::isnan(px)) --uncovered;
        px = obj.color;
      }
    }
    out.placements.push_back(obj);
  }
  return out;
}

}  // namespace cbiqa
