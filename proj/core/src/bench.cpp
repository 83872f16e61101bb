#include "cbiqa/bench.hpp"

#include <chrono>
#include <cmath>

#include "cbiqa/encoder.hpp"
#include "cbiqa/error.hpp"
#include "cbiqa/preprocess.hpp"
#include "cbiqa/rng.hpp"

namespace cbiqa {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

TimingStats stats_of(const std::vector<double>& samples) {
  TimingStats t;
  t.samples = samples.size();
  if (samples.empty()) return t;
  for (double v : samples) t.mean_ms += v;
  t.mean_ms /= static_cast<double>(samples.size());
  for (double v : samples) t.std_ms += (v - t.mean_ms) * (v - t.mean_ms);
  t.std_ms = std::sqrt(t.std_ms / static_cast<double>(samples.size()));
  return t;
}

}  // namespace

TimingReport bench_timing(const Codebook& book, const std::vector<RgbImage>& images, const SvrModel& model,
                          const BenchOptions& options) {
  if (images.empty()) throw DimensionError("bench_timing: no images");
  if (model.num_features() != 2 * book.size())
    throw DimensionError("bench_timing: model expects " + std::to_string(model.num_features()) +
                         " features, codebook produces " + std::to_string(2 * book.size()));
  std::vector<double> descriptor_ms, encode_ms, predict_ms;
  volatile double sink = 0.0;
  for (std::size_t img = 0; img < images.size(); ++img) {
    for (std::size_t rep = 0; rep < options.warmup + options.repetitions; ++rep) {
      const bool timed = rep >= options.warmup;
      const std::uint64_t seed = derive_seed(options.seed, "bench", img);

      auto start = Clock::now();
      const YuvPlanes yuv = rgb_to_yuv(images[img]);
      const DescriptorMatrix raw = extract_descriptors(yuv.y, Channel::luma, book.patch_size, options.descriptors, seed);
      const DescriptorMatrix whitened = apply_whitening(book.whitening, raw);
      if (timed) descriptor_ms.push_back(elapsed_ms(start));

      start = Clock::now();
      const std::vector<double> features = encode_values(book, whitened);
      if (timed) encode_ms.push_back(elapsed_ms(start));

      start = Clock::now();
      sink = sink + model.predict(features);
      if (timed) predict_ms.push_back(elapsed_ms(start));
    }
  }
  (void)sink;
  return {stats_of(descriptor_ms), stats_of(encode_ms), stats_of(predict_ms)};
}

Codebook random_codebook(std::size_t patch_size, std::size_t codevectors, std::uint64_t seed) {
  if (patch_size == 0 || codevectors == 0) throw ParameterError("random_codebook: empty shape");
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(patch_size * patch_size);
  Codebook book;
  book.patch_size = patch_size;
  book.whitening = WhiteningTransform::identity(patch_size);
  book.codevectors.resize(d, static_cast<Eigen::Index>(codevectors));
  for (Eigen::Index c = 0; c < book.codevectors.cols(); ++c) {
    for (Eigen::Index r = 0; r < d; ++r) book.codevectors(r, c) = rng.normal();
    book.codevectors.col(c).normalize();
  }
  book.provenance = "random codebook for timing; seed=" + std::to_string(seed);
  return book;
}

SvrModel random_model(std::size_t features, std::size_t support_vectors, std::uint64_t seed) {
  if (features == 0) throw ParameterError("random_model: no features");
  Rng rng(seed);
  SvrModel m;
  m.kernel = {KernelKind::rbf, 1.0 / static_cast<double>(features)};
  m.scaler.min.assign(features, 0.0);
  m.scaler.max.assign(features, 1.0);
  m.support_vectors.resize(static_cast<Eigen::Index>(support_vectors), static_cast<Eigen::Index>(features));
  m.coefficients.resize(support_vectors);
  for (std::size_t i = 0; i < support_vectors; ++i) {
    m.coefficients[i] = rng.normal();
    for (std::size_t f = 0; f < features; ++f)
      m.support_vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = rng.uniform(-1.0, 1.0);
  }
  m.bias = 50.0;
  return m;
}

}  // namespace cbiqa
