#include <benchmark/benchmark.h>

#include "cbiqa/bench.hpp"
#include "cbiqa/encoder.hpp"
#include "cbiqa/regression.hpp"
#include "cbiqa/rng.hpp"

using namespace cbiqa;

namespace {

DescriptorMatrix random_whitened(std::size_t patch, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  DescriptorMatrix d;
  d.patch_size = patch;
  d.whitened = true;
  d.columns.resize(static_cast<Eigen::Index>(patch * patch), static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < d.columns.size(); ++i) d.columns.data()[i] = rng.normal();
  return d;
}

// args: descriptors, codevectors
void BM_Encode(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const Codebook book = random_codebook(8, k, 1);
  const DescriptorMatrix y = random_whitened(8, m, 2);
  for (auto _ : state) benchmark::DoNotOptimize(encode_values(book, y));
}
BENCHMARK(BM_Encode)
    ->ArgsProduct({{512, 1024, 1536, 2048}, {2048}})
    ->ArgsProduct({{2048}, {512, 1024, 1536, 2048}})
    ->Args({2048, 64})
    ->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const SvrModel model = random_model(4096, static_cast<std::size_t>(state.range(0)), 3);
  Rng rng(4);
  std::vector<double> x(4096);
  for (double& v : x) v = rng.uniform01();
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x));
}
BENCHMARK(BM_Predict)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Descriptors(benchmark::State& state) {
  Rng rng(5);
  RgbImage img(512, 512);
  for (double& v : img.rgb) v = rng.uniform(0, 255);
  for (auto _ : state) {
    const YuvPlanes yuv = rgb_to_yuv(img);
    benchmark::DoNotOptimize(extract_descriptors(yuv.y, Channel::luma, 8, 2048, 6));
  }
}
BENCHMARK(BM_Descriptors)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
