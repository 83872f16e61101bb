#include <gtest/gtest.h>

#include <cmath>

#include "cbiqa/bench.hpp"
#include "cbiqa/error.hpp"
#include "cbiqa/pipeline.hpp"
#include "cbiqa/rng.hpp"

using namespace cbiqa;

namespace {

ExperimentConfig small_desk(std::size_t splits) {
  ExperimentConfig c;
  c.splits = splits;
  c.codebook.codevectors = 64;
  c.codebook.synthetic_images = 20;
  c.features.descriptors = 256;
  c.dataset.desk_references = 20;
  return c;
}

}  // namespace

TEST(Pipeline, MoreSplitsBarelyMoveTheStd) {
  const EvalReport ten = run_configured_experiment(small_desk(10));
  const EvalReport twenty = run_configured_experiment(small_desk(20));
  const auto& a = ten.aggregates.at("desk");
  const auto& b = twenty.aggregates.at("desk");
  EXPECT_LT(std::abs(a.first.std - b.first.std), 0.01);
  EXPECT_LT(std::abs(a.second.std - b.second.std), 0.01);
  // The first ten splits are shared.
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(ten.splits[i].test_ids, twenty.splits[i].test_ids);
}

TEST(Pipeline, ReportEchoesConfig) {
  const EvalReport r = run_configured_experiment(small_desk(2));
  EXPECT_EQ(r.config["codebook"]["codevectors"], 64);
  EXPECT_TRUE(r.config.contains("codebook_id"));
  EXPECT_FALSE(r.timing.has_value());
}

TEST(BenchTiming, PositiveAndMonotoneInCodebookSize) {
  Rng rng(1);
  std::vector<RgbImage> images(2, RgbImage(128, 128));
  for (auto& img : images)
    for (double& v : img.rgb) v = rng.uniform(0, 255);
  BenchOptions o;
  o.descriptors = 2048;
  o.repetitions = 5;
  o.warmup = 1;
  const TimingReport small = bench_timing(random_codebook(8, 64, 1), images, random_model(128, 100, 2), o);
  const TimingReport large = bench_timing(random_codebook(8, 2048, 1), images, random_model(4096, 100, 2), o);
  for (const TimingReport* t : {&small, &large}) {
    EXPECT_GT(t->descriptors.mean_ms, 0.0);
    EXPECT_GT(t->encoding.mean_ms, 0.0);
    EXPECT_GT(t->prediction.mean_ms, 0.0);
    EXPECT_EQ(t->encoding.samples, 10u);
  }
  EXPECT_GE(large.encoding.mean_ms, small.encoding.mean_ms);
  EXPECT_THROW(bench_timing(random_codebook(8, 64, 1), images, random_model(100, 10, 2), o), DimensionError);
  EXPECT_THROW(bench_timing(random_codebook(8, 64, 1), {}, random_model(128, 10, 2), o), DimensionError);
}
