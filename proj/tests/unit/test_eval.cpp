#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cbiqa/error.hpp"
#include "cbiqa/eval.hpp"
#include "cbiqa/rng.hpp"

using namespace cbiqa;

namespace {

const char* kManifest =
    "path,mos,reference_id,distortion_type,kind\n"
    "a.png,10,r1,blur,image\n"
    "b.png,20.5,r1,noise,image\n"
    "c.y4m,30,r2,blur,video\n";

LabeledSet linear_set(const std::string& name, std::size_t refs, std::size_t per_ref, std::uint64_t seed) {
  Rng rng(seed);
  LabeledSet s;
  s.name = name;
  s.features.resize(static_cast<Eigen::Index>(refs * per_ref), 3);
  for (std::size_t r = 0; r < refs; ++r)
    for (std::size_t k = 0; k < per_ref; ++k) {
      const auto i = static_cast<Eigen::Index>(r * per_ref + k);
      for (Eigen::Index j = 0; j < 3; ++j) s.features(i, j) = rng.uniform(0, 1);
      s.mos.push_back(100.0 * s.features(i, 0) + 20.0 * s.features(i, 2));
      s.reference_ids.push_back("ref" + std::to_string(r));
    }
  return s;
}

}  // namespace

TEST(Manifest, ParsesRows) {
  const DatasetManifest m = parse_manifest(kManifest, "/data", "toy");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.entries[0].media_path, std::filesystem::path("/data/a.png"));
  EXPECT_DOUBLE_EQ(m.entries[1].mos, 20.5);
  EXPECT_EQ(m.entries[2].kind, MediaKind::video);
  EXPECT_FALSE(m.entries[0].bitrate.has_value());
  EXPECT_EQ(m.reference_ids(), (std::vector<std::string>{"r1", "r2"}));
}

TEST(Manifest, BitrateColumn) {
  const DatasetManifest m = parse_manifest(
      "path,mos,reference_id,distortion_type,kind,bitrate\nv.y4m,50,r,h264,video,1200\nw.y4m,40,r,h264,video,\n", ".");
  EXPECT_DOUBLE_EQ(*m.entries[0].bitrate, 1200.0);
  EXPECT_FALSE(m.entries[1].bitrate.has_value());
}

TEST(Manifest, Errors) {
  EXPECT_THROW(parse_manifest("path,mos\na.png,1\n", "."), FormatError);
  EXPECT_THROW(parse_manifest(std::string(kManifest) + "a.png,11,r3,blur,image\n", "."), FormatError);
  EXPECT_THROW(parse_manifest("path,mos,reference_id,distortion_type,kind\na.png,x,r,b,image\n", "."), FormatError);
  EXPECT_THROW(parse_manifest("path,mos,reference_id,distortion_type,kind\na.png,1,r,b,audio\n", "."), FormatError);
}

TEST(Manifest, SaveLoadRoundTrip) {
  DatasetManifest m = parse_manifest(kManifest, std::filesystem::temp_directory_path());
  m.entries[0].distortion_type = "blur, strong";
  const auto path = std::filesystem::temp_directory_path() / "cbiqa_test_manifest.csv";
  save_manifest(path, m);
  const DatasetManifest back = load_manifest(path);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.entries[i].media_path, m.entries[i].media_path);
    EXPECT_EQ(back.entries[i].mos, m.entries[i].mos);
    EXPECT_EQ(back.entries[i].distortion_type, m.entries[i].distortion_type);
  }
  std::filesystem::remove(path);
}

TEST(Split, TenIdsGiveEightTwo) {
  std::vector<std::string> ids;
  for (int r = 0; r < 10; ++r)
    for (int k = 0; k < 3; ++k) ids.push_back("ref" + std::to_string(r));
  const Split s = content_independent_split(ids, 0.8, 1);
  EXPECT_EQ(s.train_ids.size(), 8u);
  EXPECT_EQ(s.test_ids.size(), 2u);
  EXPECT_EQ(s.train.size(), 24u);
  EXPECT_EQ(s.test.size(), 6u);
  const std::set<std::string> test(s.test_ids.begin(), s.test_ids.end());
  for (std::size_t i : s.test) EXPECT_TRUE(test.count(ids[i]));
  for (std::size_t i : s.train) EXPECT_FALSE(test.count(ids[i]));
  const Split again = content_independent_split(ids, 0.8, 1);
  EXPECT_EQ(again.train, s.train);
}

TEST(Split, ClampsAndRejects) {
  const std::vector<std::string> two{"a", "b"};
  const Split s = content_independent_split(two, 0.99, 0);
  EXPECT_EQ(s.train.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  EXPECT_THROW(content_independent_split(std::vector<std::string>{"a", "a"}, 0.8, 0), ParameterError);
  EXPECT_THROW(content_independent_split(two, 1.0, 0), ParameterError);
}

TEST(Correlation, Examples) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> lin, cube;
  for (double v : x) lin.push_back(2 * v + 1), cube.push_back(v * v * v);
  EXPECT_NEAR(plcc(x, lin), 1.0, 1e-12);
  EXPECT_NEAR(srcc(x, cube), 1.0, 1e-12);
  EXPECT_LT(plcc(x, cube), 1.0);
  const std::vector<double> a{1, 2, 3}, b{3, 2, 1};
  EXPECT_NEAR(plcc(a, b), -1.0, 1e-12);
  EXPECT_NEAR(srcc(a, b), -1.0, 1e-12);
  EXPECT_THROW(plcc(a, std::vector<double>{1, 1, 1}), ParameterError);
  EXPECT_THROW(plcc(std::vector<double>{1}, std::vector<double>{1}), ParameterError);
  EXPECT_THROW(srcc(a, x), ParameterError);
}

TEST(Correlation, MidRanks) {
  EXPECT_EQ(mid_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Correlation, Invariances) {
  Rng rng(12);
  for (int c = 0; c < 200; ++c) {
    std::vector<double> x(20), y(20), mono(20), affine(20);
    for (std::size_t i = 0; i < 20; ++i) {
      x[i] = rng.uniform(-5, 5);
      y[i] = x[i] + rng.normal();
      mono[i] = std::exp(x[i]) + x[i] * x[i] * x[i];
      affine[i] = 3.0 * x[i] - 7.0;
    }
    EXPECT_NEAR(srcc(mono, y), srcc(x, y), 1e-12);
    EXPECT_NEAR(plcc(affine, y), plcc(x, y), 1e-12);
    EXPECT_NEAR(plcc(x, y), plcc(y, x), 1e-12);
    EXPECT_LE(std::abs(srcc(x, y)), 1.0 + 1e-12);
  }
}

TEST(Summary, Values) {
  const Summary s = summarize(std::vector<double>{1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(s.median, 2.5);
}

TEST(Report, SelfTestIsPerfect) {
  EvalReport report;
  report.test_sets = {"self"};
  Rng rng(2);
  for (std::size_t k = 0; k < 10; ++k) {
    std::vector<double> pred(15);
    for (double& v : pred) v = rng.uniform(0, 100);
    SplitResult r;
    r.index = k;
    r.by_test_set["self"] = {plcc(pred, pred), srcc(pred, pred)};
    report.splits.push_back(r);
  }
  report.aggregate();
  const auto& [p, s] = report.aggregates.at("self");
  EXPECT_NEAR(p.mean, 1.0, 1e-12);
  EXPECT_NEAR(p.std, 0.0, 1e-7);
  EXPECT_NEAR(s.mean, 1.0, 1e-12);
  const nlohmann::json j = report.to_json();
  EXPECT_EQ(j["splits"].size(), 10u);
  const std::string table = report.table_csv(2048, 2048);
  EXPECT_EQ(table.rfind("descriptors,codevectors", 0), 0u);
}

TEST(Experiment, LinearDataAndCrossSet) {
  const LabeledSet train = linear_set("train", 10, 6, 1);
  const LabeledSet cross = linear_set("cross", 4, 5, 2);
  ExperimentSpec spec;
  spec.splits = 3;
  spec.svr.c = 1000.0;
  spec.svr.kernel.kind = KernelKind::linear;
  const EvalReport a = run_experiment(train, {cross}, spec);
  ASSERT_EQ(a.splits.size(), 3u);
  EXPECT_EQ(a.test_sets, (std::vector<std::string>{"train", "cross"}));
  EXPECT_GT(a.aggregates.at("train").first.mean, 0.99);
  EXPECT_GT(a.aggregates.at("cross").second.mean, 0.95);
  for (const auto& s : a.splits) EXPECT_EQ(s.test_ids.size(), 2u);
  const EvalReport b = run_experiment(train, {cross}, spec);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(Split, SeedsVaryThePartition) {
  std::vector<std::string> ids;
  for (int r = 0; r < 40; ++r) ids.push_back("ref" + std::to_string(r));
  std::set<std::vector<std::string>> seen;
  for (std::uint64_t s = 0; s < 10; ++s) seen.insert(content_independent_split(ids, 0.8, derive_seed(0, "splits", s)).test_ids);
  EXPECT_EQ(seen.size(), 10u);
}
