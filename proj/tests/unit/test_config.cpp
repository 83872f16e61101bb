#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "cbiqa/config.hpp"
#include "cbiqa/error.hpp"

using namespace cbiqa;

namespace {

std::string error_of(const std::string& toml) {
  try {
    parse_config(toml);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, EmptyGivesDefaults) {
  const ExperimentConfig c = parse_config("");
  EXPECT_EQ(c.splits, 10u);
  EXPECT_DOUBLE_EQ(c.train_fraction, 0.8);
  EXPECT_EQ(c.codebook.patch_size, 8u);
  EXPECT_EQ(c.codebook.codevectors, 2048u);
  EXPECT_EQ(c.features.descriptors, 2048u);
  EXPECT_EQ(c.codebook.whitening, WhiteningKind::zca);
  EXPECT_EQ(c.regressor.kernel.kind, KernelKind::rbf);
  EXPECT_DOUBLE_EQ(c.regressor.c, 1.0);
  EXPECT_DOUBLE_EQ(c.regressor.nu, 0.5);
  EXPECT_EQ(c.dataset.train, "desk");
}

TEST(Config, ParsesSections) {
  const ExperimentConfig c = parse_config(R"(
seed = 7
splits = 3
[codebook]
codevectors = 256
patches_per_image = 100
whitening = "fourier"
[codebook.synth]
gamma = 2.5
color = "greyscale"
primitives = ["square"]
[features]
descriptors = 512
channels = "luma+chroma"
[regressor]
kernel = "linear"
c = 50.0
[pooling]
mode = "std"
rate = "all"
segment_seconds = 2.0
)");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.splits, 3u);
  EXPECT_EQ(c.codebook.codevectors, 256u);
  EXPECT_EQ(c.codebook.whitening, WhiteningKind::fourier);
  EXPECT_DOUBLE_EQ(c.codebook.synth.gamma, 2.5);
  EXPECT_EQ(c.codebook.synth.color_model, ColorModel::greyscale);
  EXPECT_EQ(c.codebook.synth.primitives, std::vector<Primitive>{Primitive::square});
  EXPECT_EQ(c.features.channels, ChannelMode::luma_chroma);
  EXPECT_EQ(c.regressor.kernel.kind, KernelKind::linear);
  EXPECT_EQ(c.pooling.mode, Pooling::std_dev);
  EXPECT_FALSE(c.pooling.rate.one_per_video);
  EXPECT_LE(c.pooling.rate.per_second, 0.0);
  EXPECT_EQ(c.to_json()["codebook"]["codevectors"], 256);
}

TEST(Config, ValidationErrorsNameTheKey) {
  EXPECT_NE(error_of("[codebook]\ncodevectors = 0\n").find("codebook.codevectors"), std::string::npos);
  EXPECT_NE(error_of("[codebook]\nbogus = 1\n").find("codebook.bogus"), std::string::npos);
  EXPECT_NE(error_of("unknown_top = true\n").find("unknown_top"), std::string::npos);
  EXPECT_NE(error_of("[regressor]\nnu = 1.5\n").find("regressor.nu"), std::string::npos);
  EXPECT_NE(error_of("train_fraction = 1.0\n").find("train_fraction"), std::string::npos);
  EXPECT_NE(error_of("[codebook.synth]\ngamma = 1.0\n").find("gamma"), std::string::npos);
  EXPECT_THROW(parse_config("[codebook]\ncodevectors = 0\n"), ParameterError);
  EXPECT_THROW(parse_config("[codebook\n"), FormatError);
  EXPECT_THROW(parse_config("[dataset]\ntrain = \"missing.csv\"\n", "/nonexistent"), ParameterError);
}

TEST(Config, LoadResolvesRelativePaths) {
  const auto dir = std::filesystem::temp_directory_path() / "cbiqa_test_config";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "m.csv") << "path,mos,reference_id,distortion_type,kind\n";
    std::ofstream(dir / "exp.toml") << "[dataset]\ntrain = \"m.csv\"\n";
  }
  const ExperimentConfig c = load_config(dir / "exp.toml");
  EXPECT_EQ(std::filesystem::path(c.dataset.train), dir / "m.csv");
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_config(dir / "exp.toml"), IoError);
}

TEST(Config, ShippedPresetsParse) {
  for (const auto& entry : std::filesystem::directory_iterator(CBIQA_CONFIG_DIR)) {
    std::ifstream in(entry.path());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    // Dataset presets point at user-supplied manifests; swap in the desk set.
    const auto at = text.find("train = \"/data");
    if (at != std::string::npos) text.replace(at, text.find('\n', at) - at, "train = \"desk\"");
    EXPECT_NO_THROW(parse_config(text)) << entry.path();
  }
  const ExperimentConfig vqa = load_config(std::filesystem::path(CBIQA_CONFIG_DIR) / "desk-video.toml");
  EXPECT_EQ(vqa.dataset.cross, std::vector<std::string>{"desk-video"});
  EXPECT_DOUBLE_EQ(vqa.pooling.rate.per_second, 1.0);
}
