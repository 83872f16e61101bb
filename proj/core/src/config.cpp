#include "cbiqa/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "cbiqa/error.hpp"

namespace cbiqa {

namespace {

namespace fs = std::filesystem;

// Walks one TOML table, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const toml::table* table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

  std::string path(std::string_view key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
  }

  const toml::node* get(std::string_view key) {
    seen_.insert(std::string(key));
    return table_ ? table_->get(key) : nullptr;
  }

  Section sub(std::string_view key) {
    const toml::node* node = get(key);
    if (node && !node->is_table()) fail(key, "expected a table");
    return Section(node ? node->as_table() : nullptr, path(key));
  }

  void read(std::string_view key, std::size_t& out, std::size_t min_value = 0) {
    const toml::node* node = get(key);
    if (!node) return;
    const auto v = node->value_exact<std::int64_t>();
    if (!v) fail(key, "expected an integer");
    if (*v < static_cast<std::int64_t>(min_value)) fail(key, "must be >= " + std::to_string(min_value));
    out = static_cast<std::size_t>(*v);
  }

  void read_seed(std::string_view key, std::uint64_t& out) {
    const toml::node* node = get(key);
    if (!node) return;
    const auto v = node->value_exact<std::int64_t>();
    if (!v || *v < 0) fail(key, "expected a non-negative integer");
    out = static_cast<std::uint64_t>(*v);
  }

  void read(std::string_view key, double& out) {
    const toml::node* node = get(key);
    if (!node) return;
    const auto v = node->value<double>();
    if (!v || !std::isfinite(*v)) fail(key, "expected a finite number");
    out = *v;
  }

  void read(std::string_view key, std::string& out) {
    const toml::node* node = get(key);
    if (!node) return;
    const auto v = node->value_exact<std::string>();
    if (!v) fail(key, "expected a string");
    out = *v;
  }

  std::optional<std::string> string(std::string_view key) {
    std::string s;
    if (!table_ || !table_->contains(key)) {
      seen_.insert(std::string(key));
      return std::nullopt;
    }
    read(key, s);
    return s;
  }

  std::vector<std::string> strings(std::string_view key) {
    const toml::node* node = get(key);
    std::vector<std::string> out;
    if (!node) return out;
    const toml::array* arr = node->as_array();
    if (!arr) fail(key, "expected an array of strings");
    for (const auto& item : *arr) {
      const auto v = item.value_exact<std::string>();
      if (!v) fail(key, "expected an array of strings");
      out.push_back(*v);
    }
    return out;
  }

  [[noreturn]] void fail(std::string_view key, const std::string& message) const {
    throw ParameterError("config: " + path(key) + ": " + message);
  }

  void check_unknown() const {
    if (!table_) return;
    for (const auto& [key, node] : *table_)
      if (!seen_.count(std::string(key.str()))) throw ParameterError("config: unknown key " + path(key.str()));
  }

 private:
  const toml::table* table_;
  std::string prefix_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

WhiteningKind parse_whitening(Section& s, std::string_view key, const std::string& v) {
  if (v == "none") return WhiteningKind::none;
  if (v == "zca") return WhiteningKind::zca;
  if (v == "fourier") return WhiteningKind::fourier;
  s.fail(key, "expected none, zca or fourier");
}

const char* whitening_name(WhiteningKind k) {
  switch (k) {
    case WhiteningKind::none: return "none";
    case WhiteningKind::zca: return "zca";
    case WhiteningKind::fourier: return "fourier";
  }
  return "?";
}

const char* primitive_name(Primitive p) {
  switch (p) {
    case Primitive::square: return "square";
    case Primitive::circle: return "circle";
    case Primitive::ellipse: return "ellipse";
  }
  return "?";
}

const char* source_name(CodebookSource s) {
  switch (s) {
    case CodebookSource::synthetic: return "synthetic";
    case CodebookSource::dataset: return "dataset";
    case CodebookSource::file: return "file";
  }
  return "?";
}

const char* pooling_name(Pooling p) {
  switch (p) {
    case Pooling::none: return "none";
    case Pooling::average: return "avg";
    case Pooling::std_dev: return "std";
  }
  return "?";
}

void parse_codebook(Section s, ExperimentConfig::CodebookSection& cb, const fs::path& base) {
  if (auto src = s.string("source")) {
    if (*src == "synthetic") cb.source = CodebookSource::synthetic;
    else if (*src == "dataset") cb.source = CodebookSource::dataset;
    else if (*src == "file") cb.source = CodebookSource::file;
    else s.fail("source", "expected synthetic, dataset or file");
  }
  if (auto p = s.string("path")) cb.path = resolve(base, *p);
  s.read("patch_size", cb.patch_size, 1);
  s.read("codevectors", cb.codevectors, 1);
  s.read("patches_per_image", cb.patches_per_image, 1);
  if (auto w = s.string("whitening")) cb.whitening = parse_whitening(s, "whitening", *w);
  s.read("synthetic_images", cb.synthetic_images, 1);

  Section synth = s.sub("synth");
  SynthParams& sp = cb.synth;
  synth.read("width", sp.width, 1);
  synth.read("height", sp.height, 1);
  synth.read("gamma", sp.gamma);
  synth.read("size_min", sp.size_min);
  synth.read("size_max", sp.size_max);
  if (auto c = synth.string("color")) {
    if (*c == "binary") sp.color_model = ColorModel::binary;
    else if (*c == "greyscale") sp.color_model = ColorModel::greyscale;
    else synth.fail("color", "expected binary or greyscale");
  }
  if (auto d = synth.string("sizes")) {
    if (*d == "power_law") sp.source = SizeSource::power_law;
    else if (*d == "delta") sp.source = SizeSource::delta;
    else synth.fail("sizes", "expected power_law or delta");
  }
  const std::vector<std::string> prims = synth.strings("primitives");
  if (!prims.empty()) {
    sp.primitives.clear();
    for (const auto& p : prims) {
      if (p == "square") sp.primitives.push_back(Primitive::square);
      else if (p == "circle") sp.primitives.push_back(Primitive::circle);
      else if (p == "ellipse") sp.primitives.push_back(Primitive::ellipse);
      else synth.fail("primitives", "unknown primitive " + p);
    }
  }
  synth.check_unknown();
  try {
    sp.validate();
  } catch (const ParameterError& e) {
    throw ParameterError(std::string("config: codebook.synth: ") + e.what());
  }
  if (cb.patch_size * cb.patch_size > 4096) s.fail("patch_size", "must be <= 64");
  switch (cb.source) {
    case CodebookSource::synthetic: break;
    case CodebookSource::dataset:
      if (cb.path.empty() || !fs::is_directory(cb.path)) s.fail("path", "image directory does not exist: " + cb.path.string());
      break;
    case CodebookSource::file:
      if (cb.path.empty() || !fs::is_regular_file(cb.path)) s.fail("path", "codebook file does not exist: " + cb.path.string());
      break;
  }
  s.check_unknown();
}

}  // namespace

ExperimentConfig parse_config(const std::string& toml_text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " at line " << e.source().begin.line;
    throw FormatError(msg.str());
  }

  ExperimentConfig cfg;
  Section top(&root, "");
  top.read_seed("seed", cfg.seed);
  top.read("splits", cfg.splits, 1);
  top.read("train_fraction", cfg.train_fraction);
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) top.fail("train_fraction", "must be in (0, 1)");

  parse_codebook(top.sub("codebook"), cfg.codebook, base_dir);

  Section features = top.sub("features");
  features.read("descriptors", cfg.features.descriptors, 1);
  if (auto ch = features.string("channels")) {
    if (*ch == "luma") cfg.features.channels = ChannelMode::luma;
    else if (*ch == "luma+chroma") cfg.features.channels = ChannelMode::luma_chroma;
    else features.fail("channels", "expected luma or luma+chroma");
  }
  features.check_unknown();

  Section reg = top.sub("regressor");
  reg.read("c", cfg.regressor.c);
  if (!(cfg.regressor.c > 0.0)) reg.fail("c", "must be > 0");
  reg.read("nu", cfg.regressor.nu);
  if (!(cfg.regressor.nu > 0.0 && cfg.regressor.nu <= 1.0)) reg.fail("nu", "must be in (0, 1]");
  if (auto k = reg.string("kernel")) {
    if (*k == "rbf") cfg.regressor.kernel.kind = KernelKind::rbf;
    else if (*k == "linear") cfg.regressor.kernel.kind = KernelKind::linear;
    else reg.fail("kernel", "expected rbf or linear");
  }
  reg.read("gamma", cfg.regressor.kernel.gamma);
  reg.read("tolerance", cfg.regressor.tolerance);
  if (!(cfg.regressor.tolerance > 0.0)) reg.fail("tolerance", "must be > 0");
  reg.check_unknown();

  Section pool = top.sub("pooling");
  if (auto m = pool.string("mode")) {
    if (*m == "none") cfg.pooling.mode = Pooling::none;
    else if (*m == "avg") cfg.pooling.mode = Pooling::average;
    else if (*m == "std") cfg.pooling.mode = Pooling::std_dev;
    else pool.fail("mode", "expected none, avg or std");
  }
  if (const toml::node* rate = pool.get("rate")) {
    if (const auto s = rate->value_exact<std::string>()) {
      if (*s == "all") cfg.pooling.rate = SamplingRate::all();
      else if (*s == "video") cfg.pooling.rate = SamplingRate::every_video();
      else pool.fail("rate", "expected a positive number, \"all\" or \"video\"");
    } else if (const auto r = rate->value<double>(); r && *r > 0.0 && std::isfinite(*r)) {
      cfg.pooling.rate = SamplingRate::fps(*r);
    } else {
      pool.fail("rate", "expected a positive number, \"all\" or \"video\"");
    }
  }
  pool.read("frame_step", cfg.pooling.frame_step, 1);
  pool.read("segment_seconds", cfg.pooling.segment_seconds);
  if (!(cfg.pooling.segment_seconds > 0.0)) pool.fail("segment_seconds", "must be > 0");
  pool.check_unknown();

  Section data = top.sub("dataset");
  data.read("train", cfg.dataset.train);
  cfg.dataset.cross = data.strings("cross");
  data.read("desk_references", cfg.dataset.desk_references, 2);
  auto check_dataset = [&](std::string& name, std::string_view key) {
    if (name == "desk" || name == "desk-video") return;
    const fs::path p = resolve(base_dir, name);
    if (!fs::is_regular_file(p)) data.fail(key, "manifest does not exist: " + p.string());
    name = p.string();
  };
  check_dataset(cfg.dataset.train, "train");
  for (auto& c : cfg.dataset.cross) check_dataset(c, "cross");
  data.check_unknown();

  top.check_unknown();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

nlohmann::json ExperimentConfig::to_json() const {
  using nlohmann::json;
  json prims = json::array();
  for (Primitive p : codebook.synth.primitives) prims.push_back(primitive_name(p));
  json rate;
  if (pooling.rate.one_per_video) rate = "video";
  else if (pooling.rate.per_second <= 0.0) rate = "all";
  else rate = pooling.rate.per_second;
  return {
      {"seed", seed},
      {"splits", splits},
      {"train_fraction", train_fraction},
      {"codebook",
       {{"source", source_name(codebook.source)},
        {"path", codebook.path.generic_string()},
        {"patch_size", codebook.patch_size},
        {"codevectors", codebook.codevectors},
        {"patches_per_image", codebook.patches_per_image},
        {"whitening", whitening_name(codebook.whitening)},
        {"synthetic_images", codebook.synthetic_images},
        {"synth",
         {{"width", codebook.synth.width},
          {"height", codebook.synth.height},
          {"gamma", codebook.synth.gamma},
          {"size_min", codebook.synth.size_min},
          {"size_max", codebook.synth.size_max},
          {"color", codebook.synth.color_model == ColorModel::binary ? "binary" : "greyscale"},
          {"sizes", codebook.synth.source == SizeSource::power_law ? "power_law" : "delta"},
          {"primitives", prims}}}}},
      {"features",
       {{"descriptors", features.descriptors},
        {"channels", features.channels == ChannelMode::luma ? "luma" : "luma+chroma"}}},
      {"regressor",
       {{"c", regressor.c},
        {"nu", regressor.nu},
        {"kernel", regressor.kernel.kind == KernelKind::rbf ? "rbf" : "linear"},
        {"gamma", regressor.kernel.gamma},
        {"tolerance", regressor.tolerance}}},
      {"pooling",
       {{"mode", pooling_name(pooling.mode)},
        {"rate", rate},
        {"frame_step", pooling.frame_step},
        {"segment_seconds", pooling.segment_seconds}}},
      {"dataset", {{"train", dataset.train}, {"cross", dataset.cross}, {"desk_references", dataset.desk_references}}},
  };
}

}  // namespace cbiqa
