#include "cbiqa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "cbiqa/csv.hpp"
#include "cbiqa/error.hpp"
#include "cbiqa/parallel.hpp"
#include "cbiqa/rng.hpp"

namespace cbiqa {

// ---------------------------------------------------------------------------
// Manifest

std::vector<std::string> DatasetManifest::reference_ids() const {
  std::set<std::string> ids;
  for (const auto& e : entries) ids.insert(e.reference_id);
  return {ids.begin(), ids.end()};
}

DatasetManifest parse_manifest(const std::string& csv_text, const std::filesystem::path& base_dir,
                               const std::string& name) {
  static const std::vector<std::string> required = {"path", "mos", "reference_id", "distortion_type", "kind"};
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("manifest: empty file");
  const std::vector<std::string> header = split_csv_line(line);
  auto column = [&](const std::string& col) -> long {
    const auto it = std::find(header.begin(), header.end(), col);
    return it == header.end() ? -1 : static_cast<long>(it - header.begin());
  };
  for (const auto& col : required)
    if (column(col) < 0) throw FormatError("manifest: missing column '" + col + "'");
  for (const auto& col : header)
    if (col != "bitrate" && std::find(required.begin(), required.end(), col) == required.end())
      throw FormatError("manifest: unexpected column '" + col + "'");
  const long bitrate_col = column("bitrate");

  DatasetManifest manifest;
  manifest.name = name;
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    const std::string where = "manifest line " + std::to_string(line_no);
    if (fields.size() != header.size()) throw FormatError(where + ": expected " + std::to_string(header.size()) + " fields");
    ManifestEntry e;
    const std::string& raw_path = fields[static_cast<std::size_t>(column("path"))];
    if (raw_path.empty()) throw FormatError(where + ": empty path");
    if (!seen.insert(raw_path).second) throw FormatError(where + ": duplicate path '" + raw_path + "'");
    const std::filesystem::path p(raw_path);
    e.media_path = p.is_absolute() ? p : base_dir / p;
    const std::string& mos = fields[static_cast<std::size_t>(column("mos"))];
    char* end = nullptr;
    e.mos = std::strtod(mos.c_str(), &end);
    if (mos.empty() || end != mos.c_str() + mos.size() || !std::isfinite(e.mos))
      throw FormatError(where + ": non-numeric MOS '" + mos + "'");
    e.reference_id = fields[static_cast<std::size_t>(column("reference_id"))];
    if (e.reference_id.empty()) throw FormatError(where + ": empty reference_id");
    e.distortion_type = fields[static_cast<std::size_t>(column("distortion_type"))];
    const std::string& kind = fields[static_cast<std::size_t>(column("kind"))];
    if (kind == "image") {
      e.kind = MediaKind::image;
    } else if (kind == "video") {
      e.kind = MediaKind::video;
    } else {
      throw FormatError(where + ": kind must be 'image' or 'video', got '" + kind + "'");
    }
    if (bitrate_col >= 0) {
      const std::string& b = fields[static_cast<std::size_t>(bitrate_col)];
      if (!b.empty()) {
        const double v = std::strtod(b.c_str(), &end);
        if (end != b.c_str() + b.size() || !(v >= 0.0)) throw FormatError(where + ": invalid bitrate '" + b + "'");
        e.bitrate = v;
      }
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str(), path.parent_path(), path.stem().string());
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const bool with_bitrate = std::any_of(manifest.entries.begin(), manifest.entries.end(),
                                        [](const ManifestEntry& e) { return e.bitrate.has_value(); });
  out << "path,mos,reference_id,distortion_type,kind" << (with_bitrate ? ",bitrate" : "") << '\n';
  const auto base = path.parent_path();
  for (const auto& e : manifest.entries) {
    auto rel = e.media_path.lexically_relative(base);
    if (rel.empty() || *rel.begin() == "..") rel = e.media_path;
    out << csv_field(rel.generic_string()) << ',' << format_double(e.mos) << ',' << csv_field(e.reference_id) << ','
        << csv_field(e.distortion_type) << ','
        << (e.kind == MediaKind::image ? "image" : "video");
    if (with_bitrate) out << ',' << (e.bitrate ? format_double(*e.bitrate) : "");
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splits

Split content_independent_split(std::span<const std::string> reference_ids, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParameterError("split: train fraction must be in (0, 1)");
  std::set<std::string> unique(reference_ids.begin(), reference_ids.end());
  if (unique.size() < 2) throw ParameterError("split: need at least 2 distinct reference ids");
  std::vector<std::string> ids(unique.begin(), unique.end());
  Rng rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) std::swap(ids[i], ids[rng.index(i + 1)]);

  const auto n = static_cast<double>(ids.size());
  const auto rounded = static_cast<std::size_t>(std::llround(train_fraction * n));
  const std::size_t n_train = std::clamp<std::size_t>(rounded, 1, ids.size() - 1);
  Split split;
  split.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  const std::set<std::string> train(split.train_ids.begin(), split.train_ids.end());
  for (std::size_t i = 0; i < reference_ids.size(); ++i)
    (train.count(reference_ids[i]) ? split.train : split.test).push_back(i);
  return split;
}

Split content_independent_split(const DatasetManifest& manifest, double train_fraction, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) ids.push_back(e.reference_id);
  return content_independent_split(ids, train_fraction, seed);
}

// ---------------------------------------------------------------------------
// Correlations

double plcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ParameterError("plcc: length mismatch");
  if (x.size() < 2) throw ParameterError("plcc: need at least 2 samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw ParameterError("correlation undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> mid_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ParameterError("srcc: length mismatch");
  return plcc(mid_ranks(x), mid_ranks(y));
}

Summary summarize(std::span<const double> values) {
  std::vector<double> finite;
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  Summary s;
  if (finite.empty()) {
    s.mean = s.std = s.median = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const double n = static_cast<double>(finite.size());
  s.mean = std::accumulate(finite.begin(), finite.end(), 0.0) / n;
  double acc = 0.0;
  for (double v : finite) acc += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(acc / n);
  std::sort(finite.begin(), finite.end());
  const std::size_t k = finite.size();
  s.median = k % 2 ? finite[k / 2] : (finite[k / 2 - 1] + finite[k / 2]) / 2.0;
  return s;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

Correlation correlate(const std::vector<double>& predicted, const std::vector<double>& mos) {
  Correlation c;
  try {
    c.plcc = plcc(predicted, mos);
    c.srcc = srcc(predicted, mos);
  } catch (const ParameterError&) {
    c.plcc = c.srcc = std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<double> select(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

nlohmann::json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}, {"median", s.median}}; }

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json timing_json(const TimingStats& t) {
  return {{"mean_ms", t.mean_ms}, {"std_ms", t.std_ms}, {"samples", t.samples}};
}

}  // namespace

EvalReport run_experiment(const LabeledSet& train_set, const std::vector<LabeledSet>& cross_sets,
                          const ExperimentSpec& spec) {
  if (spec.splits == 0) throw ParameterError("run_experiment: splits must be at least 1");
  if (static_cast<std::size_t>(train_set.features.rows()) != train_set.size() ||
      train_set.reference_ids.size() != train_set.size())
    throw DimensionError("run_experiment: training set rows, labels and ids differ in length");
  for (const auto& cross : cross_sets) {
    if (cross.features.cols() != train_set.features.cols())
      throw DimensionError("run_experiment: cross set '" + cross.name + "' has a different feature length");
    if (cross.name == train_set.name) throw ParameterError("run_experiment: duplicate test set name '" + cross.name + "'");
  }

  EvalReport report;
  report.test_sets.push_back(train_set.name);
  for (const auto& cross : cross_sets) report.test_sets.push_back(cross.name);
  report.splits.resize(spec.splits);

  parallel_for(spec.splits, [&](std::size_t s) {
    const Split split = content_independent_split(train_set.reference_ids, spec.train_fraction,
                                                  derive_seed(spec.seed, "splits", s));
    const Eigen::MatrixXd train_x = select_rows(train_set.features, split.train);
    const std::vector<double> train_y = select(train_set.mos, split.train);
    const SvrModel model = train_nusvr(train_x, train_y, spec.svr);

    SplitResult& result = report.splits[s];
    result.index = s;
    result.train_items = split.train.size();
    result.support_vectors = model.num_support_vectors();
    result.test_ids = split.test_ids;
    result.by_test_set[train_set.name] =
        correlate(model.predict(select_rows(train_set.features, split.test)), select(train_set.mos, split.test));
    for (const auto& cross : cross_sets) result.by_test_set[cross.name] = correlate(model.predict(cross.features), cross.mos);
  });
  report.aggregate();
  return report;
}

void EvalReport::aggregate() {
  aggregates.clear();
  for (const auto& name : test_sets) {
    std::vector<double> p, r;
    for (const auto& split : splits) {
      const auto it = split.by_test_set.find(name);
      if (it == split.by_test_set.end()) continue;
      p.push_back(it->second.plcc);
      r.push_back(it->second.srcc);
    }
    aggregates[name] = {summarize(p), summarize(r)};
  }
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["config"] = config;
  j["test_sets"] = test_sets;
  j["splits"] = nlohmann::json::array();
  for (const auto& split : splits) {
    nlohmann::json s{{"index", split.index},
                     {"train_items", split.train_items},
                     {"support_vectors", split.support_vectors},
                     {"test_ids", split.test_ids}};
    for (const auto& [name, c] : split.by_test_set)
      s["results"][name] = {{"plcc", number_or_null(c.plcc)}, {"srcc", number_or_null(c.srcc)}};
    j["splits"].push_back(std::move(s));
  }
  for (const auto& [name, pair] : aggregates)
    j["aggregates"][name] = {{"plcc", summary_json(pair.first)}, {"srcc", summary_json(pair.second)}};
  j["timing"] = timing ? cbiqa::to_json(*timing) : nlohmann::json(nullptr);
  return j;
}

std::string EvalReport::table_csv(std::size_t descriptors, std::size_t codevectors) const {
  std::ostringstream out;
  out << "descriptors,codevectors";
  for (const auto& name : test_sets) out << ',' << name << "_plcc," << name << "_plcc_std," << name << "_srcc," << name << "_srcc_std";
  out << '\n' << descriptors << ',' << codevectors;
  for (const auto& name : test_sets) {
    const auto it = aggregates.find(name);
    if (it == aggregates.end()) {
      out << ",,,,";
      continue;
    }
    const auto& [p, r] = it->second;
    out << ',' << format_double(p.mean) << ',' << format_double(p.std) << ',' << format_double(r.mean) << ','
        << format_double(r.std);
  }
  out << '\n';
  return out.str();
}

nlohmann::json to_json(const TimingReport& timing) {
  return {{"descriptors", timing_json(timing.descriptors)},
          {"encoding", timing_json(timing.encoding)},
          {"prediction", timing_json(timing.prediction)}};
}

}  // namespace cbiqa
