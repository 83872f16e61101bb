// cbiqa: command line front end for the codebook quality toolkit.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cbiqa/bench.hpp"
#include "cbiqa/codebook.hpp"
#include "cbiqa/config.hpp"
#include "cbiqa/csv.hpp"
#include "cbiqa/desk.hpp"
#include "cbiqa/encoder.hpp"
#include "cbiqa/error.hpp"
#include "cbiqa/image_io.hpp"
#include "cbiqa/log.hpp"
#include "cbiqa/parallel.hpp"
#include "cbiqa/pipeline.hpp"
#include "cbiqa/preprocess.hpp"
#include "cbiqa/regression.hpp"
#include "cbiqa/rng.hpp"
#include "cbiqa/synthgen.hpp"
#include "cbiqa/video.hpp"

namespace fs = std::filesystem;
using namespace cbiqa;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

std::string csv_row(const std::vector<double>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ',';
    line += format_double(values[i]);
  }
  return line + "\n";
}

std::vector<double> column_values(const Eigen::MatrixXd& table, const std::string& what) {
  if (table.cols() != 1 && table.rows() != 1) throw FormatError(what + ": expected a single column of values");
  std::vector<double> out(static_cast<std::size_t>(table.size()));
  for (Eigen::Index i = 0; i < table.size(); ++i) out[static_cast<std::size_t>(i)] = table.data()[i];
  return out;
}

// "4:256" is a power-law range, a single value a delta source.
void parse_size(const std::string& text, SynthParams& p) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      p.source = SizeSource::delta;
      p.size_min = p.size_max = std::stod(text);
    } else {
      p.source = SizeSource::power_law;
      p.size_min = std::stod(text.substr(0, colon));
      p.size_max = std::stod(text.substr(colon + 1));
    }
  } catch (const std::logic_error&) {
    throw ParameterError("--size: expected MIN:MAX or a single size, got '" + text + "'");
  }
}

std::vector<Primitive> parse_primitives(const std::vector<std::string>& names) {
  std::vector<Primitive> out;
  for (const auto& n : names) {
    if (n == "square") out.push_back(Primitive::square);
    else if (n == "circle") out.push_back(Primitive::circle);
    else if (n == "ellipse") out.push_back(Primitive::ellipse);
    else throw ParameterError("unknown primitive " + n);
  }
  return out;
}

SamplingRate parse_rate(const std::string& text) {
  if (text == "all") return SamplingRate::all();
  if (text == "video") return SamplingRate::every_video();
  double r = 0.0;
  try {
    r = std::stod(text);
  } catch (const std::logic_error&) {
    throw ParameterError("--rate: expected frames per second, 'all' or 'video'");
  }
  if (!(r > 0.0)) throw ParameterError("--rate must be positive");
  return SamplingRate::fps(r);
}

const std::map<std::string, WhiteningKind> kWhitening{
    {"zca", WhiteningKind::zca}, {"fourier", WhiteningKind::fourier}, {"none", WhiteningKind::none}};
const std::map<std::string, Channel> kChannel{{"luma", Channel::luma}, {"chroma", Channel::chroma}};
const std::map<std::string, KernelKind> kKernel{{"rbf", KernelKind::rbf}, {"linear", KernelKind::linear}};
const std::map<std::string, Pooling> kPooling{{"avg", Pooling::average}, {"std", Pooling::std_dev}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cbiqa: no-reference image and video quality with learned codebooks"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  bool verbose = false;
  app.add_option("--threads", threads, "Worker thread cap (default: CODEBOOK_IQA_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

  // synth-gen
  auto* synth = app.add_subcommand("synth-gen", "Generate dead-leaves images or the desk benchmark");
  SynthParams sp;
  std::size_t synth_count = 10;
  std::string synth_size = "4:256", synth_color = "binary", synth_format = "png";
  std::vector<std::string> synth_prims{"square", "circle"};
  std::string synth_out;
  bool desk = false;
  std::size_t desk_refs = 40;
  synth->add_option("--gamma", sp.gamma, "Power-law exponent of object sizes")->capture_default_str();
  synth->add_option("--count", synth_count, "Number of images")->capture_default_str();
  synth->add_option("--size", synth_size, "Size range MIN:MAX, or one value for fixed-size objects")
      ->capture_default_str();
  synth->add_option("--primitives", synth_prims, "square, circle, ellipse")->delimiter(',')->capture_default_str();
  synth->add_option("--color", synth_color, "binary or greyscale")
      ->check(CLI::IsMember({"binary", "greyscale"}))
      ->capture_default_str();
  synth->add_option("--width", sp.width)->capture_default_str();
  synth->add_option("--height", sp.height)->capture_default_str();
  synth->add_option("--format", synth_format, "png or ppm")->check(CLI::IsMember({"png", "ppm"}))->capture_default_str();
  synth->add_option("--seed", sp.seed)->capture_default_str();
  synth->add_option("--out-dir", synth_out)->required();
  synth->add_flag("--desk-benchmark", desk, "Write the distorted desk benchmark and its manifest instead");
  synth->add_option("--references", desk_refs, "Desk benchmark reference count")->capture_default_str();

  // build-codebook
  auto* build = app.add_subcommand("build-codebook", "Learn a codebook from an image directory");
  CodebookParams cp;
  std::string build_images, build_out, build_channel = "luma", build_whiten = "zca";
  build->add_option("--images", build_images)->required()->check(CLI::ExistingDirectory);
  build->add_option("--channel", build_channel)->check(CLI::IsMember({"luma", "chroma"}))->capture_default_str();
  build->add_option("--patch", cp.patch_size)->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--per-image", cp.patches_per_image)->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--k", cp.codevectors)->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--whiten", build_whiten)->check(CLI::IsMember({"zca", "fourier", "none"}))->capture_default_str();
  build->add_option("--max-iter", cp.max_iterations)->check(CLI::PositiveNumber)->capture_default_str();
  build->add_option("--seed", cp.seed)->capture_default_str();
  build->add_option("--out", build_out)->required();

  // eigen-spectrum
  auto* spectrum = app.add_subcommand("eigen-spectrum", "Eigenvalues of the descriptor correlation matrix");
  std::string spec_images, spec_out, spec_channel = "luma";
  std::size_t spec_patch = 8, spec_per_image = 512;
  std::uint64_t spec_seed = 0;
  spectrum->add_option("--images", spec_images)->required()->check(CLI::ExistingDirectory);
  spectrum->add_option("--channel", spec_channel)->check(CLI::IsMember({"luma", "chroma"}))->capture_default_str();
  spectrum->add_option("--patch", spec_patch)->check(CLI::PositiveNumber)->capture_default_str();
  spectrum->add_option("--per-image", spec_per_image)->check(CLI::PositiveNumber)->capture_default_str();
  spectrum->add_option("--seed", spec_seed)->capture_default_str();
  spectrum->add_option("--out", spec_out, "CSV (index,eigenvalue); stdout when omitted");

  // encode
  auto* enc = app.add_subcommand("encode", "Feature vector of one image");
  std::string enc_book, enc_image, enc_out;
  EncodeOptions eo;
  enc->add_option("--codebook", enc_book)->required()->check(CLI::ExistingFile);
  enc->add_option("--image", enc_image)->required()->check(CLI::ExistingFile);
  enc->add_flag("--chroma", eo.luma_chroma, "Joint luma + chroma features");
  enc->add_option("--descriptors", eo.descriptors)->check(CLI::PositiveNumber)->capture_default_str();
  enc->add_option("--seed", eo.seed)->capture_default_str();
  enc->add_option("--out", enc_out, "CSV with one row of 2K values; stdout when omitted");

  // train
  auto* train = app.add_subcommand("train", "Fit a nu-SVR quality model");
  std::string train_features, train_labels, train_out, train_kernel = "rbf";
  SvrParams svr;
  train->add_option("--features", train_features)->required()->check(CLI::ExistingFile);
  train->add_option("--labels", train_labels)->required()->check(CLI::ExistingFile);
  train->add_option("--c", svr.c)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--nu", svr.nu)->check(CLI::Range(1e-9, 1.0))->capture_default_str();
  train->add_option("--kernel", train_kernel)->check(CLI::IsMember({"rbf", "linear"}))->capture_default_str();
  train->add_option("--rbf-gamma", svr.kernel.gamma, "RBF width (default 1/features)");
  train->add_option("--out", train_out)->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Score feature rows with a trained model");
  std::string pred_model, pred_features, pred_out;
  predict->add_option("--model", pred_model)->required()->check(CLI::ExistingFile);
  predict->add_option("--features", pred_features)->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pred_out, "One score per line; stdout when omitted");

  // video-features
  auto* vid = app.add_subcommand("video-features", "Pooled features of a Y4M file or frame directory");
  std::string vid_frames, vid_book, vid_out, vid_rate = "1", vid_pool = "avg";
  VideoFeatureOptions vo;
  double vid_fps = 30.0;
  vid->add_option("--frames", vid_frames, "Y4M file or directory of numbered frames")->required()->check(CLI::ExistingPath);
  vid->add_option("--codebook", vid_book)->required()->check(CLI::ExistingFile);
  vid->add_option("--rate", vid_rate, "Sampled frames per second, 'all' or 'video'")->capture_default_str();
  vid->add_option("--pool", vid_pool)->check(CLI::IsMember({"avg", "std"}))->capture_default_str();
  vid->add_option("--frame-step", vo.frame_step, "Keep every n-th frame before sampling")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  vid->add_option("--segment", vo.segment_seconds, "Std pooling segment length in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  vid->add_option("--fps", vid_fps, "Frame rate of a frame directory")->check(CLI::PositiveNumber)->capture_default_str();
  vid->add_flag("--chroma", vo.encode.luma_chroma);
  vid->add_option("--descriptors", vo.encode.descriptors)->check(CLI::PositiveNumber)->capture_default_str();
  vid->add_option("--seed", vo.encode.seed)->capture_default_str();
  vid->add_option("--out", vid_out, "CSV with one row; stdout when omitted");

  // rescale
  auto* rescale = app.add_subcommand("rescale", "Bitrate rescaling of predicted scores");
  double rs_bitrate = 0.0, rs_c = 100.0, rs_k = 1.0;
  std::vector<double> rs_scores;
  std::string rs_calibrate;
  rescale->add_option("--bitrate", rs_bitrate, "Bitrate in kbps")->check(CLI::NonNegativeNumber);
  rescale->add_option("--c", rs_c)->check(CLI::PositiveNumber)->capture_default_str();
  rescale->add_option("--k", rs_k)->check(CLI::PositiveNumber)->capture_default_str();
  rescale->add_option("--score", rs_scores, "Raw scores; prints the multiplier alone when omitted");
  rescale->add_option("--calibrate", rs_calibrate, "CSV of raw_score,bitrate rows; prints fitted c and k")
      ->check(CLI::ExistingFile);

  // eval
  auto* ev = app.add_subcommand("eval", "Run a configured multi-split experiment");
  std::string ev_config, ev_out, ev_table;
  bool ev_timing = false;
  ev->add_option("--config", ev_config)->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "Report JSON; stdout when omitted");
  ev->add_option("--table", ev_table, "Also write a one-line CSV table");
  ev->add_flag("--with-timing", ev_timing, "Add wall-clock timings to the report");

  // bench
  auto* bench = app.add_subcommand("bench", "Time descriptor extraction, encoding and prediction; JSON on stdout");
  BenchOptions bo;
  std::string bench_book, bench_model, bench_images;
  std::size_t bench_k = 2048, bench_patch = 8, bench_sv = 2000, bench_count = 3, bench_size = 512;
  bench->add_option("--codebook", bench_book, "Codebook file (default: random)")->check(CLI::ExistingFile);
  bench->add_option("--model", bench_model, "Model file (default: random RBF model)")->check(CLI::ExistingFile);
  bench->add_option("--images", bench_images, "Image directory (default: synthetic images)")
      ->check(CLI::ExistingDirectory);
  bench->add_option("--k", bench_k, "Random codebook size")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--patch", bench_patch)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--support-vectors", bench_sv, "Random model size")->capture_default_str();
  bench->add_option("--count", bench_count, "Synthetic image count")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--size", bench_size, "Synthetic image side")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--descriptors", bo.descriptors)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--repetitions", bo.repetitions)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--warmup", bo.warmup)->capture_default_str();
  bench->add_option("--seed", bo.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (threads > 0) set_thread_limit(static_cast<std::size_t>(threads));
    if (verbose) log::set_level(log::Level::info);

    if (*synth) {
      const fs::path dir(synth_out);
      if (desk) {
        DeskParams params;
        params.references = desk_refs;
        params.seed = sp.seed;
        std::cout << write_desk_benchmark(dir, params).string() << "\n";
        return 0;
      }
      parse_size(synth_size, sp);
      sp.primitives = parse_primitives(synth_prims);
      sp.color_model = synth_color == "binary" ? ColorModel::binary : ColorModel::greyscale;
      sp.validate();
      fs::create_directories(dir);
      std::vector<ImagePlane> planes(synth_count);
      parallel_for(synth_count, [&](std::size_t i) {
        SynthParams p = sp;
        p.seed = derive_seed(sp.seed, "synth", i);
        planes[i] = generate_image(p).plane;
      });
      for (std::size_t i = 0; i < planes.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "synth_%05zu.%s", i, synth_format.c_str());
        write_image(dir / name, planes[i]);
      }
      return 0;
    }

    if (*build) {
      cp.channel = kChannel.at(build_channel);
      cp.whitening = kWhitening.at(build_whiten);
      cp.source_label = "images:" + fs::path(build_images).filename().string();
      const Codebook book = build_codebook(list_images(build_images), cp);
      book.save(build_out);
      log::info("codebook " + book.id() + " written to " + build_out);
      return 0;
    }

    if (*spectrum) {
      std::vector<ImagePlane> planes;
      const Channel channel = kChannel.at(spec_channel);
      for (const auto& path : list_images(spec_images)) {
        const YuvPlanes yuv = rgb_to_yuv(read_image(path));
        planes.push_back(channel == Channel::luma ? yuv.y : yuv.u);
      }
      if (planes.empty()) throw IoError("no images in " + spec_images);
      const DescriptorMatrix d =
          collect_descriptors(planes, channel, spec_patch, spec_per_image, spec_seed, PatchNormalization::raw);
      const std::vector<double> eig = eigen_spectrum(d);
      std::string text = "index,eigenvalue\n";
      for (std::size_t i = 0; i < eig.size(); ++i) text += std::to_string(i) + "," + format_double(eig[i]) + "\n";
      emit(spec_out, text);
      return 0;
    }

    if (*enc) {
      const Codebook book = Codebook::load(enc_book);
      emit(enc_out, csv_row(feature_values(book, rgb_to_yuv(read_image(enc_image)), eo)));
      return 0;
    }

    if (*train) {
      svr.kernel.kind = kKernel.at(train_kernel);
      const Eigen::MatrixXd features = read_numeric_csv(train_features);
      const std::vector<double> labels = column_values(read_numeric_csv(train_labels), "labels");
      SvrDiagnostics diag;
      const SvrModel model = train_nusvr(features, labels, svr, &diag);
      if (!diag.converged) log::warn("nu-SVR stopped at the iteration limit before reaching the tolerance");
      model.save(train_out);
      log::info("model with " + std::to_string(model.num_support_vectors()) + " support vectors written to " +
                train_out);
      return 0;
    }

    if (*predict) {
      const SvrModel model = SvrModel::load(pred_model);
      std::string text;
      for (double s : model.predict(read_numeric_csv(pred_features))) text += format_double(s) + "\n";
      emit(pred_out, text);
      return 0;
    }

    if (*vid) {
      vo.rate = parse_rate(vid_rate);
      vo.pooling = kPooling.at(vid_pool);
      const Codebook book = Codebook::load(vid_book);
      auto source = open_video(vid_frames, vid_fps);
      emit(vid_out, csv_row(pool(extract_series(book, *source, vo), vo)));
      return 0;
    }

    if (*rescale) {
      if (!rs_calibrate.empty()) {
        const Eigen::MatrixXd t = read_numeric_csv(rs_calibrate);
        if (t.cols() != 2) throw FormatError("--calibrate: expected raw_score,bitrate rows");
        const std::vector<double> raw(t.col(0).data(), t.col(0).data() + t.rows());
        const std::vector<double> rate(t.col(1).data(), t.col(1).data() + t.rows());
        const RescaleParams p = calibrate_rescale(raw, rate);
        std::cout << "c=" << format_double(p.c) << "\nk=" << format_double(p.k) << "\n";
        return 0;
      }
      if (rescale->count("--bitrate") == 0) throw ParameterError("rescale: --bitrate or --calibrate is required");
      if (rs_scores.empty()) {
        std::cout << format_double(bitrate_multiplier(rs_bitrate, rs_c, rs_k)) << "\n";
      } else {
        for (double s : rs_scores) std::cout << format_double(bitrate_rescale(s, rs_bitrate, rs_c, rs_k)) << "\n";
      }
      return 0;
    }

    if (*ev) {
      const ExperimentConfig config = load_config(ev_config);
      const EvalReport report = run_configured_experiment(config, ev_timing);
      emit(ev_out, report.to_json().dump(2) + "\n");
      if (!ev_table.empty())
        write_text(ev_table, report.table_csv(config.features.descriptors, config.codebook.codevectors));
      return 0;
    }

    if (*bench) {
      const Codebook book = bench_book.empty() ? random_codebook(bench_patch, bench_k, bo.seed) : Codebook::load(bench_book);
      const SvrModel model =
          bench_model.empty() ? random_model(2 * book.size(), bench_sv, bo.seed) : SvrModel::load(bench_model);
      std::vector<RgbImage> images;
      if (!bench_images.empty()) {
        for (const auto& p : list_images(bench_images)) images.push_back(read_image(p));
      } else {
        for (std::size_t i = 0; i < bench_count; ++i) {
          SynthParams p;
          p.width = p.height = bench_size;
          p.size_max = static_cast<double>(bench_size) / 2.0;
          p.color_model = ColorModel::greyscale;
          p.seed = derive_seed(bo.seed, "bench-image", i);
          images.push_back(RgbImage::from_gray(generate_image(p).plane));
        }
      }
      const TimingReport timing = bench_timing(book, images, model, bo);
      nlohmann::json out = {{"images", images.size()},
                            {"descriptors", bo.descriptors},
                            {"codevectors", book.size()},
                            {"patch_size", book.patch_size},
                            {"support_vectors", model.num_support_vectors()},
                            {"repetitions", bo.repetitions},
                            {"warmup", bo.warmup},
                            {"threads", thread_limit()},
                            {"timing_ms", to_json(timing)}};
      std::cout << out.dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "cbiqa: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cbiqa: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
