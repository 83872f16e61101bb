#include "cbiqa/pipeline.hpp"

#include "cbiqa/bench.hpp"
#include "cbiqa/encoder.hpp"
#include "cbiqa/error.hpp"
#include "cbiqa/image_io.hpp"
#include "cbiqa/log.hpp"
#include "cbiqa/parallel.hpp"
#include "cbiqa/rng.hpp"
#include "cbiqa/video.hpp"

namespace cbiqa {

namespace {

CodebookParams codebook_params(const ExperimentConfig& config, std::string label) {
  CodebookParams p;
  p.channel = Channel::luma;
  p.patch_size = config.codebook.patch_size;
  p.patches_per_image = config.codebook.patches_per_image;
  p.codevectors = config.codebook.codevectors;
  p.whitening = config.codebook.whitening;
  p.seed = derive_seed(config.seed, "codebook", 0);
  p.source_label = std::move(label);
  return p;
}

VideoFeatureOptions video_options(const ExperimentConfig& config, std::uint64_t item_seed) {
  VideoFeatureOptions o;
  o.rate = config.pooling.rate;
  o.frame_step = config.pooling.frame_step;
  o.pooling = config.pooling.mode == Pooling::none ? Pooling::average : config.pooling.mode;
  o.segment_seconds = config.pooling.segment_seconds;
  o.encode = encode_options(config, item_seed);
  return o;
}

LabeledSet allocate(std::string name, std::size_t items, std::size_t dim) {
  LabeledSet set;
  set.name = std::move(name);
  set.features.resize(static_cast<Eigen::Index>(items), static_cast<Eigen::Index>(dim));
  set.mos.resize(items);
  set.reference_ids.resize(items);
  return set;
}

void store(LabeledSet& set, std::size_t row, const std::vector<double>& values) {
  if (static_cast<Eigen::Index>(values.size()) != set.features.cols())
    throw DimensionError("feature length " + std::to_string(values.size()) + " differs from " +
                         std::to_string(set.features.cols()));
  for (std::size_t f = 0; f < values.size(); ++f)
    set.features(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(f)) = values[f];
}

std::size_t feature_dim(const Codebook& book, const ExperimentConfig& config) {
  const std::size_t per_frame = 2 * book.size();
  const bool video_std = config.pooling.mode == Pooling::std_dev;
  return video_std ? 2 * per_frame : per_frame;
}

LabeledSet desk_video_features(const Codebook& book, const ExperimentConfig& config) {
  DeskVideoParams params;
  params.references = config.dataset.desk_references;
  params.seed = derive_seed(config.seed, "desk-video", 0);
  const std::vector<DeskVideo> videos = make_desk_videos(params);
  LabeledSet set = allocate("desk-video", videos.size(), feature_dim(book, config));
  // Frames inside a clip are already encoded in parallel.
  for (std::size_t v = 0; v < videos.size(); ++v) {
    auto source = memory_source(videos[v].frames, videos[v].fps);
    const VideoFeatureOptions o = video_options(config, derive_seed(config.seed, "items", v));
    store(set, v, pool(extract_series(book, *source, o), o));
    set.mos[v] = videos[v].mos;
    set.reference_ids[v] = videos[v].reference_id;
  }
  return set;
}

LabeledSet dataset_features(const Codebook& book, const std::string& name, const ExperimentConfig& config) {
  if (name == "desk") {
    DeskParams params;
    params.references = config.dataset.desk_references;
    params.seed = derive_seed(config.seed, "desk", 0);
    return compute_features(book, make_desk_benchmark(params), config);
  }
  if (name == "desk-video") return desk_video_features(book, config);
  return compute_features(book, load_manifest(name), config);
}

}  // namespace

EncodeOptions encode_options(const ExperimentConfig& config, std::uint64_t item_seed) {
  EncodeOptions o;
  o.descriptors = config.features.descriptors;
  o.seed = item_seed;
  o.luma_chroma = config.features.channels == ChannelMode::luma_chroma;
  return o;
}

Codebook make_codebook(const ExperimentConfig& config) {
  const auto& cb = config.codebook;
  switch (cb.source) {
    case CodebookSource::file: {
      Codebook book = Codebook::load(cb.path);
      if (book.patch_size != cb.patch_size)
        log::warn("codebook file uses patch size " + std::to_string(book.patch_size) + ", config says " +
                  std::to_string(cb.patch_size));
      return book;
    }
    case CodebookSource::dataset:
      return build_codebook(list_images(cb.path), codebook_params(config, "dataset:" + cb.path.generic_string()));
    case CodebookSource::synthetic: {
      std::vector<ImagePlane> planes(cb.synthetic_images);
      parallel_for(planes.size(), [&](std::size_t i) {
        SynthParams p = cb.synth;
        p.seed = derive_seed(config.seed, "synth", i);
        planes[i] = generate_image(p).plane;
      });
      return build_codebook(planes, codebook_params(config, "synthetic dead-leaves x" + std::to_string(planes.size())));
    }
  }
  throw ParameterError("unknown codebook source");
}

LabeledSet compute_features(const Codebook& book, const DatasetManifest& manifest, const ExperimentConfig& config) {
  if (manifest.entries.empty()) throw FormatError("manifest " + manifest.name + " has no entries");
  bool any_video = false;
  for (const auto& e : manifest.entries) any_video = any_video || e.kind == MediaKind::video;
  // Images in a mixed manifest are treated as one-frame clips so the widths agree.
  const std::size_t dim = any_video ? feature_dim(book, config) : 2 * book.size();
  LabeledSet set = allocate(manifest.name, manifest.size(), dim);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    set.mos[i] = manifest.entries[i].mos;
    set.reference_ids[i] = manifest.entries[i].reference_id;
  }
  if (!any_video) {
    parallel_for(manifest.size(), [&](std::size_t i) {
      const RgbImage image = read_image(manifest.entries[i].media_path);
      store(set, i, feature_values(book, rgb_to_yuv(image), encode_options(config, derive_seed(config.seed, "items", i))));
    });
    return set;
  }
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const ManifestEntry& e = manifest.entries[i];
    std::unique_ptr<FrameSource> source;
    if (e.kind == MediaKind::video) {
      source = open_video(e.media_path);
    } else {
      source = memory_source({rgb_to_yuv(read_image(e.media_path)).y}, 1.0);
    }
    const VideoFeatureOptions o = video_options(config, derive_seed(config.seed, "items", i));
    store(set, i, pool(extract_series(book, *source, o), o));
  }
  return set;
}

LabeledSet compute_features(const Codebook& book, const std::vector<DeskItem>& items, const ExperimentConfig& config,
                            const std::string& name) {
  LabeledSet set = allocate(name, items.size(), 2 * book.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const ImagePlane& y = items[i].image;
    YuvPlanes yuv{y, ImagePlane(y.width, y.height, 128.0), ImagePlane(y.width, y.height, 128.0)};
    store(set, i, feature_values(book, yuv, encode_options(config, derive_seed(config.seed, "items", i))));
    set.mos[i] = items[i].mos;
    set.reference_ids[i] = items[i].reference_id;
  });
  return set;
}

namespace {

std::vector<RgbImage> timing_images(const ExperimentConfig& config) {
  constexpr std::size_t kImages = 5;
  std::vector<RgbImage> images;
  const std::string& train = config.dataset.train;
  if (train != "desk" && train != "desk-video") {
    for (const auto& e : load_manifest(train).entries) {
      if (images.size() == kImages) break;
      if (e.kind == MediaKind::image) images.push_back(read_image(e.media_path));
    }
  }
  if (images.empty()) {
    DeskParams params;
    params.references = 2;
    params.seed = derive_seed(config.seed, "desk", 0);
    for (const auto& item : make_desk_benchmark(params)) {
      if (images.size() == kImages) break;
      images.push_back(RgbImage::from_gray(item.image));
    }
  }
  return images;
}

}  // namespace

EvalReport run_configured_experiment(const ExperimentConfig& config, bool with_timing) {
  const Codebook book = make_codebook(config);
  const LabeledSet train = dataset_features(book, config.dataset.train, config);
  std::vector<LabeledSet> cross;
  for (const auto& name : config.dataset.cross) cross.push_back(dataset_features(book, name, config));
  ExperimentSpec spec;
  spec.splits = config.splits;
  spec.train_fraction = config.train_fraction;
  spec.seed = derive_seed(config.seed, "splits", 0);
  spec.svr = config.regressor;
  EvalReport report = run_experiment(train, cross, spec);
  report.config = config.to_json();
  report.config["codebook_id"] = book.id();
  if (with_timing) {
    const SvrModel model = train_nusvr(train.features, train.mos, config.regressor);
    BenchOptions options;
    options.descriptors = config.features.descriptors;
    options.seed = derive_seed(config.seed, "bench", 0);
    report.timing = bench_timing(book, timing_images(config), model, options);
  }
  return report;
}

}  // namespace cbiqa
