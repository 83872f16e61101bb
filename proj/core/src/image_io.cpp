#include "cbiqa/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include <png.h>

#include "binary_io.hpp"
#include "cbiqa/error.hpp"

namespace cbiqa {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

RgbImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!std::ifstream(path, std::ios::binary)) throw IoError("cannot open " + path.string());
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw FormatError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
  }
  RgbImage out(image.width, image.height);
  std::transform(buffer.begin(), buffer.end(), out.rgb.begin(), [](std::uint8_t b) { return double(b); });
  return out;
}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& data, bool rgb) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
}

// Next whitespace-delimited token of a PNM header, skipping '#' comments.
std::string pnm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) token.push_back(static_cast<char>(bytes[pos++]));
  return token;
}

RgbImage read_pnm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  std::size_t pos = 0;
  const std::string magic = pnm_token(bytes, pos);
  if (magic != "P6" && magic != "P5") throw FormatError(path.string() + ": unsupported PNM type " + magic);
  std::size_t width = 0, height = 0, maxval = 0;
  try {
    width = std::stoul(pnm_token(bytes, pos));
    height = std::stoul(pnm_token(bytes, pos));
    maxval = std::stoul(pnm_token(bytes, pos));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PNM header");
  }
  ++pos;  // single whitespace after maxval
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535)
    throw FormatError(path.string() + ": malformed PNM header");
  const std::size_t channels = magic == "P6" ? 3 : 1;
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t needed = width * height * channels * sample_bytes;
  if (bytes.size() < pos + needed) throw FormatError(path.string() + ": truncated PNM data");
  const double scale = 255.0 / static_cast<double>(maxval);
  RgbImage out(width, height);
  for (std::size_t i = 0; i < width * height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t sample = i * channels + (channels == 3 ? c : 0);
      double v = 0.0;
      if (sample_bytes == 1) {
        v = bytes[pos + sample];
      } else {
        v = (bytes[pos + 2 * sample] << 8) | bytes[pos + 2 * sample + 1];
      }
      out.rgb[3 * i + c] = v * scale;
    }
  }
  return out;
}

void write_pnm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& data, bool rgb) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << (rgb ? "P6" : "P5") << '\n' << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return read_pnm(path);
  throw FormatError("unsupported image format: " + path.string());
}

void write_image(const std::filesystem::path& path, const ImagePlane& plane) {
  std::vector<std::uint8_t> data(plane.samples.size());
  std::transform(plane.samples.begin(), plane.samples.end(), data.begin(), to_byte);
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, plane.width, plane.height, data, false);
  } else if (ext == ".pgm") {
    write_pnm(path, plane.width, plane.height, data, false);
  } else if (ext == ".ppm") {
    write_image(path, RgbImage::from_gray(plane));
  } else {
    throw FormatError("unsupported output format: " + path.string());
  }
}

void write_image(const std::filesystem::path& path, const RgbImage& image) {
  std::vector<std::uint8_t> data(image.rgb.size());
  std::transform(image.rgb.begin(), image.rgb.end(), data.begin(), to_byte);
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, image.width, image.height, data, true);
  } else if (ext == ".ppm") {
    write_pnm(path, image.width, image.height, data, true);
  } else {
    throw FormatError("unsupported output format: " + path.string());
  }
}

YuvFrame read_raw_yuv420(const std::filesystem::path& path, std::size_t width, std::size_t height,
                         std::size_t index) {
  if (width == 0 || height == 0) throw DimensionError("raw YUV needs positive dimensions");
  const std::size_t cw = (width + 1) / 2;
  const std::size_t ch = (height + 1) / 2;
  const std::size_t frame_bytes = width * height + 2 * cw * ch;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(static_cast<std::streamoff>(frame_bytes * index));
  std::vector<std::uint8_t> data(frame_bytes);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(frame_bytes));
  if (in.gcount() != static_cast<std::streamsize>(frame_bytes))
    throw FormatError(path.string() + ": frame " + std::to_string(index) + " is truncated");
  YuvFrame frame{ImagePlane(width, height), ImagePlane(width, height), ImagePlane(width, height)};
  for (std::size_t i = 0; i < width * height; ++i) frame.y.samples[i] = data[i];
  const std::uint8_t* u = data.data() + width * height;
  const std::uint8_t* v = u + cw * ch;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      frame.u.at(x, y) = u[(y / 2) * cw + x / 2];
      frame.v.at(x, y) = v[(y / 2) * cw + x / 2];
    }
  }
  return frame;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower_extension(entry.path());
    if (ext == ".png" || ext == ".ppm" || ext == ".pgm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cbiqa
