#include "forge/curate/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "forge/error.hpp"
#include "forge/numcore/ops.hpp"

namespace forge::curate {

double luma(double r, double g, double b) noexcept { return (299.0 * r + 587.0 * g + 114.0 * b) / 1000.0; }

namespace {

class PnmReader {
 public:
  explicit PnmReader(std::string_view bytes) : s_(bytes) {}

  // Next whitespace-separated header token, skipping '#' comments.
  unsigned long token() {
    for (;;) {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    const auto start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError("netpbm: expected a number at byte " + std::to_string(start));
    return std::stoul(std::string(s_.substr(start, pos_ - start)));
  }

  // Raster data starts after exactly one whitespace byte.
  std::string_view raster() {
    if (pos_ >= s_.size()) throw ParseError("netpbm: missing raster");
    return s_.substr(pos_ + 1);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 2;
};

}  // namespace

GrayImage decode_netpbm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || std::string_view("2356").find(bytes[1]) == std::string_view::npos) {
    throw ParseError("not a PGM/PPM image");
  }
  const char kind = bytes[1];
  const bool color = kind == '3' || kind == '6', ascii = kind == '2' || kind == '3';
  PnmReader in(bytes);
  GrayImage img;
  img.width = in.token();
  img.height = in.token();
  const auto maxval = in.token();
  if (img.width == 0 || img.height == 0) throw ParseError("netpbm: empty image");
  if (maxval == 0 || maxval > 65535) throw ParseError("netpbm: bad maxval");
  const std::size_t channels = color ? 3 : 1, n = img.width * img.height * channels;
  std::vector<double> samples(n);
  if (ascii) {
    for (auto& v : samples) v = static_cast<double>(in.token());
  } else {
    const auto raw = in.raster();
    const std::size_t bps = maxval > 255 ? 2 : 1;
    if (raw.size() < n * bps) throw ParseError("netpbm: truncated raster");
    for (std::size_t i = 0; i < n; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(raw.data()) + i * bps;
      samples[i] = bps == 2 ? double((p[0] << 8) | p[1]) : double(p[0]);
    }
  }
  img.pixels.resize(img.width * img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = color ? luma(samples[3 * i], samples[3 * i + 1], samples[3 * i + 2]) : samples[i];
  }
  return img;
}

GrayImage decode_png(std::string_view bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw ParseError(std::string("png: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ParseError(std::string("png: ") + image.message);
  }
  GrayImage img{image.width, image.height, {}};
  img.pixels.resize(img.width * img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = luma(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]);
  return img;
}

GrayImage decode_image(std::string_view bytes) {
  if (bytes.size() >= 8 && bytes.substr(1, 3) == "PNG") return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_netpbm(bytes);
  throw ParseError("unsupported image format");
}

GrayImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_image(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  for (double v : img.pixels) out.push_back(static_cast<char>(std::clamp(std::lround(v), 0L, 255L)));
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, std::size_t width, std::size_t height) {
  num::Tensor grid({img.height, img.width, 1}, img.pixels);
  auto out = num::bilinear_resize(grid, height, width);
  return {width, height, out.values()};
}

}  // namespace forge::curate
