#pragma once

#include <cstddef>
#include <filesystem>
#include <string_view>
#include <vector>

namespace forge::curate {

// Single-channel raster, row-major, values in the source's intensity scale.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

// Luma with the usual 299/587/114 weights.
double luma(double r, double g, double b) noexcept;

// Plain and raw PGM/PPM (P2, P3, P5, P6), any maxval up to 65535.
GrayImage decode_netpbm(std::string_view bytes);
GrayImage decode_png(std::string_view bytes);
// Picks the decoder from the magic bytes. Throws ParseError when neither fits.
GrayImage decode_image(std::string_view bytes);
GrayImage load_image(const std::filesystem::path& path);

// Raw 8-bit PGM, handy for fixtures.
std::string encode_pgm(const GrayImage& img);

// Bilinear resample with half-pixel centers.
GrayImage resize_bilinear(const GrayImage& img, std::size_t width, std::size_t height);

}  // namespace forge::curate
