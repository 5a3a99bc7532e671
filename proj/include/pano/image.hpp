#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pano {

/// 8-bit RGB raster, row-major, top-left origin, channels interleaved.
struct RgbImage {
  int width{0};
  int height{0};
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  [[nodiscard]] std::uint8_t* at(int x, int y) noexcept {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  [[nodiscard]] const std::uint8_t* at(int x, int y) const noexcept {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  bool operator==(const RgbImage&) const = default;
};

/// Decodes PNG or JPEG, sniffed from the leading bytes. Throws std::runtime_error.
[[nodiscard]] RgbImage decode_image(std::span<const std::uint8_t> bytes);
[[nodiscard]] RgbImage load_image(const std::filesystem::path& path);

[[nodiscard]] std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const RgbImage& image, const std::filesystem::path& path);
[[nodiscard]] std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality = 90);

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

[[nodiscard]] std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace pano
