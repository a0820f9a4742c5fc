#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace craqreg {

/// 8-bit image, row-major, interleaved. channels is 1 (gray) or 3 (RGB).
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, std::uint8_t fill = 0);
  ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> samples);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return samples_.empty(); }

  std::uint8_t& at(int x, int y, int c = 0) {
    return samples_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return samples_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<std::uint8_t> samples() noexcept { return samples_; }
  std::span<const std::uint8_t> samples() const noexcept { return samples_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> samples_;
};

/// Real-valued per-pixel map (crack strength, keypoint heatmap).
class ScalarMap {
 public:
  ScalarMap() = default;
  ScalarMap(int width, int height, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  float& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  float at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  /// Border-replicating access.
  float clamped(int x, int y) const;

  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }

  friend bool operator==(const ScalarMap&, const ScalarMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
};

/// Rec.601 luma (0.299 R + 0.587 G + 0.114 B), unrounded.
float luma(const ImageBuffer& img, int x, int y);
std::uint8_t luma_u8(const ImageBuffer& img, int x, int y);

ScalarMap to_gray_map(const ImageBuffer& img);
ImageBuffer to_gray(const ImageBuffer& img);
ImageBuffer to_rgb(const ImageBuffer& img);

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int width, int height);
/// Extends the image to the given size by replicating the last row/column.
ImageBuffer pad_replicate(const ImageBuffer& img, int width, int height);

/// Decodes PNG/JPEG/TIFF (8-bit). Color images become 3-channel RGB,
/// everything else 1-channel. Throws Error(Io) on failure.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);
ImageBuffer read_image(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
void write_png(const ImageBuffer& img, const std::filesystem::path& path);

}  // namespace craqreg
