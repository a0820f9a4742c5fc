#include "craqreg/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "craqreg/error.hpp"

namespace craqreg {

ImageBuffer::ImageBuffer(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
    throw Error(ErrorKind::InvalidInput, "invalid image geometry");
  }
  samples_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
  if (width < 1 || height < 1 || (channels != 1 && channels != 3) ||
      samples_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorKind::InvalidInput, "sample count does not match image geometry");
  }
}

ScalarMap::ScalarMap(int width, int height, float fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidInput, "invalid map geometry");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

float ScalarMap::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y);
}

float luma(const ImageBuffer& img, int x, int y) {
  if (img.channels() == 1) return static_cast<float>(img.at(x, y));
  return 0.299f * img.at(x, y, 0) + 0.587f * img.at(x, y, 1) + 0.114f * img.at(x, y, 2);
}

std::uint8_t luma_u8(const ImageBuffer& img, int x, int y) {
  if (img.channels() == 1) return img.at(x, y);
  const float v = luma(img, x, y);
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

ScalarMap to_gray_map(const ImageBuffer& img) {
  ScalarMap out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.at(x, y) = luma(img, x, y);
  return out;
}

ImageBuffer to_gray(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  ImageBuffer out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.at(x, y) = luma_u8(img, x, y);
  return out;
}

ImageBuffer to_rgb(const ImageBuffer& img) {
  if (img.channels() == 3) return img;
  ImageBuffer out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y);
  return out;
}

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || width < 1 || height < 1 || x0 + width > img.width() ||
      y0 + height > img.height()) {
    throw Error(ErrorKind::InvalidInput, "crop window outside image");
  }
  ImageBuffer out(width, height, img.channels());
  const std::size_t row = static_cast<std::size_t>(width) * img.channels();
  for (int y = 0; y < height; ++y) {
    const auto src = img.samples().subspan(
        (static_cast<std::size_t>(y0 + y) * img.width() + x0) * img.channels(), row);
    std::copy(src.begin(), src.end(),
              out.samples().begin() + static_cast<std::ptrdiff_t>(y * row));
  }
  return out;
}

ImageBuffer pad_replicate(const ImageBuffer& img, int width, int height) {
  if (width == img.width() && height == img.height()) return img;
  ImageBuffer out(width, height, img.channels());
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(y, img.height() - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(x, img.width() - 1);
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

namespace {

ImageBuffer from_mat(const cv::Mat& decoded) {
  cv::Mat m = decoded;
  if (m.depth() != CV_8U) {
    throw Error(ErrorKind::Io, "only 8-bit images are supported");
  }
  if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2RGB);
  else if (m.channels() == 3) cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
  else if (m.channels() != 1) throw Error(ErrorKind::Io, "unsupported channel count");
  if (!m.isContinuous()) m = m.clone();
  std::vector<std::uint8_t> samples(m.data, m.data + m.total() * m.channels());
  return ImageBuffer(m.cols, m.rows, m.channels(), std::move(samples));
}

}  // namespace

ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw Error(ErrorKind::Io, "empty image data");
  const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat m;
  try {
    m = cv::imdecode(raw, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::Io, std::string("image decoding failed: ") + e.what());
  }
  if (m.empty()) throw Error(ErrorKind::Io, "unsupported or corrupt image data");
  return from_mat(m);
}

ImageBuffer read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open image: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(ErrorKind::Io, path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  cv::Mat m(img.height(), img.width(), img.channels() == 3 ? CV_8UC3 : CV_8UC1,
            const_cast<std::uint8_t*>(img.samples().data()));
  cv::Mat bgr;
  if (img.channels() == 3) cv::cvtColor(m, bgr, cv::COLOR_RGB2BGR);
  else bgr = m;
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", bgr, out)) throw Error(ErrorKind::Io, "PNG encoding failed");
  return out;
}

void write_png(const ImageBuffer& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace craqreg
