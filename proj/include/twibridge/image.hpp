#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace twibridge {

inline constexpr std::uint8_t kVoid = 255;

// Row-major, channel-interleaved image with values in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t ch = 3, double fill = 0.0)
      : height(h), width(w), channels(ch), data(h * w * ch, fill) {}

  double& at(std::size_t y, std::size_t x, std::size_t c) { return data[(y * width + x) * channels + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return data[(y * width + x) * channels + c]; }

  std::size_t pixel_count() const { return height * width; }
  double mean() const;

  // Throws ShapeError on a length mismatch or a value outside [0, 1].
  void validate() const;

  bool operator==(const Image&) const = default;
};

// Rounds every value to the nearest multiple of 1/255 so the in-memory image
// matches its 8-bit PPM encoding exactly.
void quantize_8bit(Image& image);

struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), labels(h * w, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }

  std::size_t void_count() const;
  // Throws ShapeError when a non-void label is >= class_count.
  void validate(std::size_t class_count) const;

  bool operator==(const LabelMap&) const = default;
};

}  // namespace twibridge
