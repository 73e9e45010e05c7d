#include "twibridge/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "twibridge/errors.hpp"

namespace twibridge {

double Image::mean() const {
  if (data.empty()) return 0.0;
  return std::accumulate(data.begin(), data.end(), 0.0) / static_cast<double>(data.size());
}

void Image::validate() const {
  if (data.size() != height * width * channels) {
    throw ShapeError("image data length " + std::to_string(data.size()) + " does not match " +
                     std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels));
  }
  for (double v : data) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw ShapeError("image value outside [0, 1]");
  }
}

void quantize_8bit(Image& image) {
  for (double& v : image.data) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

std::size_t LabelMap::void_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kVoid));
}

void LabelMap::validate(std::size_t class_count) const {
  if (labels.size() != height * width) throw ShapeError("label map length does not match its dimensions");
  for (auto l : labels) {
    if (l != kVoid && l >= class_count) {
      throw ShapeError("label " + std::to_string(l) + " out of range for " + std::to_string(class_count) + " classes");
    }
  }
}

}  // namespace twibridge
