#pragma once

#include <cstdint>
#include <vector>

namespace dtsnn {

/// Channel-planar 8-bit image: all of channel 0, then channel 1, ...
struct Image {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 1;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::uint32_t c, std::uint32_t y, std::uint32_t x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

struct LabeledImages {
  std::vector<Image> images;
  std::vector<std::uint8_t> labels;  // empty when unlabeled
};

}  // namespace dtsnn
