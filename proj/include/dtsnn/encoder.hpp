#pragma once

// Learned patch encoding: every square patch is serialized row-major (channel
// after channel for multi-channel images) and streamed, one pixel per tick,
// into a LIF neuron whose weights are -1, 0 or +1. The neuron's spikes on the
// shared 0..L-1 timeline become that patch's input spike train.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtsnn/codec.hpp"
#include "dtsnn/error.hpp"
#include "dtsnn/fixed_point.hpp"
#include "dtsnn/image.hpp"

namespace dtsnn {

enum class KernelSharing : std::uint8_t { shared = 0, per_patch = 1 };

enum class PixelNormalization : std::uint8_t {
  unit = 0,      // [0,255] -> [0,1], 255 maps to exactly 1.0
  raw_byte = 1,  // pixel / 256 by shift
};

struct TernaryKernel {
  std::uint32_t patch_side = 9;
  std::uint32_t channels = 1;
  std::uint32_t stride = 1;
  KernelSharing sharing = KernelSharing::shared;
  /// One block of channels*p*p weights (shared) or one block per patch.
  std::vector<std::int8_t> weights;

  std::size_t serial_length() const noexcept {
    return static_cast<std::size_t>(channels) * patch_side * patch_side;
  }

  std::span<const std::int8_t> block(std::size_t patch) const {
    const std::size_t n = serial_length();
    const std::size_t k = sharing == KernelSharing::shared ? 0 : patch;
    return {weights.data() + k * n, n};
  }

  void validate(std::size_t patch_count) const {
    if (patch_side == 0 || stride == 0 || channels == 0) {
      throw Error(ErrorCode::invariant_violation, "kernel geometry must be non-zero");
    }
    const std::size_t blocks = sharing == KernelSharing::shared ? 1 : patch_count;
    if (weights.size() != blocks * serial_length()) {
      throw Error(ErrorCode::fan_mismatch, "kernel has " + std::to_string(weights.size()) +
                                               " weights, expected " + std::to_string(blocks * serial_length()));
    }
    for (const auto w : weights) {
      if (w < -1 || w > 1) throw Error(ErrorCode::invariant_violation, "kernel weight not in {-1,0,1}");
    }
  }

  friend bool operator==(const TernaryKernel&, const TernaryKernel&) = default;
};

struct EncoderConfig {
  FixedPointFormat format = kDefaultPotentialFormat;
  PixelNormalization normalization = PixelNormalization::unit;
  unsigned bitwidth = 2;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct PatchGrid {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::size_t count() const noexcept { return static_cast<std::size_t>(rows) * cols; }
};

inline PatchGrid patch_grid(std::uint32_t height, std::uint32_t width, std::uint32_t p, std::uint32_t stride) {
  if (p == 0 || stride == 0) throw Error(ErrorCode::invariant_violation, "patch side and stride must be positive");
  if (p > height || p > width) {
    throw Error(ErrorCode::invariant_violation,
                "patch side " + std::to_string(p) + " exceeds image " + std::to_string(height) + "x" +
                    std::to_string(width));
  }
  return {(height - p) / stride + 1, (width - p) / stride + 1};
}

/// Patches in row-major patch order, each serialized row-major, channel-serial.
inline std::vector<std::vector<std::uint8_t>> extract_patches(const Image& image, std::uint32_t p,
                                                              std::uint32_t stride = 1) {
  const PatchGrid grid = patch_grid(image.height, image.width, p, stride);
  std::vector<std::vector<std::uint8_t>> out;
  out.reserve(grid.count());
  for (std::uint32_t py = 0; py < grid.rows; ++py) {
    for (std::uint32_t px = 0; px < grid.cols; ++px) {
      std::vector<std::uint8_t> serial;
      serial.reserve(static_cast<std::size_t>(image.channels) * p * p);
      for (std::uint32_t c = 0; c < image.channels; ++c) {
        for (std::uint32_t y = 0; y < p; ++y) {
          for (std::uint32_t x = 0; x < p; ++x) serial.push_back(image.at(c, py * stride + y, px * stride + x));
        }
      }
      out.push_back(std::move(serial));
    }
  }
  return out;
}

/// Per-byte fixed-point pixel values, built once per config.
class PixelTable {
 public:
  explicit PixelTable(const EncoderConfig& cfg) {
    cfg.format.validate();
    const unsigned f = cfg.format.fraction_bits;
    for (unsigned v = 0; v < 256; ++v) {
      if (cfg.normalization == PixelNormalization::unit) {
        table_[v] = ((static_cast<std::int64_t>(v) << f) + 127) / 255;
      } else {
        table_[v] = f >= 8 ? static_cast<std::int64_t>(v) << (f - 8) : static_cast<std::int64_t>(v) >> (8 - f);
      }
    }
  }
  std::int64_t operator[](std::uint8_t v) const noexcept { return table_[v]; }

 private:
  std::array<std::int64_t, 256> table_{};
};

/// One encoder neuron over pre-scaled serial values. Generic in the value type
/// so it can be instantiated with any integer-like type offering +, -, >>,
/// and comparisons; the kernel only selects add, subtract or skip.
template <class Value>
std::vector<Tick> run_encoder_neuron(std::span<const Value> values, std::span<const std::int8_t> kernel,
                                     const Value& theta, const Value& lo, const Value& hi) {
  if (values.size() != kernel.size()) throw Error(ErrorCode::fan_mismatch, "kernel does not match patch length");
  std::vector<Tick> times;
  Value p{};
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j > 0) p = p >> 1;
    if (kernel[j] > 0) {
      p = p + values[j];
    } else if (kernel[j] < 0) {
      p = p - values[j];
    }
    if (p < lo) p = lo;
    if (hi < p) p = hi;
    if (p >= theta) {
      p = p - theta;
      times.push_back(j);
    }
  }
  return times;
}

/// Spike ticks of one encoder neuron over a serialized patch.
inline std::vector<Tick> encode_patch_times(std::span<const std::uint8_t> serial, std::span<const std::int8_t> kernel,
                                            const PixelTable& table, const FixedPointFormat& fmt) {
  std::vector<std::int64_t> values(serial.size());
  for (std::size_t j = 0; j < serial.size(); ++j) values[j] = table[serial[j]];
  return run_encoder_neuron<std::int64_t>(values, kernel, fmt.one(), fmt.min_raw(), fmt.max_raw());
}

inline std::vector<DiffSpikeTrain> encode_image(const Image& image, const TernaryKernel& kernel,
                                                const EncoderConfig& cfg) {
  if (image.channels != kernel.channels) {
    throw Error(ErrorCode::fan_mismatch, "image has " + std::to_string(image.channels) + " channels, kernel " +
                                             std::to_string(kernel.channels));
  }
  const auto patches = extract_patches(image, kernel.patch_side, kernel.stride);
  kernel.validate(patches.size());
  const PixelTable table(cfg);
  std::vector<DiffSpikeTrain> trains;
  trains.reserve(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    AbsSpikeTrain abs;
    abs.times = encode_patch_times(patches[i], kernel.block(i), table, cfg.format);
    abs.duration = abs.times.empty() ? 0 : abs.times.back();
    trains.push_back(from_absolute(abs, cfg.bitwidth));
  }
  return trains;
}

struct EncodedDataset {
  std::vector<std::vector<DiffSpikeTrain>> samples;
  Histogram histogram;
  /// Present when at least one spike was produced.
  std::optional<CostReport> cost;
};

inline EncodedDataset encode_dataset(std::span<const Image> images, const TernaryKernel& kernel,
                                     const EncoderConfig& cfg, BitwidthRange range = {}) {
  EncodedDataset out;
  out.samples.reserve(images.size());
  for (const auto& img : images) {
    if (img.height != images.front().height || img.width != images.front().width ||
        img.channels != images.front().channels) {
      throw Error(ErrorCode::fan_mismatch, "dataset images differ in shape");
    }
    out.samples.push_back(encode_image(img, kernel, cfg));
    for (const auto& t : out.samples.back()) accumulate_histogram(out.histogram, t);
  }
  if (!out.histogram.empty()) out.cost = optimal_bitwidth(out.histogram, range);
  return out;
}

}  // namespace dtsnn
