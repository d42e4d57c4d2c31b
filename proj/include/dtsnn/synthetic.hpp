#pragma once

// Seeded random models and images for benchmarks and smoke runs when no
// trained model or dataset is at hand.

#include <cstdint>
#include <random>
#include <vector>

#include "dtsnn/image.hpp"
#include "dtsnn/model.hpp"

namespace dtsnn {

/// Random model over `geometry` with the given hidden/output sizes. The input
/// fan is the patch-grid size. Weights are uniform over [-0.5, 1.0].
inline NetworkModel random_model(std::vector<std::uint32_t> hidden_and_output, std::uint64_t seed,
                                 ImageGeometry geometry = {}, std::uint32_t patch_side = 9) {
  std::mt19937_64 rng(seed);
  NetworkModel m;
  m.geometry = geometry;
  m.kernel.patch_side = patch_side;
  m.kernel.channels = geometry.channels;
  m.kernel.weights.resize(static_cast<std::size_t>(geometry.channels) * patch_side * patch_side);
  constexpr std::int8_t kTernary[] = {-1, 0, 1, 1};  // lean excitatory so patches fire
  for (auto& w : m.kernel.weights) w = kTernary[rng() % 4];
  const auto fan_in = patch_grid(geometry.height, geometry.width, patch_side, m.kernel.stride).count();

  const auto one = m.weight_format.one();
  std::uniform_int_distribution<std::int64_t> wd(-one / 2, one);
  std::size_t prev = fan_in;
  for (const auto n : hidden_and_output) {
    LayerWeights w(prev, n, m.weight_format);
    for (std::size_t i = 0; i < prev; ++i) {
      for (std::size_t j = 0; j < n; ++j) w.at(i, j) = static_cast<std::int32_t>(wd(rng));
    }
    m.network.layers.push_back(std::move(w));
    prev = n;
  }
  m.metadata = "random model, seed " + std::to_string(seed);
  m.validate();
  return m;
}

/// Sparse random images: about a third of the pixels are zero.
inline std::vector<Image> random_images(std::size_t count, std::uint64_t seed, ImageGeometry geometry = {}) {
  std::mt19937_64 rng(seed);
  std::vector<Image> out;
  out.reserve(count);
  const std::size_t n = static_cast<std::size_t>(geometry.height) * geometry.width * geometry.channels;
  for (std::size_t k = 0; k < count; ++k) {
    Image img{geometry.height, geometry.width, geometry.channels, std::vector<std::uint8_t>(n)};
    for (auto& p : img.pixels) p = rng() % 3 == 0 ? 0 : static_cast<std::uint8_t>(rng());
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace dtsnn
