#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dtsnn/encoder.hpp"
#include "dtsnn/lif.hpp"
#include "oracles.hpp"

using namespace dtsnn;

namespace {

Image random_image(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w, std::uint32_t c = 1) {
  Image img{h, w, c, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w * c)};
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() % 3 == 0 ? 0 : rng() % 256);
  return img;
}

TernaryKernel random_kernel(std::mt19937_64& rng, std::uint32_t p, std::uint32_t c = 1) {
  TernaryKernel k;
  k.patch_side = p;
  k.channels = c;
  k.weights.resize(static_cast<std::size_t>(c) * p * p);
  for (auto& w : k.weights) w = static_cast<std::int8_t>(static_cast<int>(rng() % 3) - 1);
  return k;
}

/// Float neuron over one serialized patch.
std::vector<Tick> float_patch_times(const std::vector<std::uint8_t>& serial, std::span<const std::int8_t> kernel) {
  std::vector<Tick> out;
  double p = 0;
  for (std::size_t j = 0; j < serial.size(); ++j) {
    p *= 0.5;
    p += kernel[j] * (serial[j] / 255.0);
    if (p >= 1.0) {
      p -= 1.0;
      out.push_back(j);
    }
  }
  return out;
}

}  // namespace

TEST(ExtractPatches, Counts) {
  const Image mnist{28, 28, 1, std::vector<std::uint8_t>(784, 0)};
  const auto p9 = extract_patches(mnist, 9);
  EXPECT_EQ(p9.size(), 400u);
  EXPECT_EQ(p9.front().size(), 81u);
  EXPECT_EQ(extract_patches(mnist, 3).size(), 676u);
  EXPECT_EQ(extract_patches(mnist, 28).size(), 1u);
  EXPECT_EQ(extract_patches(mnist, 3, 5).size(), 36u);
  EXPECT_THROW(extract_patches(mnist, 29), Error);
}

TEST(ExtractPatches, RowMajorOrder) {
  Image img{3, 4, 1, {}};
  for (int i = 0; i < 12; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i));
  const auto p = extract_patches(img, 2);
  ASSERT_EQ(p.size(), 6u);
  EXPECT_EQ(p[0], (std::vector<std::uint8_t>{0, 1, 4, 5}));
  EXPECT_EQ(p[1], (std::vector<std::uint8_t>{1, 2, 5, 6}));
  EXPECT_EQ(p[3], (std::vector<std::uint8_t>{4, 5, 8, 9}));
}

TEST(ExtractPatches, ChannelSerial) {
  Image img{2, 2, 3, {}};
  for (int i = 0; i < 12; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i));
  const auto p = extract_patches(img, 2);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].size(), 12u);
  EXPECT_EQ(p[0][4], 4);
}

TEST(EncodeImage, ZeroImageIsSilent) {
  std::mt19937_64 rng(1);
  const Image img{28, 28, 1, std::vector<std::uint8_t>(784, 0)};
  const auto trains = encode_image(img, random_kernel(rng, 9), {});
  ASSERT_EQ(trains.size(), 400u);
  for (const auto& t : trains) EXPECT_TRUE(t.empty());
}

TEST(EncodeImage, SaturatedPatchFiresEveryTick) {
  const Image img{3, 3, 1, std::vector<std::uint8_t>(9, 255)};
  TernaryKernel k;
  k.patch_side = 3;
  k.weights.assign(9, 1);
  const auto trains = encode_image(img, k, {});
  ASSERT_EQ(trains.size(), 1u);
  const auto abs = to_absolute(trains[0]);
  EXPECT_EQ(abs.times, (std::vector<Tick>{0, 1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(EncodeImage, MatchesFloatNeuron) {
  std::mt19937_64 rng(77);
  int compared = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const Image img = random_image(rng, 9, 9);
    const TernaryKernel k = random_kernel(rng, 9);
    const auto trains = encode_image(img, k, {});
    const auto serial = extract_patches(img, 9).front();
    EXPECT_EQ(to_absolute(trains[0]).times, float_patch_times(serial, k.block(0)));
    ++compared;
  }
  EXPECT_EQ(compared, 200);
}

TEST(EncodeImage, TimelineBound) {
  std::mt19937_64 rng(3);
  const Image img = random_image(rng, 28, 28);
  auto k = random_kernel(rng, 9);
  for (auto& w : k.weights) w = static_cast<std::int8_t>(w < 0 ? 1 : w);
  for (const auto& t : encode_image(img, k, {})) {
    const auto abs = to_absolute(t);
    if (!abs.times.empty()) {
      EXPECT_LE(abs.times.back(), 80u);
    }
  }
}

TEST(EncodeImage, PerPatchKernels) {
  std::mt19937_64 rng(4);
  const Image img = random_image(rng, 5, 5);
  TernaryKernel k;
  k.patch_side = 3;
  k.sharing = KernelSharing::per_patch;
  k.weights.assign(9 * 9, 0);
  std::fill(k.weights.begin() + 4 * 9, k.weights.begin() + 5 * 9, 1);  // only patch 4 listens
  const auto trains = encode_image(img, k, {});
  for (std::size_t i = 0; i < trains.size(); ++i) {
    if (i != 4) {
      EXPECT_TRUE(trains[i].empty());
    }
  }
  k.weights.pop_back();
  EXPECT_THROW(encode_image(img, k, {}), Error);
}

TEST(EncodeImage, KernelMustBeTernary) {
  const Image img{3, 3, 1, std::vector<std::uint8_t>(9, 1)};
  TernaryKernel k;
  k.patch_side = 3;
  k.weights.assign(9, 2);
  EXPECT_THROW(encode_image(img, k, {}), Error);
}

TEST(EncodeImage, EquivalentToLifCoreSingleNeuron) {
  std::mt19937_64 rng(12);
  const EncoderConfig cfg;
  const PixelTable table(cfg);
  for (int rep = 0; rep < 100; ++rep) {
    const Image img = random_image(rng, 9, 9);
    const TernaryKernel k = random_kernel(rng, 9);
    const auto serial = extract_patches(img, 9).front();
    // one synapse per tick whose weight is the signed pixel value
    LayerWeights w(serial.size(), 1, cfg.format);
    for (std::size_t j = 0; j < serial.size(); ++j) {
      w.at(j, 0) = static_cast<std::int32_t>(k.weights[j] * table[serial[j]]);
    }
    LayerState layer(1);
    std::vector<Tick> lif_times;
    for (std::size_t j = 0; j < serial.size(); ++j) {
      const std::vector<SynapseIndex> syn{static_cast<SynapseIndex>(j)};
      if (!integrate_timestamp(layer, w, j == 0 ? 0 : 1, syn, cfg.format).empty()) lif_times.push_back(j);
    }
    EXPECT_EQ(to_absolute(encode_image(img, k, cfg)[0]).times, lif_times);
  }
}

TEST(EncodeDataset, HistogramMatchesPerSampleSums) {
  std::mt19937_64 rng(8);
  std::vector<Image> imgs;
  for (int i = 0; i < 10; ++i) imgs.push_back(random_image(rng, 28, 28));
  const auto k = random_kernel(rng, 9);
  const auto ds = encode_dataset(imgs, k, {});
  ASSERT_EQ(ds.samples.size(), 10u);
  std::uint64_t spikes = 0;
  for (const auto& s : ds.samples) {
    EXPECT_EQ(s.size(), 400u);
    for (const auto& t : s) spikes += t.spike_count();
  }
  std::uint64_t in_hist = 0;
  for (const auto& [d, c] : ds.histogram) in_hist += c;
  EXPECT_EQ(in_hist, spikes);
  ASSERT_TRUE(ds.cost.has_value());
  EXPECT_EQ(ds.cost->b_star, optimal_bitwidth(ds.histogram).b_star);
}

TEST(EncodeDataset, EmptyDataset) {
  std::mt19937_64 rng(8);
  const auto ds = encode_dataset({}, random_kernel(rng, 9), {});
  EXPECT_TRUE(ds.histogram.empty());
  EXPECT_FALSE(ds.cost.has_value());
  EXPECT_THROW(optimal_bitwidth(ds.histogram), Error);
}

TEST(EncodeDataset, ShapeMismatch) {
  std::mt19937_64 rng(8);
  std::vector<Image> imgs{random_image(rng, 28, 28), random_image(rng, 27, 28)};
  EXPECT_THROW(encode_dataset(imgs, random_kernel(rng, 9), {}), Error);
}

namespace {

/// Integer wrapper that counts operations and has no multiplication at all,
/// so instantiating the encoder neuron with it fails to compile if one sneaks in.
struct TracedInt {
  std::int64_t v = 0;
  static inline int adds = 0, subs = 0, shifts = 0, compares = 0;

  friend TracedInt operator+(TracedInt a, TracedInt b) { ++adds; return {a.v + b.v}; }
  friend TracedInt operator-(TracedInt a, TracedInt b) { ++subs; return {a.v - b.v}; }
  friend TracedInt operator>>(TracedInt a, int s) { ++shifts; return {a.v >> s}; }
  friend bool operator<(TracedInt a, TracedInt b) { ++compares; return a.v < b.v; }
  friend bool operator>=(TracedInt a, TracedInt b) { ++compares; return a.v >= b.v; }
  TracedInt operator*(TracedInt) const = delete;
};

}  // namespace

TEST(EncodeImage, NeuronArithmeticIsMultiplierFree) {
  std::mt19937_64 rng(21);
  const Image img = random_image(rng, 9, 9);
  const TernaryKernel k = random_kernel(rng, 9);
  const EncoderConfig cfg;
  const PixelTable table(cfg);
  const auto serial = extract_patches(img, 9).front();
  std::vector<TracedInt> values;
  for (auto px : serial) values.push_back({table[px]});
  const auto& f = cfg.format;
  TracedInt::adds = TracedInt::subs = TracedInt::shifts = TracedInt::compares = 0;
  const auto traced = run_encoder_neuron<TracedInt>(values, k.weights, {f.one()}, {f.min_raw()}, {f.max_raw()});
  EXPECT_EQ(traced, to_absolute(encode_image(img, k, cfg)[0]).times);

  const auto plus = std::count(k.weights.begin(), k.weights.end(), 1);
  const auto minus = std::count(k.weights.begin(), k.weights.end(), -1);
  EXPECT_EQ(TracedInt::adds, plus);
  EXPECT_EQ(TracedInt::subs, minus + static_cast<long>(traced.size()));
  EXPECT_EQ(TracedInt::shifts, 80);
  EXPECT_EQ(TracedInt::compares, 81 * 3);
}
