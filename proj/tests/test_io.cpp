#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <vector>

#include "dtsnn/dataset.hpp"
#include "dtsnn/model.hpp"
#include "dtsnn/stream_io.hpp"
#include "dtsnn/trace_io.hpp"

using namespace dtsnn;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = DTSNN_FIXTURE_DIR;

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::io;
}

SpikeStream random_stream(std::mt19937_64& rng) {
  SpikeStream s;
  s.bitwidth = 1 + static_cast<unsigned>(rng() % 32);
  const std::uint64_t limit = overflow_span(s.bitwidth);
  const std::size_t m = rng() % 6;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<Symbol> sym(rng() % 25);
    for (auto& x : sym) x = static_cast<Symbol>(rng() % (limit + 1));
    s.trains.emplace_back(s.bitwidth, std::move(sym));
  }
  return s;
}

}  // namespace

TEST(SpikeStreamFile, GoldenBytesBitwidthOne) {
  SpikeStream s;
  s.bitwidth = 1;
  s.trains = {DiffSpikeTrain(1, {0, 1, 1, 0, 1}), DiffSpikeTrain(1)};
  const std::vector<std::uint8_t> golden{'D', 'T', 'S', '1', 0x01, 0x02, 0x00, 0x00, 0x00,
                                         0x05, 0x00, 0x00, 0x00, 0x16, 0x00, 0x00, 0x00, 0x00};
  EXPECT_EQ(serialize_stream(s), golden);
  EXPECT_EQ(parse_stream(golden), s);
}

TEST(SpikeStreamFile, GoldenBytesBitwidthThree) {
  SpikeStream s;
  s.bitwidth = 3;
  s.trains = {DiffSpikeTrain(3, {7, 0, 5})};
  const std::vector<std::uint8_t> golden{'D', 'T', 'S', '1', 0x03, 0x01, 0x00, 0x00, 0x00,
                                         0x03, 0x00, 0x00, 0x00, 0x47, 0x01};
  EXPECT_EQ(serialize_stream(s), golden);
  EXPECT_EQ(parse_stream(golden), s);
}

TEST(SpikeStreamFile, EmptyStream) {
  SpikeStream s;
  s.bitwidth = 4;
  const auto bytes = serialize_stream(s);
  EXPECT_EQ(bytes.size(), 9u);
  EXPECT_EQ(parse_stream(bytes), s);
}

TEST(SpikeStreamFile, RoundTripProperty) {
  std::mt19937_64 rng(404);
  for (int rep = 0; rep < 500; ++rep) {
    const auto s = random_stream(rng);
    const auto bytes = serialize_stream(s);
    const auto back = parse_stream(bytes);
    ASSERT_EQ(back, s);
    ASSERT_EQ(serialize_stream(back), bytes);
  }
}

TEST(SpikeStreamFile, MalformedInputs) {
  SpikeStream s;
  s.bitwidth = 3;
  s.trains = {DiffSpikeTrain(3, {7, 0, 5})};
  const auto good = serialize_stream(s);

  auto bad = good;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { parse_stream(bad); }), ErrorCode::bad_magic);

  bad = good;
  bad[4] = 0;
  EXPECT_EQ(code_of([&] { parse_stream(bad); }), ErrorCode::invalid_bitwidth);

  bad = good;
  bad.pop_back();
  EXPECT_EQ(code_of([&] { parse_stream(bad); }), ErrorCode::truncated);

  bad = good;
  bad.back() |= 0x80;  // padding bit
  EXPECT_EQ(code_of([&] { parse_stream(bad); }), ErrorCode::packing);

  bad = good;
  bad.push_back(0);
  EXPECT_EQ(code_of([&] { parse_stream(bad); }), ErrorCode::packing);

  SpikeStream mixed;
  mixed.bitwidth = 2;
  mixed.trains = {DiffSpikeTrain(3, {1})};
  EXPECT_EQ(code_of([&] { serialize_stream(mixed); }), ErrorCode::incompatible_trains);
}

TEST(SpikeStreamFile, FileRoundTrip) {
  const fs::path p = fs::temp_directory_path() / "dtsnn_stream_test.dts";
  std::mt19937_64 rng(5);
  const auto s = random_stream(rng);
  write_spike_stream(p, s);
  EXPECT_EQ(read_spike_stream(p), s);
  fs::remove(p);
  EXPECT_EQ(code_of([&] { read_spike_stream(p); }), ErrorCode::io);
}

TEST(ModelFile, FixtureLoadsAndRoundTripsByteIdentical) {
  const auto bytes = detail::read_file(kFixtures / "tiny.lsnn");
  const auto model = parse_model(bytes);
  EXPECT_EQ(model.layer_sizes(), (std::vector<std::uint32_t>{4, 3, 2}));
  EXPECT_EQ(model.kernel.patch_side, 2u);
  EXPECT_EQ(model.geometry.height, 3u);
  EXPECT_EQ(model.encoder.bitwidth, 2u);
  EXPECT_EQ(model.weight_format, kDefaultWeightFormat);
  EXPECT_EQ(serialize_model(model), bytes);

  const auto again = parse_model(serialize_model(model));
  EXPECT_EQ(again.network.layers, model.network.layers);
  EXPECT_EQ(again.kernel, model.kernel);
  EXPECT_EQ(again.metadata, model.metadata);
}

TEST(ModelFile, SaveLoadThroughDisk) {
  auto model = parse_model(detail::read_file(kFixtures / "tiny.lsnn"));
  model.metadata = "changed";
  const fs::path p = fs::temp_directory_path() / "dtsnn_model_test.lsnn";
  save_model(model, p);
  const auto back = load_model(p);
  EXPECT_EQ(back.metadata, "changed");
  EXPECT_EQ(back.network.layers, model.network.layers);
  fs::remove(p);
}

TEST(ModelFile, DistinctErrors) {
  const auto good = detail::read_file(kFixtures / "tiny.lsnn");

  auto bad = good;
  bad[1] = 'X';
  EXPECT_EQ(code_of([&] { parse_model(bad); }), ErrorCode::bad_magic);

  bad = good;
  bad[4] = 2;
  EXPECT_EQ(code_of([&] { parse_model(bad); }), ErrorCode::unsupported_version);

  bad = std::vector<std::uint8_t>(good.begin(), good.end() - 10);
  EXPECT_EQ(code_of([&] { parse_model(bad); }), ErrorCode::truncated);

  auto model = parse_model(good);
  model.beta = 0.25;
  EXPECT_EQ(code_of([&] { serialize_model(model); }), ErrorCode::invariant_violation);

  // theta lives at HEAD offset 4; HEAD starts right after the 88-byte table
  bad = good;
  bad[8 + 80 + 4 + 7] ^= 0x01;
  EXPECT_EQ(code_of([&] { parse_model(bad); }), ErrorCode::invariant_violation);

  model = parse_model(good);
  model.kernel.weights[0] = 3;
  EXPECT_EQ(code_of([&] { serialize_model(model); }), ErrorCode::invariant_violation);

  model = parse_model(good);
  model.geometry.width = 4;  // 3x3 patch grid no longer matches fan-in 4
  model.geometry.height = 4;
  EXPECT_EQ(code_of([&] { serialize_model(model); }), ErrorCode::fan_mismatch);
}

TEST(ModelFile, FuzzedBytesNeverCrash) {
  const auto good = detail::read_file(kFixtures / "tiny.lsnn");
  std::mt19937_64 rng(1234);
  int rejected = 0;
  for (int rep = 0; rep < 5000; ++rep) {
    auto bytes = good;
    const int flips = 1 + static_cast<int>(rng() % 4);
    for (int f = 0; f < flips; ++f) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
    if (rng() % 4 == 0) bytes.resize(rng() % bytes.size());
    try {
      parse_model(bytes);
    } catch (const Error&) {
      ++rejected;
    }
  }
  EXPECT_GT(rejected, 0);
}

TEST(SpikeStreamFile, FuzzedBytesNeverCrash) {
  std::mt19937_64 rng(4321);
  for (int rep = 0; rep < 5000; ++rep) {
    auto bytes = serialize_stream(random_stream(rng));
    const int flips = 1 + static_cast<int>(rng() % 3);
    for (int f = 0; f < flips; ++f) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
    try {
      parse_stream(bytes);
    } catch (const Error&) {
    }
  }
}

TEST(Idx, FixtureImagesAndLabels) {
  const auto images = read_idx_images(kFixtures / "tiny-images-idx3-ubyte");
  const auto labels = read_idx_labels(kFixtures / "tiny-labels-idx1-ubyte");
  ASSERT_EQ(images.size(), 4u);
  ASSERT_EQ(labels.size(), 4u);
  EXPECT_EQ(images[0].height, 3u);
  EXPECT_EQ(images[0].width, 3u);
  for (auto l : labels) EXPECT_LT(l, 2);

  const auto ds = load_dataset(kFixtures / "tiny-images-idx3-ubyte");
  EXPECT_EQ(ds.labels, labels);
  EXPECT_EQ(serialize_idx_images(images), detail::read_file(kFixtures / "tiny-images-idx3-ubyte"));
}

TEST(Idx, MissingSiblingLabelsMeansUnlabeled) {
  const fs::path dir = fs::temp_directory_path() / "dtsnn_idx_unlabeled";
  fs::create_directories(dir);
  fs::copy_file(kFixtures / "tiny-images-idx3-ubyte", dir / "x-images-idx3-ubyte", fs::copy_options::overwrite_existing);
  const auto ds = load_dataset(dir / "x-images-idx3-ubyte");
  EXPECT_EQ(ds.images.size(), 4u);
  EXPECT_TRUE(ds.labels.empty());
  EXPECT_EQ(code_of([&] { load_dataset(dir / "x-images-idx3-ubyte", dir / "nope"); }), ErrorCode::io);
  fs::remove_all(dir);
}

TEST(Idx, Errors) {
  std::vector<Image> imgs(3, Image{28, 28, 1, std::vector<std::uint8_t>(784, 7)});
  auto bytes = serialize_idx_images(imgs);
  EXPECT_EQ(parse_idx_images(bytes).size(), 3u);
  bytes.pop_back();
  EXPECT_EQ(code_of([&] { parse_idx_images(bytes); }), ErrorCode::truncated);
  bytes[3] = 0x01;
  EXPECT_EQ(code_of([&] { parse_idx_images(bytes); }), ErrorCode::bad_magic);

  const std::vector<std::uint8_t> labels{1, 2, 3};
  auto lb = serialize_idx_labels(labels);
  EXPECT_EQ(parse_idx_labels(lb), labels);
  lb.pop_back();
  EXPECT_EQ(code_of([&] { parse_idx_labels(lb); }), ErrorCode::truncated);
  EXPECT_EQ(code_of([&] { parse_idx_labels(serialize_idx_images(imgs)); }), ErrorCode::bad_magic);
}

TEST(Cifar10, RecordsAndPixels) {
  std::mt19937_64 rng(10);
  std::vector<std::uint8_t> raw;
  for (int r = 0; r < 3; ++r) {
    raw.push_back(static_cast<std::uint8_t>(r * 3));
    for (int i = 0; i < 3072; ++i) raw.push_back(static_cast<std::uint8_t>(rng()));
  }
  const auto ds = parse_cifar10(raw);
  ASSERT_EQ(ds.images.size(), 3u);
  EXPECT_EQ(ds.labels, (std::vector<std::uint8_t>{0, 3, 6}));
  // byte-level reference: record r, channel c, row y, col x
  for (int r = 0; r < 3; ++r) {
    const auto& img = ds.images[r];
    EXPECT_EQ(img.channels, 3u);
    for (std::uint32_t c = 0; c < 3; ++c) {
      for (std::uint32_t y = 0; y < 32; y += 7) {
        for (std::uint32_t x = 0; x < 32; x += 5) {
          EXPECT_EQ(img.at(c, y, x), raw[r * 3073 + 1 + c * 1024 + y * 32 + x]);
        }
      }
    }
  }
  raw.pop_back();
  EXPECT_EQ(code_of([&] { parse_cifar10(raw); }), ErrorCode::invariant_violation);
}

TEST(TraceText, RoundTripWithComments) {
  const MergedEventStream events{{0, 3}, {2, 1}, {18446744073709551615ull, 4294967295u}};
  EXPECT_EQ(format_trace(events), "0,3\n2,1\n18446744073709551615,4294967295\n");
  EXPECT_EQ(parse_trace("# header\n" + format_trace(events) + "\n\r\n"), events);
  EXPECT_EQ(parse_trace("1,2\r\n"), (MergedEventStream{{1, 2}}));
}

TEST(TraceText, MalformedLines) {
  for (const char* bad : {"1;2\n", "1,\n", ",2\n", "-1,2\n", "1,2x\n", "1,4294967296\n"}) {
    EXPECT_EQ(code_of([&] { parse_trace(bad); }), ErrorCode::invariant_violation) << bad;
  }
}

TEST(CountTable, ParsesRows) {
  const auto t = parse_count_table("# c\nstream 6 10\nsample0  0 1\nempty\n");
  EXPECT_EQ(t.at("stream"), (std::vector<std::uint64_t>{6, 10}));
  EXPECT_EQ(t.at("sample0"), (std::vector<std::uint64_t>{0, 1}));
  EXPECT_TRUE(t.at("empty").empty());
  EXPECT_EQ(code_of([] { parse_count_table("row 1 x\n"); }), ErrorCode::invariant_violation);
}
