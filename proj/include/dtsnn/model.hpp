#pragma once

// .lsnn model files. Little-endian throughout.
//
//   "LSNN"  u16 version (=1)  u16 section count
//   section table, one entry per section: tag[4] u64 offset u64 length
//   section payloads, in table order, contiguous after the table
//
// Sections (each exactly once, in this order):
//   HEAD  u8 potential total bits, u8 potential fraction bits,
//         u8 weight total bits, u8 weight fraction bits,
//         f64 theta (must be 1.0), f64 beta (must be 0.5),
//         u32 size count L, L x u32 layer sizes (input fan first)
//   ENCD  u32 image height, u32 image width, u32 channels,
//         u32 patch side, u32 stride, u8 sharing (0 shared, 1 per patch),
//         u8 normalization (0 unit, 1 raw byte), u8 stream bitwidth, u8 zero,
//         u32 kernel weight count, that many i8 in {-1,0,1}
//   LAYR  per layer: u32 fan in, u32 fan out, fan_in*fan_out signed weights,
//         row-major by input synapse, each ceil(weight bits/8) bytes
//   META  free-form UTF-8 provenance text

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dtsnn/detail/binary.hpp"
#include "dtsnn/encoder.hpp"
#include "dtsnn/error.hpp"
#include "dtsnn/lif.hpp"

namespace dtsnn {

inline constexpr std::uint16_t kModelVersion = 1;

struct ImageGeometry {
  std::uint32_t height = 28;
  std::uint32_t width = 28;
  std::uint32_t channels = 1;

  friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;
};

struct NetworkModel {
  std::uint16_t version = kModelVersion;
  double theta = 1.0;
  double beta = 0.5;
  FixedPointFormat weight_format = kDefaultWeightFormat;
  LifNetwork network;
  ImageGeometry geometry;
  TernaryKernel kernel;
  EncoderConfig encoder;
  std::string metadata;

  /// Input fan followed by each layer's neuron count.
  std::vector<std::uint32_t> layer_sizes() const {
    std::vector<std::uint32_t> sizes;
    if (network.layers.empty()) return sizes;
    sizes.push_back(static_cast<std::uint32_t>(network.input_fan()));
    for (const auto& l : network.layers) sizes.push_back(static_cast<std::uint32_t>(l.fan_out()));
    return sizes;
  }

  void validate() const {
    if (version != kModelVersion) {
      throw Error(ErrorCode::unsupported_version, "model version " + std::to_string(version));
    }
    if (theta != 1.0) throw Error(ErrorCode::invariant_violation, "theta must be 1.0");
    if (beta != 0.5) throw Error(ErrorCode::invariant_violation, "beta must be 0.5");
    weight_format.validate();
    if (weight_format.total_bits > 32) throw Error(ErrorCode::invariant_violation, "weights wider than 32 bits");
    network.validate();
    for (const auto& l : network.layers) {
      if (!(l.format() == weight_format)) {
        throw Error(ErrorCode::invariant_violation, "layer weight format differs from model weight format");
      }
    }
    if (!(encoder.format == network.potential_format)) {
      throw Error(ErrorCode::invariant_violation, "encoder and potential formats differ");
    }
    check_bitwidth(encoder.bitwidth);
    if (kernel.channels != geometry.channels) {
      throw Error(ErrorCode::invariant_violation, "kernel channel count differs from image geometry");
    }
    const PatchGrid grid = patch_grid(geometry.height, geometry.width, kernel.patch_side, kernel.stride);
    kernel.validate(grid.count());
    if (grid.count() != network.input_fan()) {
      throw Error(ErrorCode::fan_mismatch, "patch grid has " + std::to_string(grid.count()) +
                                               " patches but input fan is " + std::to_string(network.input_fan()));
    }
  }
};

namespace detail {

inline std::uint64_t f64_bits(double v) { return std::bit_cast<std::uint64_t>(v); }
inline double f64_from(std::uint64_t v) { return std::bit_cast<double>(v); }

inline unsigned weight_bytes(const FixedPointFormat& f) { return (f.total_bits + 7) / 8; }

inline constexpr std::array<std::array<char, 4>, 4> kSectionTags = {
    {{'H', 'E', 'A', 'D'}, {'E', 'N', 'C', 'D'}, {'L', 'A', 'Y', 'R'}, {'M', 'E', 'T', 'A'}}};

inline void put_fmt(ByteWriter& w, const FixedPointFormat& f) {
  w.u8(static_cast<std::uint8_t>(f.total_bits));
  w.u8(static_cast<std::uint8_t>(f.fraction_bits));
}

inline FixedPointFormat get_fmt(ByteReader& r) {
  FixedPointFormat f;
  f.total_bits = r.u8();
  f.fraction_bits = r.u8();
  f.validate();
  return f;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_model(const NetworkModel& model) {
  model.validate();
  using detail::ByteWriter;

  std::array<ByteWriter, 4> sec;

  auto& head = sec[0];
  detail::put_fmt(head, model.network.potential_format);
  detail::put_fmt(head, model.weight_format);
  head.u64(detail::f64_bits(model.theta));
  head.u64(detail::f64_bits(model.beta));
  const auto sizes = model.layer_sizes();
  head.u32(static_cast<std::uint32_t>(sizes.size()));
  for (const auto s : sizes) head.u32(s);

  auto& enc = sec[1];
  enc.u32(model.geometry.height);
  enc.u32(model.geometry.width);
  enc.u32(model.geometry.channels);
  enc.u32(model.kernel.patch_side);
  enc.u32(model.kernel.stride);
  enc.u8(static_cast<std::uint8_t>(model.kernel.sharing));
  enc.u8(static_cast<std::uint8_t>(model.encoder.normalization));
  enc.u8(static_cast<std::uint8_t>(model.encoder.bitwidth));
  enc.u8(0);
  enc.u32(static_cast<std::uint32_t>(model.kernel.weights.size()));
  for (const auto k : model.kernel.weights) enc.u8(static_cast<std::uint8_t>(k));

  auto& lay = sec[2];
  const unsigned wb = detail::weight_bytes(model.weight_format);
  for (const auto& l : model.network.layers) {
    lay.u32(static_cast<std::uint32_t>(l.fan_in()));
    lay.u32(static_cast<std::uint32_t>(l.fan_out()));
    for (const auto w : l.raw()) {
      const auto u = static_cast<std::uint64_t>(static_cast<std::int64_t>(w));
      for (unsigned i = 0; i < wb; ++i) lay.u8(static_cast<std::uint8_t>(u >> (8 * i)));
    }
  }

  sec[3].text(model.metadata);

  ByteWriter out;
  out.text("LSNN");
  out.u16(model.version);
  out.u16(static_cast<std::uint16_t>(sec.size()));
  std::uint64_t offset = out.size() + sec.size() * 20;
  for (std::size_t i = 0; i < sec.size(); ++i) {
    out.text(std::string_view(detail::kSectionTags[i].data(), 4));
    out.u64(offset);
    out.u64(sec[i].size());
    offset += sec[i].size();
  }
  for (auto& s : sec) out.bytes(s.buffer());
  return std::move(out.buffer());
}

inline NetworkModel parse_model(std::span<const std::uint8_t> data) {
  using detail::ByteReader;
  ByteReader r(data);
  const auto magic = r.bytes(4);
  if (std::memcmp(magic.data(), "LSNN", 4) != 0) throw Error(ErrorCode::bad_magic, "not an LSNN model file");
  NetworkModel model;
  model.version = r.u16();
  if (model.version != kModelVersion) {
    throw Error(ErrorCode::unsupported_version, "model version " + std::to_string(model.version));
  }
  const std::uint16_t nsec = r.u16();
  if (nsec != detail::kSectionTags.size()) {
    throw Error(ErrorCode::invariant_violation, "expected 4 sections, found " + std::to_string(nsec));
  }
  std::array<std::span<const std::uint8_t>, 4> payload;
  std::uint64_t expect = 8 + std::uint64_t{nsec} * 20;
  for (std::size_t i = 0; i < nsec; ++i) {
    const auto tag = r.bytes(4);
    const std::uint64_t off = r.u64();
    const std::uint64_t len = r.u64();
    if (std::memcmp(tag.data(), detail::kSectionTags[i].data(), 4) != 0) {
      throw Error(ErrorCode::invariant_violation, "unexpected section tag at index " + std::to_string(i));
    }
    if (off != expect) throw Error(ErrorCode::invariant_violation, "section table is not contiguous");
    if (off > data.size() || len > data.size() - off) {
      throw Error(ErrorCode::truncated, "section " + std::to_string(i) + " extends past end of file");
    }
    payload[i] = data.subspan(static_cast<std::size_t>(off), static_cast<std::size_t>(len));
    expect = off + len;
  }
  if (expect != data.size()) throw Error(ErrorCode::invariant_violation, "trailing bytes after last section");

  ByteReader head(payload[0]);
  model.network.potential_format = detail::get_fmt(head);
  model.weight_format = detail::get_fmt(head);
  model.theta = detail::f64_from(head.u64());
  model.beta = detail::f64_from(head.u64());
  const std::uint32_t nsizes = head.u32();
  if (nsizes < 2) throw Error(ErrorCode::invariant_violation, "model needs at least one layer");
  if (nsizes > head.remaining() / 4) throw Error(ErrorCode::truncated, "layer size list cut short");
  std::vector<std::uint32_t> sizes(nsizes);
  for (auto& s : sizes) s = head.u32();
  if (!head.done()) throw Error(ErrorCode::invariant_violation, "HEAD section has trailing bytes");

  ByteReader enc(payload[1]);
  model.geometry.height = enc.u32();
  model.geometry.width = enc.u32();
  model.geometry.channels = enc.u32();
  model.kernel.patch_side = enc.u32();
  model.kernel.stride = enc.u32();
  model.kernel.channels = model.geometry.channels;
  const std::uint8_t sharing = enc.u8();
  const std::uint8_t norm = enc.u8();
  if (sharing > 1 || norm > 1) throw Error(ErrorCode::invariant_violation, "unknown encoder mode");
  model.kernel.sharing = static_cast<KernelSharing>(sharing);
  model.encoder.normalization = static_cast<PixelNormalization>(norm);
  model.encoder.bitwidth = enc.u8();
  model.encoder.format = model.network.potential_format;
  if (enc.u8() != 0) throw Error(ErrorCode::invariant_violation, "reserved encoder byte is not zero");
  const std::uint32_t nk = enc.u32();
  const auto kbytes = enc.bytes(nk);
  model.kernel.weights.assign(kbytes.begin(), kbytes.end());
  if (!enc.done()) throw Error(ErrorCode::invariant_violation, "ENCD section has trailing bytes");

  ByteReader lay(payload[2]);
  const unsigned wb = detail::weight_bytes(model.weight_format);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::uint32_t fan_in = lay.u32();
    const std::uint32_t fan_out = lay.u32();
    if (fan_in != sizes[l] || fan_out != sizes[l + 1]) {
      throw Error(ErrorCode::fan_mismatch, "layer " + std::to_string(l) + " shape disagrees with HEAD sizes");
    }
    const std::uint64_t count = std::uint64_t{fan_in} * fan_out;
    if (count > lay.remaining() / wb) throw Error(ErrorCode::truncated, "layer " + std::to_string(l) + " cut short");
    std::vector<std::int32_t> raw(static_cast<std::size_t>(count));
    const unsigned sign_shift = 64 - 8 * wb;
    for (auto& w : raw) {
      std::uint64_t u = 0;
      for (unsigned i = 0; i < wb; ++i) u |= static_cast<std::uint64_t>(lay.u8()) << (8 * i);
      w = static_cast<std::int32_t>(static_cast<std::int64_t>(u << sign_shift) >> sign_shift);
    }
    model.network.layers.emplace_back(fan_in, fan_out, model.weight_format, std::move(raw));
  }
  if (!lay.done()) throw Error(ErrorCode::invariant_violation, "LAYR section has trailing bytes");

  model.metadata.assign(payload[3].begin(), payload[3].end());
  model.validate();
  return model;
}

inline void save_model(const NetworkModel& model, const std::filesystem::path& path) {
  detail::write_file_atomic(path, serialize_model(model));
}

inline NetworkModel load_model(const std::filesystem::path& path) { return parse_model(detail::read_file(path)); }

}  // namespace dtsnn
