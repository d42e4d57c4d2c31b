#pragma once

// .dts spike-stream files (all integers little-endian):
//
//   "DTS1"            4 bytes magic
//   u8                bitwidth b, 1..32
//   u32               train count M
//   M times:
//     u32             symbol count n
//     ceil(n*b/8)     symbols packed b bits each, LSB first, zero padded
//
// Readers reject non-zero padding and trailing bytes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dtsnn/codec.hpp"
#include "dtsnn/detail/binary.hpp"
#include "dtsnn/error.hpp"

namespace dtsnn {

inline constexpr std::uint8_t kStreamMagic[4] = {'D', 'T', 'S', '1'};

struct SpikeStream {
  unsigned bitwidth = 1;
  std::vector<DiffSpikeTrain> trains;

  friend bool operator==(const SpikeStream&, const SpikeStream&) = default;
};

inline std::vector<std::uint8_t> serialize_stream(const SpikeStream& stream) {
  check_bitwidth(stream.bitwidth);
  detail::ByteWriter w;
  w.bytes(kStreamMagic);
  w.u8(static_cast<std::uint8_t>(stream.bitwidth));
  w.u32(static_cast<std::uint32_t>(stream.trains.size()));
  const unsigned b = stream.bitwidth;
  for (const auto& train : stream.trains) {
    if (train.bitwidth() != b) throw Error(ErrorCode::incompatible_trains, "train bitwidth differs from stream");
    w.u32(static_cast<std::uint32_t>(train.size()));
    std::uint64_t acc = 0;
    unsigned filled = 0;
    for (const Symbol s : train.symbols()) {
      acc |= static_cast<std::uint64_t>(s) << filled;
      filled += b;
      while (filled >= 8) {
        w.u8(static_cast<std::uint8_t>(acc));
        acc >>= 8;
        filled -= 8;
      }
    }
    if (filled > 0) w.u8(static_cast<std::uint8_t>(acc));
  }
  return std::move(w.buffer());
}

inline SpikeStream parse_stream(std::span<const std::uint8_t> data) {
  detail::ByteReader r(data);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kStreamMagic)) {
    throw Error(ErrorCode::bad_magic, "not a DTS1 spike stream");
  }
  SpikeStream stream;
  stream.bitwidth = r.u8();
  check_bitwidth(stream.bitwidth);
  const unsigned b = stream.bitwidth;
  const std::uint32_t count = r.u32();
  // every train needs at least its 4-byte header
  if (count > r.remaining() / 4) throw Error(ErrorCode::truncated, "train count exceeds file size");
  stream.trains.reserve(count);
  const std::uint64_t mask = overflow_span(b);
  for (std::uint32_t m = 0; m < count; ++m) {
    const std::uint64_t n = r.u32();
    const std::uint64_t nbytes = (n * b + 7) / 8;
    if (nbytes > r.remaining()) throw Error(ErrorCode::truncated, "train " + std::to_string(m) + " is cut short");
    const auto packed = r.bytes(static_cast<std::size_t>(nbytes));
    std::vector<Symbol> symbols;
    symbols.reserve(static_cast<std::size_t>(n));
    std::uint64_t acc = 0;
    unsigned filled = 0;
    std::size_t next = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      while (filled < b) {
        acc |= static_cast<std::uint64_t>(packed[next++]) << filled;
        filled += 8;
      }
      symbols.push_back(static_cast<Symbol>(acc & mask));
      acc >>= b;
      filled -= b;
    }
    if (acc != 0 || next != packed.size()) {
      throw Error(ErrorCode::packing, "non-zero padding in train " + std::to_string(m));
    }
    stream.trains.emplace_back(b, std::move(symbols));
  }
  if (!r.done()) throw Error(ErrorCode::packing, "trailing bytes after last train");
  return stream;
}

inline void write_spike_stream(const std::filesystem::path& path, const SpikeStream& stream) {
  detail::write_file_atomic(path, serialize_stream(stream));
}

inline SpikeStream read_spike_stream(const std::filesystem::path& path) {
  return parse_stream(detail::read_file(path));
}

}  // namespace dtsnn
