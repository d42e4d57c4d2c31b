#pragma once

// Differential-time spike codec.
//
// A train is a sequence of b-bit symbols. The all-ones value 2^b-1 is the
// overflow symbol and advances time by 2^b-1 ticks without a spike. Any
// smaller value v is a terminal: the spike happens v ticks after the current
// position. A difference d therefore costs floor(d/(2^b-1)) overflows plus
// one terminal. Trailing overflows are legal and only extend the duration.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtsnn/error.hpp"

namespace dtsnn {

using Tick = std::uint64_t;
using Symbol = std::uint32_t;

/// Difference value -> number of occurrences.
using Histogram = std::map<Tick, std::uint64_t>;

inline constexpr unsigned kMaxBitwidth = 32;

inline void check_bitwidth(unsigned b) {
  if (b == 0 || b > kMaxBitwidth) {
    throw Error(ErrorCode::invalid_bitwidth,
                "bitwidth must be in [1, " + std::to_string(kMaxBitwidth) + "], got " +
                    std::to_string(b));
  }
}

/// Ticks advanced by one overflow symbol, 2^b - 1.
constexpr Tick overflow_span(unsigned b) noexcept { return (Tick{1} << b) - 1; }

/// Smallest n with 2^n >= x. ceil_log2(0) == ceil_log2(1) == 0.
constexpr unsigned ceil_log2(Tick x) noexcept {
  unsigned n = 0;
  while (n < 64 && (Tick{1} << n) < x) ++n;
  return x > (Tick{1} << 63) ? 64 : n;
}

class DiffSpikeTrain {
 public:
  explicit DiffSpikeTrain(unsigned bitwidth = 1) : bitwidth_(bitwidth) { check_bitwidth(bitwidth); }

  DiffSpikeTrain(unsigned bitwidth, std::vector<Symbol> symbols)
      : bitwidth_(bitwidth), symbols_(std::move(symbols)) {
    check_bitwidth(bitwidth);
    const Tick limit = overflow_span(bitwidth);
    for (const Symbol s : symbols_) {
      if (s > limit) {
        throw Error(ErrorCode::invalid_bitwidth,
                    "symbol " + std::to_string(s) + " does not fit in " + std::to_string(bitwidth) +
                        " bits");
      }
    }
  }

  unsigned bitwidth() const noexcept { return bitwidth_; }
  Symbol overflow_symbol() const noexcept { return static_cast<Symbol>(overflow_span(bitwidth_)); }
  const std::vector<Symbol>& symbols() const noexcept { return symbols_; }
  std::size_t size() const noexcept { return symbols_.size(); }
  bool empty() const noexcept { return symbols_.empty(); }

  std::size_t spike_count() const noexcept {
    const Symbol ovf = overflow_symbol();
    return static_cast<std::size_t>(
        std::count_if(symbols_.begin(), symbols_.end(), [ovf](Symbol s) { return s != ovf; }));
  }

  /// Total ticks covered, including trailing overflows.
  Tick duration() const noexcept {
    Tick total = 0;
    for (const Symbol s : symbols_) total += s;
    return total;
  }

  friend bool operator==(const DiffSpikeTrain&, const DiffSpikeTrain&) = default;

 private:
  unsigned bitwidth_;
  std::vector<Symbol> symbols_;
};

struct AbsSpikeTrain {
  std::vector<Tick> times;
  Tick duration = 0;

  friend bool operator==(const AbsSpikeTrain&, const AbsSpikeTrain&) = default;
};

struct SampledSpikeTrain {
  std::vector<std::uint8_t> bits;

  friend bool operator==(const SampledSpikeTrain&, const SampledSpikeTrain&) = default;
};

struct DecodedTrain {
  std::vector<Tick> differences;
  Tick duration = 0;
};

inline DiffSpikeTrain encode_differences(std::span<const Tick> differences, unsigned b) {
  check_bitwidth(b);
  const Tick span = overflow_span(b);
  const auto ovf = static_cast<Symbol>(span);
  std::vector<Symbol> symbols;
  symbols.reserve(differences.size());
  for (const Tick d : differences) {
    symbols.insert(symbols.end(), d / span, ovf);
    symbols.push_back(static_cast<Symbol>(d % span));
  }
  return DiffSpikeTrain(b, std::move(symbols));
}

inline DecodedTrain decode_symbols(const DiffSpikeTrain& train) {
  DecodedTrain out;
  const Symbol ovf = train.overflow_symbol();
  Tick pending = 0;
  for (const Symbol s : train.symbols()) {
    pending += s;
    if (s != ovf) {
      out.differences.push_back(pending);
      out.duration += pending;
      pending = 0;
    }
  }
  out.duration += pending;
  return out;
}

/// Differences against a_0 = 0. Trailing overflows pad toward `train.duration`;
/// padding is whole overflow spans, so a remainder shorter than 2^b-1 is dropped.
inline DiffSpikeTrain from_absolute(const AbsSpikeTrain& train, unsigned b) {
  check_bitwidth(b);
  std::vector<Tick> diffs;
  diffs.reserve(train.times.size());
  Tick prev = 0;
  for (const Tick t : train.times) {
    if (t < prev) {
      throw Error(ErrorCode::ordering, "absolute spike times must be non-decreasing");
    }
    diffs.push_back(t - prev);
    prev = t;
  }
  if (train.duration < prev) {
    throw Error(ErrorCode::ordering, "duration precedes the last spike");
  }
  DiffSpikeTrain encoded = encode_differences(diffs, b);
  const Tick span = overflow_span(b);
  const Tick pad = (train.duration - prev) / span;
  if (pad == 0) return encoded;
  std::vector<Symbol> symbols = encoded.symbols();
  symbols.insert(symbols.end(), pad, encoded.overflow_symbol());
  return DiffSpikeTrain(b, std::move(symbols));
}

inline AbsSpikeTrain to_absolute(const DiffSpikeTrain& train) {
  const DecodedTrain decoded = decode_symbols(train);
  AbsSpikeTrain out;
  out.times.reserve(decoded.differences.size());
  Tick acc = 0;
  for (const Tick d : decoded.differences) {
    acc += d;
    out.times.push_back(acc);
  }
  out.duration = decoded.duration;
  return out;
}

/// Sampled bits -> b=1 train. With b=1 the overflow symbol is 1 (one idle tick)
/// and the only terminal is 0 (spike now). An empty bit vector yields an empty train.
inline DiffSpikeTrain from_sampled(const SampledSpikeTrain& sampled) {
  std::vector<Symbol> symbols;
  symbols.reserve(sampled.bits.size() * 2);
  for (std::size_t t = 0; t < sampled.bits.size(); ++t) {
    if (t > 0) symbols.push_back(1);
    if (sampled.bits[t] != 0) symbols.push_back(0);
  }
  return DiffSpikeTrain(1, std::move(symbols));
}

/// One bit per tick over [0, duration]. Coincident spikes collapse into one bit.
inline SampledSpikeTrain to_sampled(const DiffSpikeTrain& train) {
  const AbsSpikeTrain abs = to_absolute(train);
  SampledSpikeTrain out;
  out.bits.assign(abs.duration + 1, 0);
  for (const Tick t : abs.times) out.bits[t] = 1;
  return out;
}

inline std::uint64_t paper_symbol_count(std::span<const Tick> differences, unsigned b) {
  check_bitwidth(b);
  const Tick span = overflow_span(b);
  std::uint64_t n = 0;
  for (const Tick d : differences) n += (d + span - 1) / span;
  return n;
}

inline std::uint64_t paper_total_bits(std::span<const Tick> differences, unsigned b) {
  return b * paper_symbol_count(differences, b);
}

inline std::uint64_t paper_total_bits(const Histogram& histogram, unsigned b) {
  check_bitwidth(b);
  const Tick span = overflow_span(b);
  std::uint64_t n = 0;
  for (const auto& [d, count] : histogram) n += count * ((d + span - 1) / span);
  return b * n;
}

inline std::uint64_t exact_symbol_count(std::span<const Tick> differences, unsigned b) {
  check_bitwidth(b);
  const Tick span = overflow_span(b);
  std::uint64_t n = 0;
  for (const Tick d : differences) n += d / span + 1;
  return n;
}

inline std::uint64_t exact_total_bits(std::span<const Tick> differences, unsigned b) {
  return b * exact_symbol_count(differences, b);
}

inline std::uint64_t exact_total_bits(const Histogram& histogram, unsigned b) {
  check_bitwidth(b);
  const Tick span = overflow_span(b);
  std::uint64_t n = 0;
  for (const auto& [d, count] : histogram) n += count * (d / span + 1);
  return b * n;
}

inline Histogram histogram_of(std::span<const Tick> differences) {
  Histogram h;
  for (const Tick d : differences) ++h[d];
  return h;
}

inline void accumulate_histogram(Histogram& into, const DiffSpikeTrain& train) {
  for (const Tick d : decode_symbols(train).differences) ++into[d];
}

struct BitwidthCost {
  unsigned bitwidth = 0;
  std::uint64_t paper_bits = 0;
  std::uint64_t exact_bits = 0;
};

struct CostReport {
  Histogram histogram;
  std::vector<BitwidthCost> costs;  // ascending bitwidth
  unsigned b_star = 0;
  std::optional<unsigned> absolute_bits_per_spike;
};

struct BitwidthRange {
  unsigned min = 1;
  unsigned max = 16;
};

/// Scans the range and picks the bitwidth minimizing the ceiling-formula cost;
/// ties go to the smaller bitwidth.
inline CostReport optimal_bitwidth(const Histogram& histogram, BitwidthRange range = {}) {
  if (histogram.empty()) throw Error(ErrorCode::empty_input, "histogram is empty");
  check_bitwidth(range.min);
  check_bitwidth(range.max);
  if (range.min > range.max) throw Error(ErrorCode::invalid_bitwidth, "empty bitwidth range");

  CostReport report;
  report.histogram = histogram;
  std::uint64_t best = 0;
  for (unsigned b = range.min; b <= range.max; ++b) {
    const BitwidthCost cost{b, paper_total_bits(histogram, b), exact_total_bits(histogram, b)};
    if (report.costs.empty() || cost.paper_bits < best) {
      best = cost.paper_bits;
      report.b_star = b;
    }
    report.costs.push_back(cost);
  }
  return report;
}

struct EncodingComparison {
  std::size_t spike_count = 0;
  Tick last_time = 0;
  unsigned absolute_bits_per_spike = 0;
  std::uint64_t absolute_total_bits = 0;
  std::uint64_t sampled_bits = 0;
  /// Evenly spaced spikes: ceil(log2((T+1)/K)).
  unsigned best_case_bits_per_spike = 0;
  /// Plain binary width of the largest difference when no overflow symbol is reserved.
  unsigned no_overflow_bits_per_spike = 0;
  CostReport differential;
};

inline EncodingComparison encoding_comparison(const AbsSpikeTrain& train, BitwidthRange range = {}) {
  if (train.times.empty()) throw Error(ErrorCode::empty_input, "spike train has no spikes");
  std::vector<Tick> diffs;
  Tick prev = 0;
  for (const Tick t : train.times) {
    if (t < prev) throw Error(ErrorCode::ordering, "absolute spike times must be non-decreasing");
    diffs.push_back(t - prev);
    prev = t;
  }

  EncodingComparison out;
  out.spike_count = train.times.size();
  out.last_time = prev;
  const Tick span = prev + 1;
  out.absolute_bits_per_spike = ceil_log2(span);
  out.absolute_total_bits = out.spike_count * out.absolute_bits_per_spike;
  out.sampled_bits = span;
  unsigned best = 0;
  while (best < 64 && (static_cast<Tick>(out.spike_count) << best) < span) ++best;
  out.best_case_bits_per_spike = best;
  out.no_overflow_bits_per_spike = ceil_log2(*std::max_element(diffs.begin(), diffs.end()) + 1);
  out.differential = optimal_bitwidth(histogram_of(diffs), range);
  out.differential.absolute_bits_per_spike = out.absolute_bits_per_spike;
  return out;
}

}  // namespace dtsnn
