#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "dtsnn/error.hpp"

namespace dtsnn {

/// Signed Q-format descriptor with symmetric saturation bounds.
struct FixedPointFormat {
  unsigned total_bits = 32;
  unsigned fraction_bits = 16;

  void validate() const {
    if (total_bits < 2 || total_bits > 62 || fraction_bits >= total_bits) {
      throw Error(ErrorCode::invariant_violation,
                  "fixed-point format Q" + std::to_string(total_bits) + "." +
                      std::to_string(fraction_bits) + " is not supported");
    }
  }

  std::int64_t max_raw() const noexcept { return (std::int64_t{1} << (total_bits - 1)) - 1; }
  std::int64_t min_raw() const noexcept { return -max_raw(); }
  std::int64_t one() const noexcept { return std::int64_t{1} << fraction_bits; }

  std::int64_t saturate(std::int64_t raw) const noexcept { return std::clamp(raw, min_raw(), max_raw()); }

  bool contains(std::int64_t raw) const noexcept { return raw >= min_raw() && raw <= max_raw(); }

  double to_double(std::int64_t raw) const noexcept { return std::ldexp(static_cast<double>(raw), -static_cast<int>(fraction_bits)); }

  /// Round-to-nearest quantization with saturation. Host-side helper only.
  std::int64_t quantize(double value) const noexcept {
    const double scaled = std::nearbyint(std::ldexp(value, static_cast<int>(fraction_bits)));
    if (scaled >= static_cast<double>(max_raw())) return max_raw();
    if (scaled <= static_cast<double>(min_raw())) return min_raw();
    return static_cast<std::int64_t>(scaled);
  }

  friend bool operator==(const FixedPointFormat&, const FixedPointFormat&) = default;
};

inline constexpr FixedPointFormat kDefaultPotentialFormat{32, 16};
inline constexpr FixedPointFormat kDefaultWeightFormat{8, 6};

}  // namespace dtsnn
