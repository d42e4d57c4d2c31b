#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dtsnn {

enum class ErrorCode {
  invalid_bitwidth,
  ordering,
  empty_input,
  incompatible_trains,
  addressing,
  fan_mismatch,
  bad_magic,
  unsupported_version,
  truncated,
  invariant_violation,
  packing,
  io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_bitwidth: return "invalid-bitwidth";
    case ErrorCode::ordering: return "ordering";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::incompatible_trains: return "incompatible-trains";
    case ErrorCode::addressing: return "addressing";
    case ErrorCode::fan_mismatch: return "fan-mismatch";
    case ErrorCode::bad_magic: return "bad-magic";
    case ErrorCode::unsupported_version: return "unsupported-version";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::invariant_violation: return "invariant-violation";
    case ErrorCode::packing: return "packing";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can tell error classes apart without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dtsnn
