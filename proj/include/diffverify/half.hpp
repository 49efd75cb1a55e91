#pragma once

#include <optional>

namespace dv {

/// Largest finite IEEE-754 binary16 value.
inline constexpr double kHalfMax = 65504.0;

/// Rounds `value` to the nearest IEEE-754 binary16 number (ties to even) and
/// returns it widened back to double. Returns std::nullopt when the rounded
/// value is not finite in binary16, or when `value` itself is not finite.
std::optional<double> round_to_half(double value);

} // namespace dv
