#include "diffverify/half.hpp"

#include <cfenv>
#include <cmath>

namespace dv {

std::optional<double> round_to_half(double value)
{
    if (!std::isfinite(value)) {
        return std::nullopt;
    }
    if (value == 0.0) {
        return value;
    }

    int exponent = 0;
    std::frexp(std::fabs(value), &exponent); // |value| in [2^(exponent-1), 2^exponent)

    // binary16 has 10 fraction bits; normal exponents start at -14, below
    // that the spacing is fixed at 2^-24.
    const int unbiased = exponent - 1;
    const int quantum_exp = unbiased < -14 ? -24 : unbiased - 10;

    // Scaling by a power of two is exact, so the only rounding happens in
    // nearbyint, which honours the default ties-to-even mode.
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double steps = std::nearbyint(std::ldexp(value, -quantum_exp));
    std::fesetround(saved);

    const double rounded = std::ldexp(steps, quantum_exp);
    if (std::fabs(rounded) > kHalfMax) {
        return std::nullopt;
    }
    return rounded;
}

} // namespace dv
