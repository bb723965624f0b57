#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <cstdint>
#include <random>

namespace inverspect {

/// Seedable generator whose output is identical on every platform.
///
/// Engine: std::mt19937_64 (its sequence is fixed by the C++ standard).
/// Uniforms use the top 53 bits, offset by half an ulp so they lie in (0, 1).
/// Gaussians use the inverse CDF, z = -sqrt(2) * erfc_inv(2u), evaluated with
/// Boost.Math; one engine draw per normal deviate.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform()
    {
        constexpr double kScale = 1.0 / 9007199254740992.0; // 2^-53
        return (static_cast<double>(engine_() >> 11) + 0.5) * kScale;
    }

    double gaussian()
    {
        return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * uniform());
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n)
    {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace inverspect
