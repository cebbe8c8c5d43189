#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace atf {

/// SplitMix64. Small, portable and fully specified, so seeded runs are
/// reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept;
    /// Uniform in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;
    /// Uniform in [0, 1).
    double uniform() noexcept;

private:
    std::uint64_t state_;
};

/// Counter-based derivation of a stage seed from the run seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stage, std::uint64_t counter = 0) noexcept;

} // namespace atf
