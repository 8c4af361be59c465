#pragma once

#include <cstdint>

namespace pdnscan {

// Counter-based random stream built on the splitmix64 finalizer. Every draw
// is addressed by (seed, stream, counter), so evaluation order never matters
// and traces are reproducible bit for bit for a given seed.
//
// Streams keep independent uses of one seed from colliding.
enum class RngStream : std::uint64_t {
    sweep_noise = 1,
    element_variation = 2,
    mock_trial_noise = 3,
};

std::uint64_t mix64(std::uint64_t x);

// Uniform in (0, 1], 53-bit resolution.
double counter_uniform(std::uint64_t seed, RngStream stream, std::uint64_t counter);

// Standard normal deviate (Box-Muller on two counter_uniform draws).
double counter_normal(std::uint64_t seed, RngStream stream, std::uint64_t counter);

// Stable per-lane sub-seed (e.g. one noise seed per measurement trial).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t lane);

} // namespace pdnscan
