#include "pdnscan/rng.hpp"

#include <cmath>
#include <numbers>

namespace pdnscan {

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer (Steele/Lea/Flood)
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t keyed(std::uint64_t seed, RngStream stream, std::uint64_t counter) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ static_cast<std::uint64_t>(stream));
    h = mix64(h ^ counter);
    return h;
}

double to_unit_interval(std::uint64_t h) {
    // 53 high bits -> (0, 1]; never returns 0 so log() below is safe.
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

} // namespace

double counter_uniform(std::uint64_t seed, RngStream stream, std::uint64_t counter) {
    return to_unit_interval(keyed(seed, stream, counter));
}

double counter_normal(std::uint64_t seed, RngStream stream, std::uint64_t counter) {
    const double u1 = to_unit_interval(keyed(seed, stream, 2 * counter));
    const double u2 = to_unit_interval(keyed(seed, stream, 2 * counter + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t lane) {
    return mix64(mix64(base) ^ (lane + 0x9e3779b97f4a7c15ull));
}

} // namespace pdnscan
