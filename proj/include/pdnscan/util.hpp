#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

namespace pdnscan {

// Shortest fixed-notation decimal string that parses back to exactly the
// same double. Used everywhere a number crosses a text interface
// (Touchstone files, golden files, SCPI commands) so that round-trips are
// lossless and output is stable across platforms.
std::string format_double(double value);

// FNV-1a 64-bit hash of a byte string. Checksums in golden files and
// acquisition manifests use this; the algorithm is part of both formats.
std::uint64_t fnv1a64(std::string_view bytes);

std::string to_hex16(std::uint64_t value);

// Strict double parse of a whole token. Returns false on trailing junk.
bool parse_double(std::string_view token, double& out);

} // namespace pdnscan
