#include "pdnscan/util.hpp"

#include <array>
#include <cstdio>

namespace pdnscan {

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                             std::chars_format::fixed);
    if (res.ec != std::errc{}) {
        // Out of range for fixed notation (huge magnitudes); fall back to
        // general form, still round-trip exact.
        res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    }
    return std::string(buf.data(), res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex16(std::uint64_t value) {
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf.data(), 16);
}

bool parse_double(std::string_view token, double& out) {
    if (token.empty()) return false;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    // from_chars does not accept a leading '+', common in instrument output.
    if (*first == '+') ++first;
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

} // namespace pdnscan
