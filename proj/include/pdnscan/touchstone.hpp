#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pdnscan/rf_core.hpp"

namespace pdnscan {

struct SyntaxError : Error { using Error::Error; };
struct NonMonotonicFrequency : Error { using Error::Error; };
struct UnsupportedParameter : Error { using Error::Error; };
struct UnsupportedVersion : Error { using Error::Error; };

enum class FreqUnit { Hz, kHz, MHz, GHz };
enum class ParamKind { S, Y, Z };
enum class NumberFormat { RI, MA, DB };

double freq_unit_factor(FreqUnit unit);
std::string_view freq_unit_name(FreqUnit unit);
std::string_view param_kind_name(ParamKind kind);
std::string_view number_format_name(NumberFormat format);

/// Option-line settings. Defaults are the Touchstone 1.1 defaults that apply
/// when the option line omits fields ("# GHZ S MA R 50").
struct TouchstoneOptions {
    FreqUnit freq_unit = FreqUnit::GHz;
    ParamKind parameter = ParamKind::S;
    NumberFormat format = NumberFormat::MA;
    double reference_ohms = 50.0;
};

/// A parsed Touchstone v1 network. Frequencies are normalized to Hz and
/// values to complex numbers regardless of the file's unit/format tokens.
/// `data` holds one row per frequency with ports^2 entries in file column
/// order (1-port: S11; 2-port: S11 S21 S12 S22).
struct TouchstoneNetwork {
    TouchstoneOptions options;
    int ports;
    FrequencyGrid grid;
    std::vector<std::vector<Complex>> data;
    std::vector<std::string> comments; // '!' lines, leading '!' stripped
};

// port_hint: 1 or 2 when known from the file extension, 0 to infer from the
// column count of the first data line.
TouchstoneNetwork parse_touchstone(std::string_view text, int port_hint = 0);

// Emits comments, the option line (always in Hz), then one data line per
// frequency. Fields are shortest-exact decimal, so parse(write(net))
// reproduces grids exactly and values to well under 1e-7 relative.
std::string write_touchstone(const TouchstoneNetwork& net, NumberFormat format);

// S11 column on the Hz grid. Throws UnsupportedParameter unless the network
// carries S-parameters.
ComplexTrace extract_s11(const TouchstoneNetwork& net);

// File helpers. Reading infers the port hint from the .s1p/.s2p extension.
TouchstoneNetwork read_touchstone_file(const std::filesystem::path& path);
void write_touchstone_file(const TouchstoneNetwork& net, const std::filesystem::path& path,
                           NumberFormat format);

// Wrap a simulated or acquired S11 trace as a 1-port network.
TouchstoneNetwork make_s1p(const ComplexTrace& s11, double reference_ohms,
                           std::vector<std::string> comments = {});

} // namespace pdnscan
