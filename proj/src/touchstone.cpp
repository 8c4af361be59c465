#include "pdnscan/touchstone.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pdnscan/util.hpp"

namespace pdnscan {

double freq_unit_factor(FreqUnit unit) {
    switch (unit) {
        case FreqUnit::Hz: return 1.0;
        case FreqUnit::kHz: return 1e3;
        case FreqUnit::MHz: return 1e6;
        case FreqUnit::GHz: return 1e9;
    }
    return 1.0;
}

std::string_view freq_unit_name(FreqUnit unit) {
    switch (unit) {
        case FreqUnit::Hz: return "HZ";
        case FreqUnit::kHz: return "KHZ";
        case FreqUnit::MHz: return "MHZ";
        case FreqUnit::GHz: return "GHZ";
    }
    return "HZ";
}

std::string_view param_kind_name(ParamKind kind) {
    switch (kind) {
        case ParamKind::S: return "S";
        case ParamKind::Y: return "Y";
        case ParamKind::Z: return "Z";
    }
    return "S";
}

std::string_view number_format_name(NumberFormat format) {
    switch (format) {
        case NumberFormat::RI: return "RI";
        case NumberFormat::MA: return "MA";
        case NumberFormat::DB: return "DB";
    }
    return "MA";
}

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > start) tokens.push_back(s.substr(start, i - start));
    }
    return tokens;
}

[[noreturn]] void syntax_error(std::size_t line_no, const std::string& why) {
    throw SyntaxError("line " + std::to_string(line_no) + ": " + why);
}

TouchstoneOptions parse_option_line(std::string_view body, std::size_t line_no) {
    // Body is the text after '#'. Tokens may appear in any order and any
    // case; omitted tokens keep the Touchstone 1.1 defaults.
    TouchstoneOptions opts;
    auto tokens = split_ws(body);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string t = upper(tokens[i]);
        if (t == "HZ") opts.freq_unit = FreqUnit::Hz;
        else if (t == "KHZ") opts.freq_unit = FreqUnit::kHz;
        else if (t == "MHZ") opts.freq_unit = FreqUnit::MHz;
        else if (t == "GHZ") opts.freq_unit = FreqUnit::GHz;
        else if (t == "S") opts.parameter = ParamKind::S;
        else if (t == "Y") opts.parameter = ParamKind::Y;
        else if (t == "Z") opts.parameter = ParamKind::Z;
        else if (t == "G" || t == "H")
            syntax_error(line_no, "parameter type '" + t + "' is not supported");
        else if (t == "RI") opts.format = NumberFormat::RI;
        else if (t == "MA") opts.format = NumberFormat::MA;
        else if (t == "DB") opts.format = NumberFormat::DB;
        else if (t == "R") {
            if (i + 1 >= tokens.size())
                syntax_error(line_no, "'R' token without a reference value");
            double ref = 0.0;
            if (!parse_double(tokens[i + 1], ref) || !(ref > 0.0))
                syntax_error(line_no, "bad reference impedance '" + std::string(tokens[i + 1]) + "'");
            opts.reference_ohms = ref;
            ++i;
        } else {
            syntax_error(line_no, "unrecognized option token '" + std::string(tokens[i]) + "'");
        }
    }
    return opts;
}

Complex decode_pair(NumberFormat format, double a, double b) {
    switch (format) {
        case NumberFormat::RI: return Complex(a, b);
        case NumberFormat::MA: return std::polar(a, b * kDegToRad);
        case NumberFormat::DB: return std::polar(std::pow(10.0, a / 20.0), b * kDegToRad);
    }
    return Complex(a, b);
}

void encode_pair(NumberFormat format, Complex v, double& a, double& b) {
    switch (format) {
        case NumberFormat::RI:
            a = v.real();
            b = v.imag();
            return;
        case NumberFormat::MA:
            a = std::abs(v);
            b = std::arg(v) / kDegToRad;
            return;
        case NumberFormat::DB:
            a = 20.0 * std::log10(std::abs(v));
            b = std::arg(v) / kDegToRad;
            return;
    }
}

} // namespace

TouchstoneNetwork parse_touchstone(std::string_view text, int port_hint) {
    if (port_hint != 0 && port_hint != 1 && port_hint != 2)
        throw SyntaxError("port hint must be 0, 1 or 2");

    TouchstoneOptions options;
    bool have_options = false;
    std::vector<std::string> comments;
    std::vector<double> freqs_hz;
    std::vector<std::vector<Complex>> data;
    int ports = port_hint;
    std::size_t expected_columns = 0;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos) continue; // blank
        const char lead = line[first];

        if (lead == '!') {
            comments.emplace_back(line.substr(first + 1));
            continue;
        }
        if (lead == '[') {
            // Keyword syntax only exists in Touchstone 2.x.
            throw UnsupportedVersion("line " + std::to_string(line_no) +
                                     ": Touchstone 2.x keyword '" +
                                     std::string(line.substr(first)) +
                                     "' is not supported (version 1 files only)");
        }
        if (lead == '#') {
            if (have_options) syntax_error(line_no, "second option line");
            if (!data.empty()) syntax_error(line_no, "option line after data");
            options = parse_option_line(line.substr(first + 1), line_no);
            have_options = true;
            continue;
        }

        // Data line; an inline '!' starts a trailing comment. A file with no
        // option line at all is legal (defaults apply); an option line after
        // data is rejected above.
        std::size_t bang = line.find('!');
        if (bang != std::string_view::npos) line = line.substr(0, bang);

        auto tokens = split_ws(line);
        if (tokens.empty()) continue;

        std::vector<double> nums(tokens.size());
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (!parse_double(tokens[i], nums[i]))
                syntax_error(line_no, "bad numeric field '" + std::string(tokens[i]) + "'");

        if (expected_columns == 0) {
            if (ports == 0) {
                if (nums.size() == 3) ports = 1;
                else if (nums.size() == 9) ports = 2;
                else
                    syntax_error(line_no, "cannot infer port count from " +
                                              std::to_string(nums.size()) + " columns");
            }
            expected_columns = 1 + 2 * static_cast<std::size_t>(ports) * ports;
        }
        if (nums.size() != expected_columns)
            syntax_error(line_no, "expected " + std::to_string(expected_columns) +
                                      " fields for a " + std::to_string(ports) +
                                      "-port network, got " + std::to_string(nums.size()));

        const double f_hz = nums[0] * freq_unit_factor(options.freq_unit);
        if (!freqs_hz.empty() && f_hz <= freqs_hz.back())
            throw NonMonotonicFrequency("line " + std::to_string(line_no) + ": frequency " +
                                        format_double(f_hz) +
                                        " Hz does not increase past previous point");
        freqs_hz.push_back(f_hz);

        std::vector<Complex> row(static_cast<std::size_t>(ports) * ports);
        for (std::size_t k = 0; k < row.size(); ++k)
            row[k] = decode_pair(options.format, nums[1 + 2 * k], nums[2 + 2 * k]);
        data.push_back(std::move(row));
    }

    if (data.empty()) throw SyntaxError("no data lines");

    return TouchstoneNetwork{options, ports, FrequencyGrid(std::move(freqs_hz)),
                             std::move(data), std::move(comments)};
}

std::string write_touchstone(const TouchstoneNetwork& net, NumberFormat format) {
    std::string out;
    out.reserve(64 * net.grid.size());
    for (const auto& c : net.comments) {
        out += '!';
        out += c;
        out += '\n';
    }
    out += "# HZ ";
    out += param_kind_name(net.options.parameter);
    out += ' ';
    out += number_format_name(format);
    out += " R ";
    out += format_double(net.options.reference_ohms);
    out += '\n';
    for (std::size_t i = 0; i < net.grid.size(); ++i) {
        out += format_double(net.grid[i]);
        for (const Complex& v : net.data[i]) {
            double a = 0.0, b = 0.0;
            encode_pair(format, v, a, b);
            out += ' ';
            out += format_double(a);
            out += ' ';
            out += format_double(b);
        }
        out += '\n';
    }
    return out;
}

ComplexTrace extract_s11(const TouchstoneNetwork& net) {
    if (net.options.parameter != ParamKind::S)
        throw UnsupportedParameter(std::string("network carries ") +
                                   std::string(param_kind_name(net.options.parameter)) +
                                   "-parameters; S-parameters are required for analysis");
    std::vector<Complex> values(net.grid.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = net.data[i][0]; // column order is S11 S21 S12 S22 for 2 ports
    return ComplexTrace(net.grid, std::move(values));
}

TouchstoneNetwork read_touchstone_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    int hint = 0;
    const std::string ext = upper(path.extension().string());
    if (ext == ".S1P") hint = 1;
    else if (ext == ".S2P") hint = 2;
    return parse_touchstone(buf.str(), hint);
}

void write_touchstone_file(const TouchstoneNetwork& net, const std::filesystem::path& path,
                           NumberFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << write_touchstone(net, format);
    if (!out) throw Error("write failed for " + path.string());
}

TouchstoneNetwork make_s1p(const ComplexTrace& s11, double reference_ohms,
                           std::vector<std::string> comments) {
    TouchstoneOptions opts;
    opts.freq_unit = FreqUnit::Hz;
    opts.parameter = ParamKind::S;
    opts.format = NumberFormat::RI;
    opts.reference_ohms = reference_ohms;
    std::vector<std::vector<Complex>> data(s11.size());
    for (std::size_t i = 0; i < s11.size(); ++i) data[i] = {s11.values()[i]};
    return TouchstoneNetwork{opts, 1, s11.grid(), std::move(data), std::move(comments)};
}

} // namespace pdnscan
