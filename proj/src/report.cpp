#include "pdnscan/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "pdnscan/util.hpp"

namespace pdnscan {

namespace {

std::string result_document(const Verdict& v, const GoldenSignature& golden) {
    nlohmann::json j;
    j["format"] = "pdnscan-verify-result";
    j["version"] = 1;
    j["decision"] = decision_name(v.decision);
    j["config"] = {{"k_sigma", v.config.k_sigma},
                   {"min_band_points", v.config.min_band_points},
                   {"merge_gap_points", v.config.merge_gap_points},
                   {"sigma_floor_db", v.config.sigma_floor_db}};
    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [key, value] : v.golden_metadata) meta[key] = value;
    j["golden"] = {{"n_samples", v.golden_n_samples},
                   {"n_trials", v.golden_n_trials},
                   {"metadata", std::move(meta)}};
    j["bands"] = nlohmann::json::array();
    for (const auto& b : v.bands)
        j["bands"].push_back({{"f_start_hz", b.f_start_hz},
                              {"f_stop_hz", b.f_stop_hz},
                              {"point_count", b.point_count},
                              {"max_deviation_sigma", b.max_deviation_sigma},
                              {"mean_deviation_sigma", b.mean_deviation_sigma}});
    j["grid_hz"] = golden.grid.points();
    j["deviation_sigma"] = v.deviation_sigma;
    return j.dump(2) + "\n";
}

// ---- SVG plotting -------------------------------------------------------

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string freq_label(double f_hz) {
    char buf[48];
    if (f_hz >= 1e9) std::snprintf(buf, sizeof(buf), "%.3g GHz", f_hz / 1e9);
    else if (f_hz >= 1e6) std::snprintf(buf, sizeof(buf), "%.3g MHz", f_hz / 1e6);
    else if (f_hz >= 1e3) std::snprintf(buf, sizeof(buf), "%.3g kHz", f_hz / 1e3);
    else std::snprintf(buf, sizeof(buf), "%.3g Hz", f_hz);
    return buf;
}

struct Panel {
    double x0, y0, x1, y1;        // plot rectangle in SVG coordinates
    double f_lo, f_hi;            // frequency range
    double v_lo, v_hi;            // dB range
    bool log_x;

    double fx(double f) const {
        const double t = log_x ? (std::log10(f) - std::log10(f_lo)) /
                                     (std::log10(f_hi) - std::log10(f_lo))
                               : (f - f_lo) / (f_hi - f_lo);
        return x0 + t * (x1 - x0);
    }
    double fy(double v) const { return y1 - (v - v_lo) / (v_hi - v_lo) * (y1 - y0); }
};

void tick_step(double lo, double hi, double& step) {
    const double raw = (hi - lo) / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    step = (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

void draw_axes(std::string& svg, const Panel& p, const FrequencyGrid& grid) {
    svg += "<rect x='" + num(p.x0) + "' y='" + num(p.y0) + "' width='" + num(p.x1 - p.x0) +
           "' height='" + num(p.y1 - p.y0) + "' fill='white' stroke='#444'/>\n";
    // x ticks: decades on log axes, six linear ticks otherwise
    if (p.log_x) {
        for (double f = std::pow(10.0, std::ceil(std::log10(p.f_lo))); f <= p.f_hi * 1.0001;
             f *= 10.0) {
            const double x = p.fx(f);
            svg += "<line x1='" + num(x) + "' y1='" + num(p.y0) + "' x2='" + num(x) + "' y2='" +
                   num(p.y1) + "' stroke='#ddd'/>\n";
            svg += "<text x='" + num(x) + "' y='" + num(p.y1 + 18) +
                   "' text-anchor='middle' font-size='12'>" + freq_label(f) + "</text>\n";
        }
    } else {
        for (int k = 0; k <= 5; ++k) {
            const double f = p.f_lo + (p.f_hi - p.f_lo) * k / 5.0;
            const double x = p.fx(f);
            svg += "<line x1='" + num(x) + "' y1='" + num(p.y0) + "' x2='" + num(x) + "' y2='" +
                   num(p.y1) + "' stroke='#ddd'/>\n";
            svg += "<text x='" + num(x) + "' y='" + num(p.y1 + 18) +
                   "' text-anchor='middle' font-size='12'>" + freq_label(f) + "</text>\n";
        }
    }
    double step = 1.0;
    tick_step(p.v_lo, p.v_hi, step);
    for (double v = std::ceil(p.v_lo / step) * step; v <= p.v_hi + 1e-9; v += step) {
        const double y = p.fy(v);
        svg += "<line x1='" + num(p.x0) + "' y1='" + num(y) + "' x2='" + num(p.x1) + "' y2='" +
               num(y) + "' stroke='#ddd'/>\n";
        char lab[32];
        std::snprintf(lab, sizeof(lab), "%.4g", v);
        svg += "<text x='" + num(p.x0 - 6) + "' y='" + num(y + 4) +
               "' text-anchor='end' font-size='12'>" + lab + "</text>\n";
    }
    (void)grid;
}

void draw_polyline(std::string& svg, const Panel& p, const FrequencyGrid& grid,
                   const std::vector<double>& values, const char* color, const char* cls) {
    std::string pts;
    pts.reserve(16 * grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double f = grid[i];
        if (f < p.f_lo || f > p.f_hi) continue;
        pts += num(p.fx(f));
        pts += ',';
        pts += num(p.fy(std::clamp(values[i], p.v_lo, p.v_hi)));
        pts += ' ';
    }
    svg += "<polyline class='" + std::string(cls) + "' points='" + pts +
           "' fill='none' stroke='" + color + "' stroke-width='1.2'/>\n";
}

void draw_envelope(std::string& svg, const Panel& p, const GoldenSignature& g, double half_k) {
    std::string pts;
    pts.reserve(32 * g.grid.size());
    for (std::size_t i = 0; i < g.grid.size(); ++i) {
        const double f = g.grid[i];
        if (f < p.f_lo || f > p.f_hi) continue;
        pts += num(p.fx(f)) + "," +
               num(p.fy(std::clamp(g.mean_db[i] + half_k * g.sigma_db[i], p.v_lo, p.v_hi))) + " ";
    }
    for (std::size_t n = g.grid.size(), i = n; i-- > 0;) {
        const double f = g.grid[i];
        if (f < p.f_lo || f > p.f_hi) continue;
        pts += num(p.fx(f)) + "," +
               num(p.fy(std::clamp(g.mean_db[i] - half_k * g.sigma_db[i], p.v_lo, p.v_hi))) + " ";
    }
    svg += "<polygon class='envelope' points='" + pts + "' fill='#9ec9e8' fill-opacity='0.55' "
           "stroke='none'/>\n";
}

void draw_bands(std::string& svg, const Panel& p, const std::vector<FlaggedBand>& bands) {
    for (const auto& b : bands) {
        if (b.f_stop_hz < p.f_lo || b.f_start_hz > p.f_hi) continue;
        const double xa = p.fx(std::max(b.f_start_hz, p.f_lo));
        const double xb = p.fx(std::min(b.f_stop_hz, p.f_hi));
        const double w = std::max(xb - xa, 1.0);
        svg += "<rect class='flag-band' x='" + num(xa) + "' y='" + num(p.y0) + "' width='" +
               num(w) + "' height='" + num(p.y1 - p.y0) +
               "' fill='#e05c5c' fill-opacity='0.25' stroke='#c03030' stroke-dasharray='3 2'/>\n";
    }
}

void panel_value_range(Panel& p, const GoldenSignature& g, const MagnitudeTrace& dut,
                       double half_k) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < g.grid.size(); ++i) {
        const double f = g.grid[i];
        if (f < p.f_lo || f > p.f_hi) continue;
        lo = std::min({lo, g.mean_db[i] - half_k * g.sigma_db[i], dut.values_db()[i]});
        hi = std::max({hi, g.mean_db[i] + half_k * g.sigma_db[i], dut.values_db()[i]});
    }
    const double pad = std::max(0.06 * (hi - lo), 0.05);
    p.v_lo = lo - pad;
    p.v_hi = hi + pad;
}

std::string plot_svg(const Verdict& v, const GoldenSignature& golden, const MagnitudeTrace& dut) {
    const bool zoom = !v.bands.empty();
    const double width = 1000.0;
    const double height = zoom ? 900.0 : 540.0;
    const double half_k = v.config.k_sigma / 2.0;

    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" + num(width) +
                      "' height='" + num(height) + "' viewBox='0 0 " + num(width) + " " +
                      num(height) + "'>\n";
    svg += "<rect x='0' y='0' width='" + num(width) + "' height='" + num(height) +
           "' fill='#fbfbfb'/>\n";

    const std::string verdict_color = v.decision == Decision::counterfeit ? "#b01818" : "#186218";
    svg += "<text x='20' y='28' font-size='18' font-family='sans-serif'>|S11| against golden "
           "signature &#8212; verdict: <tspan fill='" + verdict_color + "' font-weight='bold'>";
    svg += decision_name(v.decision);
    svg += "</tspan></text>\n";

    Panel main{70, 60, 960, 450, golden.grid.front(), golden.grid.back(), 0, 0, true};
    panel_value_range(main, golden, dut, half_k);
    draw_axes(svg, main, golden.grid);
    draw_envelope(svg, main, golden, half_k);
    draw_bands(svg, main, v.bands);
    draw_polyline(svg, main, golden.grid, golden.mean_db, "#1a5fb4", "mean");
    draw_polyline(svg, main, dut.grid(), dut.values_db(), "#e06000", "dut");
    svg += "<text x='70' y='52' font-size='13'>full sweep (log frequency), |S11| in dB; "
           "envelope &#177;" + num(half_k) + "&#963;</text>\n";

    // legend
    svg += "<rect x='760' y='70' width='190' height='58' fill='white' stroke='#999'/>\n";
    svg += "<line x1='770' y1='86' x2='800' y2='86' stroke='#1a5fb4' stroke-width='2'/>"
           "<text x='806' y='90' font-size='12'>golden mean</text>\n";
    svg += "<line x1='770' y1='104' x2='800' y2='104' stroke='#e06000' stroke-width='2'/>"
           "<text x='806' y='108' font-size='12'>device under test</text>\n";
    svg += "<rect x='770' y='114' width='30' height='9' fill='#9ec9e8' fill-opacity='0.55'/>"
           "<text x='806' y='123' font-size='12'>&#177;" + num(half_k) + "&#963; envelope</text>\n";

    if (zoom) {
        // zoom on the band with the highest peak deviation
        const FlaggedBand* worst = &v.bands.front();
        for (const auto& b : v.bands)
            if (b.max_deviation_sigma > worst->max_deviation_sigma) worst = &b;
        const double bw = std::max(worst->f_stop_hz - worst->f_start_hz,
                                   20.0 * (golden.grid.back() - golden.grid.front()) /
                                       static_cast<double>(golden.grid.size()));
        Panel zp{70, 520, 960, 820, 0, 0, 0, 0, false};
        zp.f_lo = std::max(golden.grid.front(), worst->f_start_hz - 2.0 * bw);
        zp.f_hi = std::min(golden.grid.back(), worst->f_stop_hz + 2.0 * bw);
        panel_value_range(zp, golden, dut, half_k);
        svg += "<g id='zoom-panel'>\n";
        draw_axes(svg, zp, golden.grid);
        draw_envelope(svg, zp, golden, half_k);
        draw_bands(svg, zp, v.bands);
        draw_polyline(svg, zp, golden.grid, golden.mean_db, "#1a5fb4", "mean");
        draw_polyline(svg, zp, dut.grid(), dut.values_db(), "#e06000", "dut");
        char head[160];
        std::snprintf(head, sizeof(head),
                      "zoom: worst band %s - %s, peak deviation %.1f sigma over %d points",
                      freq_label(worst->f_start_hz).c_str(), freq_label(worst->f_stop_hz).c_str(),
                      worst->max_deviation_sigma, worst->point_count);
        svg += "<text x='70' y='512' font-size='13'>" + std::string(head) + "</text>\n";
        svg += "</g>\n";
    }

    svg += "</svg>\n";
    return svg;
}

} // namespace

ReportArtifacts render_report(const Verdict& verdict, const GoldenSignature& golden,
                              const MagnitudeTrace& dut) {
    if (!(golden.grid == dut.grid()))
        throw GridMismatch("report: DUT grid does not match the golden grid");
    ReportArtifacts art;
    art.result_json = result_document(verdict, golden);
    art.plot_svg = plot_svg(verdict, golden, dut);
    return art;
}

void write_report_dir(const ReportArtifacts& artifacts, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "result.json", std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + (dir / "result.json").string());
        out << artifacts.result_json;
    }
    {
        std::ofstream out(dir / "report.svg", std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + (dir / "report.svg").string());
        out << artifacts.plot_svg;
    }
}

} // namespace pdnscan
