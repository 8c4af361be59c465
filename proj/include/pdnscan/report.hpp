#pragma once

#include <filesystem>
#include <string>

#include "pdnscan/detect.hpp"

namespace pdnscan {

/// Rendered verification outputs: a machine-readable JSON document and an
/// SVG plot (golden mean, +-(k/2) sigma envelope, DUT overlay, flagged bands
/// shaded, zoom panel on the worst band).
struct ReportArtifacts {
    std::string result_json;
    std::string plot_svg;
};

ReportArtifacts render_report(const Verdict& verdict, const GoldenSignature& golden,
                              const MagnitudeTrace& dut);

// Writes result.json and report.svg into dir (created if needed).
void write_report_dir(const ReportArtifacts& artifacts, const std::filesystem::path& dir);

} // namespace pdnscan
