#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdnscan/rf_core.hpp"

namespace pdnscan {

struct TooFewSamples : Error { using Error::Error; };
struct FormatVersionUnknown : Error { using Error::Error; };
struct CorruptFile : Error { using Error::Error; };

/// Repeated measurements of one physical sample, all on one grid.
struct SampleRecord {
    std::string sample_id;
    std::vector<MagnitudeTrace> trials;
};

/// Per-frequency mean and sample standard deviation of |S11| in dB over the
/// genuine population, after per-sample trial averaging.
///
/// Summation order is part of the contract: statistics are computed with
/// naive two-pass formulas accumulating in sample-index order (and trials in
/// trial-index order), so independently coded two-pass oracles reproduce the
/// stored values exactly.
struct GoldenSignature {
    FrequencyGrid grid;
    std::vector<double> mean_db;
    std::vector<double> sigma_db; // n-1 denominator, >= 0
    int n_samples = 0;            // >= 2
    int n_trials = 0;             // >= 1, minimum across samples
    std::vector<std::pair<std::string, std::string>> metadata;
};

// Pointwise mean of the trial traces in dB.
MagnitudeTrace average_trials(const SampleRecord& record);

// Golden signature over >= 2 samples sharing one grid.
GoldenSignature build_golden(const std::vector<SampleRecord>& records,
                             std::vector<std::pair<std::string, std::string>> metadata = {});

// Versioned, checksummed text format (see README). Round-trips exactly.
std::string save_golden(const GoldenSignature& sig);
GoldenSignature load_golden(std::string_view text);
void save_golden_file(const GoldenSignature& sig, const std::filesystem::path& path);
GoldenSignature load_golden_file(const std::filesystem::path& path);

} // namespace pdnscan
