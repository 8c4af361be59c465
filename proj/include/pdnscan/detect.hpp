#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pdnscan/rf_core.hpp"
#include "pdnscan/signature.hpp"

namespace pdnscan {

struct DetectorConfig {
    double k_sigma = 6.0;        // envelope width in sigmas
    int min_band_points = 5;     // merged runs with fewer marked points are dropped
    int merge_gap_points = 3;    // marked runs separated by <= this many points merge
    double sigma_floor_db = 1e-4;

    void validate() const;
};

struct FlaggedBand {
    double f_start_hz = 0.0;
    double f_stop_hz = 0.0;
    double max_deviation_sigma = 0.0;
    double mean_deviation_sigma = 0.0;
    int point_count = 0;          // marked points inside the merged run
    std::size_t first_index = 0;  // grid indices of first/last marked point
    std::size_t last_index = 0;
};

enum class Decision { genuine, counterfeit };

struct Verdict {
    Decision decision = Decision::genuine;
    std::vector<FlaggedBand> bands;
    std::vector<double> deviation_sigma; // |dut - mean| / max(sigma, floor)
    DetectorConfig config;
    int golden_n_samples = 0;
    int golden_n_trials = 0;
    std::vector<std::pair<std::string, std::string>> golden_metadata;
};

// d[i] = |dut[i] - mean[i]| / max(sigma[i], sigma_floor_db). Grids must be
// identical; there is deliberately no resampling.
std::vector<double> deviation_trace(const GoldenSignature& golden, const MagnitudeTrace& dut,
                                    const DetectorConfig& cfg);

// Threshold at k_sigma, merge runs across small gaps, drop short runs.
std::vector<FlaggedBand> localize_bands(const std::vector<double>& deviation,
                                        const FrequencyGrid& grid, const DetectorConfig& cfg);

// Full decision: counterfeit iff any band survives.
Verdict verify(const GoldenSignature& golden, const MagnitudeTrace& dut,
               const DetectorConfig& cfg = {});

const char* decision_name(Decision d);

} // namespace pdnscan
