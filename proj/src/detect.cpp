#include "pdnscan/detect.hpp"

#include <algorithm>
#include <cmath>

namespace pdnscan {

void DetectorConfig::validate() const {
    if (!(k_sigma > 0.0)) throw Error("k_sigma must be > 0");
    if (min_band_points < 1) throw Error("min_band_points must be >= 1");
    if (merge_gap_points < 0) throw Error("merge_gap_points must be >= 0");
    if (!(sigma_floor_db > 0.0)) throw Error("sigma_floor_db must be > 0");
}

const char* decision_name(Decision d) {
    return d == Decision::genuine ? "genuine" : "counterfeit";
}

std::vector<double> deviation_trace(const GoldenSignature& golden, const MagnitudeTrace& dut,
                                    const DetectorConfig& cfg) {
    cfg.validate();
    if (!(golden.grid == dut.grid()))
        throw GridMismatch("DUT grid does not match the golden grid; re-measure on the "
                           "golden grid (no resampling is performed)");
    std::vector<double> d(golden.grid.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double sigma = std::max(golden.sigma_db[i], cfg.sigma_floor_db);
        d[i] = std::abs(dut.values_db()[i] - golden.mean_db[i]) / sigma;
    }
    return d;
}

std::vector<FlaggedBand> localize_bands(const std::vector<double>& deviation,
                                        const FrequencyGrid& grid, const DetectorConfig& cfg) {
    cfg.validate();
    if (deviation.size() != grid.size())
        throw GridMismatch("deviation trace length does not match grid");

    // Collect marked runs, then merge runs separated by small unmarked gaps.
    struct Run {
        std::size_t first, last; // marked endpoints
        int marked;
    };
    std::vector<Run> runs;
    std::size_t i = 0;
    const std::size_t n = deviation.size();
    while (i < n) {
        if (deviation[i] > cfg.k_sigma) {
            std::size_t j = i;
            while (j + 1 < n && deviation[j + 1] > cfg.k_sigma) ++j;
            runs.push_back({i, j, static_cast<int>(j - i + 1)});
            i = j + 1;
        } else {
            ++i;
        }
    }

    std::vector<Run> merged;
    for (const Run& r : runs) {
        if (!merged.empty() &&
            r.first - merged.back().last - 1 <= static_cast<std::size_t>(cfg.merge_gap_points)) {
            merged.back().last = r.last;
            merged.back().marked += r.marked;
        } else {
            merged.push_back(r);
        }
    }

    std::vector<FlaggedBand> bands;
    for (const Run& r : merged) {
        if (r.marked < cfg.min_band_points) continue;
        FlaggedBand band;
        band.first_index = r.first;
        band.last_index = r.last;
        band.f_start_hz = grid[r.first];
        band.f_stop_hz = grid[r.last];
        band.point_count = r.marked;
        double sum = 0.0, peak = 0.0;
        for (std::size_t k = r.first; k <= r.last; ++k) {
            if (deviation[k] > cfg.k_sigma) { // stats over marked points only
                sum += deviation[k];
                peak = std::max(peak, deviation[k]);
            }
        }
        band.max_deviation_sigma = peak;
        band.mean_deviation_sigma = sum / r.marked;
        bands.push_back(band);
    }
    return bands;
}

Verdict verify(const GoldenSignature& golden, const MagnitudeTrace& dut,
               const DetectorConfig& cfg) {
    Verdict v;
    v.deviation_sigma = deviation_trace(golden, dut, cfg);
    v.bands = localize_bands(v.deviation_sigma, golden.grid, cfg);
    v.decision = v.bands.empty() ? Decision::genuine : Decision::counterfeit;
    v.config = cfg;
    v.golden_n_samples = golden.n_samples;
    v.golden_n_trials = golden.n_trials;
    v.golden_metadata = golden.metadata;
    return v;
}

} // namespace pdnscan
