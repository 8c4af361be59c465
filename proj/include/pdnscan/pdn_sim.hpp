#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdnscan/rf_core.hpp"

namespace pdnscan {

struct InvalidModel : Error { using Error::Error; };
struct DriftOutOfRange : Error { using Error::Error; };

/// One physical branch: R + jwL + 1/(jwC), the capacitive term present only
/// when `c_farads` is set. At least one element must be nonzero.
struct RlcBranch {
    double r_ohms = 0.0;
    double l_henries = 0.0;
    std::optional<double> c_farads;

    Complex impedance(double omega) const;
    friend bool operator==(const RlcBranch&, const RlcBranch&) = default;
};

/// Ladder stage. `series` is the R+jwL path toward the chip (absent = ideal
/// connection); `shunt` is a series-RLC branch to ground at the chip-side
/// node of this stage (absent = open).
struct PdnStage {
    std::string name;
    std::optional<RlcBranch> series;
    std::optional<RlcBranch> shunt;
    friend bool operator==(const PdnStage&, const PdnStage&) = default;
};

/// PDN equivalent circuit from the probe port to the die. The last stage is
/// the die stage; `die_on_branch` is an extra shunt branch at the die node,
/// active only when `powered` is true (ON-transistor impedance).
struct PdnModel {
    std::string name;
    std::vector<PdnStage> stages;
    std::optional<RlcBranch> die_on_branch;
    ReferenceImpedance z0{50.0};
    bool powered = true;
    /// Documented die-dominant frequency window [lo, hi] in Hz, if known.
    std::optional<std::pair<double, double>> die_band_hz;

    void validate() const;
    const PdnStage& die_stage() const { return stages.back(); }
    friend bool operator==(const PdnModel&, const PdnModel&) = default;
};

/// Per-element lognormal manufacturing spread: each R/L/C is multiplied by
/// exp(N(0, sigma_fraction)). sigma_fraction must lie in [0, 0.5).
struct VariationSpec {
    double sigma_fraction = 0.02;
    std::uint64_t seed = 0;
};

/// Die-only drift with a power-law time profile. The scale factor is
/// s = (stress_hours / reference_hours)^time_exponent; the die shunt ESR
/// grows by esr_drift_coeff*s, its capacitance shrinks by cap_drift_coeff*s
/// and the ON-branch resistance grows by ron_drift_coeff*s.
struct AgingSpec {
    double stress_hours = 0.0;
    double esr_drift_coeff = 0.20;
    double cap_drift_coeff = 0.10;
    double ron_drift_coeff = 0.25;
    double time_exponent = 0.2;
    double reference_hours = 216.0;
};

/// Multiplicative magnitude noise applied in dB; phase is untouched.
struct NoiseSpec {
    double sigma_db = 0.05;
    std::uint64_t seed = 0;
};

// Impedance seen at the probe port at frequency f. The ladder is evaluated
// die-first: shunt in parallel with the accumulated downstream impedance,
// then the series branch in series.
Complex pdn_input_impedance(const PdnModel& model, double f_hz);

// S11 sweep over the grid with per-point multiplicative dB noise. Noise is
// drawn from the counter stream (seed, point index), so results do not
// depend on evaluation order.
ComplexTrace simulate_sweep(const PdnModel& model, const FrequencyGrid& grid,
                            const NoiseSpec& noise);

// A fresh genuine device: every element scaled by an independent lognormal
// factor keyed by (seed, stage index, element slot). The input is unchanged.
PdnModel sample_genuine(const PdnModel& model, const VariationSpec& var);

// Aged copy of the model; off-chip stages are untouched. Throws
// DriftOutOfRange when cap_drift_coeff*s >= 1 (capacitance must stay > 0).
PdnModel apply_aging(const PdnModel& model, const AgingSpec& aging);

// Broadband damage: every stage (and the ON branch) gets R*(1+severity),
// C*(1-0.5*severity), L*(1+0.2*severity). severity in (0, 1].
PdnModel apply_damage(const PdnModel& model, double severity);

// Model files are JSON documents (see README for the schema).
PdnModel model_from_json(const std::string& text);
std::string model_to_json(const PdnModel& model);
PdnModel load_model_file(const std::filesystem::path& path);
void save_model_file(const PdnModel& model, const std::filesystem::path& path);

} // namespace pdnscan
