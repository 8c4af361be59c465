#pragma once

// Shared fixtures: the reference preset, random ladder models, and the
// synthetic golden/DUT measurement protocol used by integration tests.

#include <random>
#include <string>
#include <vector>

#include "pdnscan/detect.hpp"
#include "pdnscan/pdn_sim.hpp"
#include "pdnscan/rng.hpp"
#include "pdnscan/signature.hpp"

#ifndef PDNSCAN_PRESET_FILE
#define PDNSCAN_PRESET_FILE "presets/cw308-like.json"
#endif

namespace pdnscan::testing {

inline PdnModel preset_model() { return load_model_file(PDNSCAN_PRESET_FILE); }

inline FrequencyGrid default_grid() { return FrequencyGrid::linear(1e6, 1e9, 5000); }

// Random 1-6 stage ladder. Series branches always carry some resistance so
// admittances stay finite for the nodal oracle.
inline PdnModel random_model(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    auto log_uni = [&](double lo, double hi) {
        return std::exp(uni(std::log(lo), std::log(hi)));
    };

    PdnModel m;
    m.name = "random-" + std::to_string(seed);
    const int n_stages = static_cast<int>(rng() % 6) + 1;
    for (int i = 0; i < n_stages; ++i) {
        PdnStage st;
        st.name = "st" + std::to_string(i);
        const bool want_series = rng() % 10 < 7;
        const bool want_shunt = rng() % 10 < 8 || !want_series;
        if (want_series) {
            RlcBranch b;
            b.r_ohms = log_uni(1e-3, 2.0);
            b.l_henries = log_uni(1e-10, 1e-7);
            if (rng() % 4 == 0) b.c_farads = log_uni(1e-12, 1e-6);
            st.series = b;
        }
        if (want_shunt) {
            RlcBranch b;
            b.r_ohms = log_uni(1e-3, 5.0);
            b.l_henries = rng() % 5 == 0 ? 0.0 : log_uni(1e-10, 1e-7);
            if (rng() % 5 != 0) b.c_farads = log_uni(1e-12, 1e-5);
            st.shunt = b;
        }
        m.stages.push_back(std::move(st));
    }
    if (rng() % 2 == 0) {
        RlcBranch b;
        b.r_ohms = log_uni(0.05, 2.0);
        b.l_henries = log_uni(1e-10, 1e-8);
        b.c_farads = log_uni(1e-11, 1e-8);
        m.die_on_branch = b;
    }
    m.powered = rng() % 2 == 0;

    // Keep the die node grounded through something: a series-only tail would
    // be invisible to the ladder but singular for the nodal oracle.
    const bool die_grounded =
        m.stages.back().shunt.has_value() || (m.powered && m.die_on_branch.has_value());
    if (!die_grounded) {
        RlcBranch b;
        b.r_ohms = 1.0;
        b.c_farads = 1e-9;
        m.stages.back().shunt = b;
    }
    m.validate();
    return m;
}

// Measurement protocol shared by the synthetic-reproduction tests: each
// device is a variation sample of the base model, measured `trials` times
// and trial-averaged, exactly like the golden population.
struct Scenario {
    PdnModel base;
    FrequencyGrid grid;
    int n_samples = 12;
    int trials = 10;
    double variation = 0.02;
    double noise_db = 0.05;

    Scenario() : base(preset_model()), grid(default_grid()) {}

    MagnitudeTrace measure(const PdnModel& device, std::uint64_t noise_base) const {
        SampleRecord rec;
        rec.sample_id = "m" + std::to_string(noise_base);
        for (int t = 0; t < trials; ++t) {
            const NoiseSpec noise{noise_db, derive_seed(noise_base, static_cast<std::uint64_t>(t))};
            rec.trials.push_back(magnitude_db(simulate_sweep(device, grid, noise)));
        }
        return average_trials(rec);
    }

    PdnModel device(std::uint64_t var_seed) const {
        return sample_genuine(base, VariationSpec{variation, var_seed});
    }

    GoldenSignature golden() const {
        std::vector<SampleRecord> records;
        for (int i = 0; i < n_samples; ++i) {
            SampleRecord rec;
            rec.sample_id = "golden-" + std::to_string(i);
            const PdnModel dev = device(1000 + static_cast<std::uint64_t>(i));
            for (int t = 0; t < trials; ++t) {
                const NoiseSpec noise{
                    noise_db,
                    derive_seed(2000 + static_cast<std::uint64_t>(i) * 64 +
                                    static_cast<std::uint64_t>(t),
                                0)};
                rec.trials.push_back(magnitude_db(simulate_sweep(dev, grid, noise)));
            }
            records.push_back(std::move(rec));
        }
        return build_golden(records, {{"device", "cw308-like-sim"}});
    }
};

} // namespace pdnscan::testing
