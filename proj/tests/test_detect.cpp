#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include <json.hpp>

#include "band_oracle.hpp"
#include "helpers.hpp"
#include "pdnscan/detect.hpp"
#include "pdnscan/report.hpp"

using namespace pdnscan;
using pdnscan::testing::oracle_bands;

namespace {

FrequencyGrid unit_grid(std::size_t n) {
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = 1e6 * static_cast<double>(i + 1);
    return FrequencyGrid(f);
}

GoldenSignature flat_golden(std::size_t n, double mean, double sigma) {
    GoldenSignature s{unit_grid(n), std::vector<double>(n, mean), std::vector<double>(n, sigma),
                      3, 1, {}};
    return s;
}

} // namespace

TEST_CASE("deviation_trace definitional cases") {
    const auto g = flat_golden(4, -10.0, 0.1);
    DetectorConfig cfg;

    const MagnitudeTrace same(g.grid, std::vector<double>(4, -10.0));
    for (double d : deviation_trace(g, same, cfg)) CHECK(d == 0.0);

    MagnitudeTrace off(g.grid, {-10.0, -10.2, -10.0, -10.0});
    const auto d = deviation_trace(g, off, cfg);
    CHECK(d[1] == doctest::Approx(2.0).epsilon(1e-12));

    // sigma floor: sigma 0 stored, 0.001 dB off, floor 1e-4 -> 10
    auto zero_sigma = flat_golden(4, -10.0, 0.0);
    MagnitudeTrace close(zero_sigma.grid, {-10.001, -10.0, -10.0, -10.0});
    CHECK(deviation_trace(zero_sigma, close, cfg)[0] == doctest::Approx(10.0).epsilon(1e-9));

    const MagnitudeTrace wrong(unit_grid(5), std::vector<double>(5, -10.0));
    CHECK_THROWS_AS(deviation_trace(g, wrong, cfg), GridMismatch);
}

TEST_CASE("deviation is symmetric and offset-invariant") {
    const auto g = flat_golden(8, -12.0, 0.05);
    DetectorConfig cfg;
    std::vector<double> up(8), down(8);
    for (std::size_t i = 0; i < 8; ++i) {
        up[i] = -12.0 + 0.01 * static_cast<double>(i);
        down[i] = -12.0 - 0.01 * static_cast<double>(i);
    }
    const auto du = deviation_trace(g, MagnitudeTrace(g.grid, up), cfg);
    const auto dd = deviation_trace(g, MagnitudeTrace(g.grid, down), cfg);
    for (std::size_t i = 0; i < 8; ++i) CHECK(du[i] == doctest::Approx(dd[i]).epsilon(1e-12));

    auto g_shift = g;
    for (auto& m : g_shift.mean_db) m += 7.5;
    std::vector<double> up_shift = up;
    for (auto& v : up_shift) v += 7.5;
    const auto ds = deviation_trace(g_shift, MagnitudeTrace(g.grid, up_shift), cfg);
    for (std::size_t i = 0; i < 8; ++i) CHECK(ds[i] == doctest::Approx(du[i]).epsilon(1e-9));
}

TEST_CASE("localize_bands: spec walk-throughs") {
    DetectorConfig cfg; // k=6, min 5, gap 3
    const auto grid = unit_grid(60);

    std::vector<double> quiet(60, 1.0);
    CHECK(localize_bands(quiet, grid, cfg).empty());

    std::vector<double> spike(60, 1.0);
    spike[30] = 42.0; // 7k with k=6
    CHECK(localize_bands(spike, grid, cfg).empty()); // noise-spike rejection

    // 20 consecutive marked with a 2-point dip in the middle, gap 3:
    // one merged band with point_count 18
    std::vector<double> dip(60, 1.0);
    for (int i = 10; i < 30; ++i) dip[i] = 8.0;
    dip[19] = 1.0;
    dip[20] = 1.0;
    const auto bands = localize_bands(dip, grid, cfg);
    REQUIRE(bands.size() == 1);
    CHECK(bands[0].point_count == 18);
    CHECK(bands[0].first_index == 10);
    CHECK(bands[0].last_index == 29);
    CHECK(bands[0].f_start_hz == grid[10]);
    CHECK(bands[0].f_stop_hz == grid[29]);
    CHECK(bands[0].max_deviation_sigma == 8.0);
    CHECK(bands[0].mean_deviation_sigma == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("localize_bands equals the union-find oracle on random patterns") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 5 + rng() % 196;
        DetectorConfig cfg;
        cfg.k_sigma = 6.0;
        cfg.merge_gap_points = static_cast<int>(rng() % 5);
        cfg.min_band_points = 1 + static_cast<int>(rng() % 6);

        std::vector<double> d(n);
        std::vector<bool> marks(n);
        for (std::size_t i = 0; i < n; ++i) {
            marks[i] = rng() % 3 == 0;
            d[i] = marks[i] ? 7.0 + static_cast<double>(rng() % 100) : 1.0;
        }
        const auto got = localize_bands(d, unit_grid(n), cfg);
        const auto want = oracle_bands(marks, cfg.merge_gap_points, cfg.min_band_points);
        REQUIRE(got.size() == want.size());
        for (std::size_t b = 0; b < got.size(); ++b) {
            CHECK(got[b].first_index == want[b].first);
            CHECK(got[b].last_index == want[b].second);
        }
    }
}

TEST_CASE("threshold monotonicity: flagged sets are nested in k") {
    std::mt19937_64 rng(29);
    const std::size_t n = 300;
    std::vector<double> d(n);
    for (auto& x : d) x = static_cast<double>(rng() % 1500) / 100.0;
    const auto grid = unit_grid(n);

    DetectorConfig lo, hi;
    lo.k_sigma = 5.0;
    hi.k_sigma = 9.0;
    lo.min_band_points = hi.min_band_points = 1;
    lo.merge_gap_points = hi.merge_gap_points = 0;

    auto marked = [&](const DetectorConfig& cfg) {
        std::vector<bool> m(n, false);
        for (const auto& band : localize_bands(d, grid, cfg))
            for (std::size_t i = band.first_index; i <= band.last_index; ++i)
                m[i] = d[i] > cfg.k_sigma;
        return m;
    };
    const auto m_lo = marked(lo), m_hi = marked(hi);
    for (std::size_t i = 0; i < n; ++i)
        if (m_hi[i]) CHECK(m_lo[i]); // higher threshold never adds points
}

TEST_CASE("verify composes and decides") {
    const auto g = flat_golden(40, -10.0, 0.1);
    DetectorConfig cfg;

    const Verdict clean = verify(g, MagnitudeTrace(g.grid, std::vector<double>(40, -10.05)), cfg);
    CHECK(clean.decision == Decision::genuine);
    CHECK(clean.bands.empty());

    std::vector<double> bad(40, -10.0);
    for (int i = 12; i < 24; ++i) bad[i] = -11.0; // 10 sigma for 12 points
    const Verdict caught = verify(g, MagnitudeTrace(g.grid, bad), cfg);
    CHECK(caught.decision == Decision::counterfeit);
    REQUIRE(caught.bands.size() == 1);
    CHECK(caught.bands[0].point_count == 12);
    CHECK(caught.golden_n_samples == 3);
}

TEST_CASE("report: genuine document and plot") {
    const auto g = flat_golden(40, -10.0, 0.1);
    const MagnitudeTrace dut(g.grid, std::vector<double>(40, -10.02));
    const Verdict v = verify(g, dut, DetectorConfig{});
    const ReportArtifacts art = render_report(v, g, dut);

    const auto doc = nlohmann::json::parse(art.result_json);
    CHECK(doc["decision"] == "genuine");
    CHECK(doc["bands"].empty());
    CHECK(doc["config"]["k_sigma"] == 6.0);
    CHECK(art.plot_svg.find("flag-band") == std::string::npos);
    CHECK(art.plot_svg.find("zoom-panel") == std::string::npos);
    CHECK(art.plot_svg.find("genuine") != std::string::npos);
}

TEST_CASE("report: counterfeit with one band has one flag region and one zoom panel") {
    const auto g = flat_golden(60, -10.0, 0.1);
    std::vector<double> bad(60, -10.0);
    for (int i = 20; i < 32; ++i) bad[i] = -11.5;
    const MagnitudeTrace dut(g.grid, bad);
    const Verdict v = verify(g, dut, DetectorConfig{});
    REQUIRE(v.bands.size() == 1);

    const ReportArtifacts art = render_report(v, g, dut);
    // one flag rect in the main panel + one in the zoom panel
    std::size_t count = 0;
    for (std::size_t pos = art.plot_svg.find("flag-band"); pos != std::string::npos;
         pos = art.plot_svg.find("flag-band", pos + 1))
        ++count;
    CHECK(count == 2);
    CHECK(art.plot_svg.find("id='zoom-panel'") != std::string::npos);

    const auto doc = nlohmann::json::parse(art.result_json);
    CHECK(doc["decision"] == "counterfeit");
    REQUIRE(doc["bands"].size() == 1);
    CHECK(doc["bands"][0]["point_count"] == 12);

    // deviations in the document equal deviation_trace output
    const auto dev = doc["deviation_sigma"].get<std::vector<double>>();
    REQUIRE(dev.size() == v.deviation_sigma.size());
    for (std::size_t i = 0; i < dev.size(); ++i)
        CHECK(dev[i] == doctest::Approx(v.deviation_sigma[i]).epsilon(1e-12));
}

TEST_CASE("synthetic end-to-end smoke: genuine stays genuine, aged flags in band") {
    pdnscan::testing::Scenario sc;
    sc.grid = FrequencyGrid::linear(1e6, 1e9, 1200);
    sc.trials = 5;
    const GoldenSignature golden = sc.golden();

    const MagnitudeTrace fresh = sc.measure(sc.device(42), 4242);
    CHECK(verify(golden, fresh, DetectorConfig{}).decision == Decision::genuine);

    AgingSpec aging;
    aging.stress_hours = 216.0;
    const MagnitudeTrace aged = sc.measure(apply_aging(sc.device(43), aging), 4343);
    const Verdict v = verify(golden, aged, DetectorConfig{});
    CHECK(v.decision == Decision::counterfeit);
    for (const auto& band : v.bands) CHECK(band.f_start_hz >= 2e7);
}
