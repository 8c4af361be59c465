#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <string>

#include "helpers.hpp"
#include "pdnscan/mock_vna.hpp"
#include "pdnscan/pdn_sim.hpp"
#include "pdnscan/vna_client.hpp"

using namespace pdnscan;

namespace {

ComplexTrace test_sweep(std::size_t points = 100) {
    const PdnModel m = pdnscan::testing::preset_model();
    return simulate_sweep(m, FrequencyGrid::linear(1e6, 1e9, points), NoiseSpec{0.0, 0});
}

InstrumentEndpoint endpoint_for(const MockVnaServer& server, double timeout_s = 5.0) {
    return InstrumentEndpoint{"127.0.0.1", server.port(), timeout_s};
}

SweepConfig config_for(std::size_t points) {
    SweepConfig cfg;
    cfg.points = static_cast<int>(points);
    return cfg;
}

} // namespace

TEST_CASE("identify returns the configured string; empty line is a protocol error") {
    {
        MockVnaConfig mc;
        mc.idn = "pdnscan,mock-vna,serial-7,2.1";
        MockVnaServer server(test_sweep(), mc);
        CHECK(identify(endpoint_for(server)) == "pdnscan,mock-vna,serial-7,2.1");
    }
    {
        MockVnaConfig mc;
        mc.idn = ""; // empty response line
        MockVnaServer server(test_sweep(), mc);
        CHECK_THROWS_AS(identify(endpoint_for(server)), ProtocolError);
    }
}

TEST_CASE("calibration state string is reported verbatim") {
    MockVnaConfig mc;
    mc.cal_state = "OSL,sma-plane,2024-01-01";
    MockVnaServer server(test_sweep(), mc);
    VnaClient client(endpoint_for(server));
    CHECK(client.calibration_state() == "OSL,sma-plane,2024-01-01");
}

TEST_CASE("closed port maps to ConnectTimeout") {
    std::uint16_t dead_port;
    {
        MockVnaServer server(test_sweep(), MockVnaConfig{});
        dead_port = server.port();
        server.stop();
    }
    InstrumentEndpoint ep{"127.0.0.1", dead_port, 0.5};
    CHECK_THROWS_AS(identify(ep), ConnectTimeout);
}

TEST_CASE("loopback: acquire returns the loaded trace exactly") {
    const ComplexTrace sweep = test_sweep(100);
    MockVnaServer server(sweep, MockVnaConfig{});
    const ComplexTrace got = acquire_sweep(endpoint_for(server), config_for(100));
    CHECK(got == sweep); // bitwise: shortest-exact decimals both ways
}

TEST_CASE("truncated data maps to DataLengthMismatch") {
    MockVnaConfig mc;
    mc.truncate_points = 1; // serves 99 of 100
    MockVnaServer server(test_sweep(100), mc);
    CHECK_THROWS_AS(acquire_sweep(endpoint_for(server), config_for(100)), DataLengthMismatch);
}

TEST_CASE("a single short fetch is retried and the sweep still succeeds") {
    const ComplexTrace sweep = test_sweep(100);
    MockVnaConfig mc;
    mc.fail_first_fetch = true;
    MockVnaServer server(sweep, mc);
    const ComplexTrace got = acquire_sweep(endpoint_for(server), config_for(100));
    CHECK(got == sweep);
    // the wire shows two data fetches for the one sweep
    int fetches = 0;
    for (const auto& line : server.transcript())
        if (line == "CALC:DATA? SDATA") ++fetches;
    CHECK(fetches == 2);
}

TEST_CASE("stalled sweep maps to SweepTimeout and respects the deadline") {
    MockVnaConfig mc;
    mc.opc_delay_ms = 3000;
    MockVnaServer server(test_sweep(50), mc);
    const auto t0 = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(acquire_sweep(endpoint_for(server, 0.4), config_for(50)), SweepTimeout);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(elapsed < 1.4); // timeout + one grace period
    server.stop();
}

TEST_CASE("repeat_acquire: per-trial noise gives distinct trials on one grid") {
    MockVnaConfig mc;
    mc.trial_noise_db = 0.05;
    mc.noise_seed = 9;
    MockVnaServer server(test_sweep(80), mc);
    const SampleRecord rec = repeat_acquire(endpoint_for(server), config_for(80), 10);
    REQUIRE(rec.trials.size() == 10);
    for (const auto& t : rec.trials) CHECK(t.grid() == rec.trials[0].grid());
    bool any_differ = false;
    for (std::size_t t = 1; t < rec.trials.size(); ++t)
        any_differ = any_differ || !(rec.trials[t] == rec.trials[0]);
    CHECK(any_differ);
}

TEST_CASE("a failing trial is reported with its index") {
    MockVnaConfig mc;
    mc.fail_sweep_index = 7;
    MockVnaServer server(test_sweep(60), mc);
    try {
        repeat_acquire(endpoint_for(server), config_for(60), 10);
        FAIL("expected DataLengthMismatch");
    } catch (const DataLengthMismatch& e) {
        CHECK(std::string(e.what()).find("trial 7") != std::string::npos);
    }
}

TEST_CASE("wire transcript for the default configuration is regression-locked") {
    const ComplexTrace sweep = test_sweep(5000);
    MockVnaServer server(sweep, MockVnaConfig{});
    const ComplexTrace got = acquire_sweep(endpoint_for(server), SweepConfig{});
    CHECK(got.size() == 5000);

    const std::vector<std::string> expected = {
        "SENS:FREQ:STAR 1000000",
        "SENS:FREQ:STOP 1000000000",
        "SENS:SWE:POIN 5000",
        "SENS:BAND 10000",
        "SOUR:POW 5",
        "INIT",
        "*OPC?",
        "CALC:DATA? SDATA",
        "SENS:FREQ:DATA?",
    };
    CHECK(server.transcript() == expected);
}

TEST_CASE("dropped connection during fetch surfaces as ProtocolError") {
    MockVnaConfig mc;
    mc.drop_on_fetch = true;
    MockVnaServer server(test_sweep(40), mc);
    CHECK_THROWS_AS(acquire_sweep(endpoint_for(server, 1.0), config_for(40)), ProtocolError);
}

TEST_CASE("invalid sweep configs are rejected up front") {
    SweepConfig bad;
    bad.f_start_hz = 2e9;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = SweepConfig{};
    bad.points = 1;
    CHECK_THROWS_AS(bad.validate(), Error);
}
