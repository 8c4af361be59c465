#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pdnscan/rf_core.hpp"

namespace pdnscan {

/// Mock instrument behaviour. Fault hooks exist to exercise every client
/// error path without hardware; see README for the JSON config schema.
struct MockVnaConfig {
    std::string idn = "pdnscan,mock-vna,0,1.0";
    std::string cal_state = "OSL,mock-plane";
    std::uint16_t port = 0;            // 0 = pick an ephemeral port
    std::string transcript_path;       // when set, received commands are appended here

    int truncate_points = 0;           // drop N points from every data fetch
    int fail_sweep_index = 0;          // 1-based sweep whose fetches lose one point
    bool fail_first_fetch = false;     // first data fetch per sweep is short; retries succeed
    bool drop_on_fetch = false;        // close the connection instead of answering a fetch
    int opc_delay_ms = 0;              // stall *OPC? (sweep-timeout injection)
    int fetch_delay_ms = 0;            // stall data fetches
    double trial_noise_db = 0.0;       // per-sweep magnitude noise on served data
    std::uint64_t noise_seed = 0;
};

MockVnaConfig mock_config_from_json(const std::string& text,
                                    std::filesystem::path* s1p_path = nullptr);

/// SCPI-over-TCP mock server on 127.0.0.1 serving a fixed sweep, one client
/// at a time. Runs on its own thread from construction until stop().
class MockVnaServer {
public:
    MockVnaServer(ComplexTrace sweep, MockVnaConfig config);
    MockVnaServer(const std::filesystem::path& s1p_path, MockVnaConfig config);
    ~MockVnaServer();

    std::uint16_t port() const;
    void stop();

    // Commands received so far, in order, one entry per line.
    std::vector<std::string> transcript() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace pdnscan
