#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "pdnscan/rf_core.hpp"
#include "pdnscan/signature.hpp"

namespace pdnscan {

struct ConnectTimeout : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct SweepTimeout : Error { using Error::Error; };
struct DataLengthMismatch : Error { using Error::Error; };

/// Sweep parameters; defaults are the reference measurement configuration
/// (1 MHz - 1 GHz, 5000 points, 10 kHz IF bandwidth, 5 dBm, S11).
struct SweepConfig {
    double f_start_hz = 1e6;
    double f_stop_hz = 1e9;
    int points = 5000;
    double if_bandwidth_hz = 1e4;
    double power_dbm = 5.0;
    std::string trace = "S11";

    void validate() const;
};

struct InstrumentEndpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 5025;
    double timeout_seconds = 30.0;
    std::string termination = "\n";
};

/// SCPI dialect table. The generic subset below is what the mock instrument
/// speaks; vendor quirks are handled by swapping command strings, not code.
/// A "{}" placeholder receives the formatted argument.
struct ScpiCommandMap {
    std::string idn_query = "*IDN?";
    std::string set_start = "SENS:FREQ:STAR {}";
    std::string set_stop = "SENS:FREQ:STOP {}";
    std::string set_points = "SENS:SWE:POIN {}";
    std::string set_if_bandwidth = "SENS:BAND {}";
    std::string set_power = "SOUR:POW {}";
    std::string initiate = "INIT";
    std::string opc_query = "*OPC?";
    std::string fetch_data = "CALC:DATA? SDATA";
    std::string fetch_frequencies = "SENS:FREQ:DATA?";
    std::string cal_query = "SENS:CORR?";
};

/// One TCP connection to one instrument; operations run one at a time.
/// Every operation enforces the endpoint timeout as an overall deadline.
class VnaClient {
public:
    explicit VnaClient(const InstrumentEndpoint& endpoint, ScpiCommandMap map = {});
    ~VnaClient();
    VnaClient(VnaClient&&) noexcept;
    VnaClient& operator=(VnaClient&&) noexcept;
    VnaClient(const VnaClient&) = delete;
    VnaClient& operator=(const VnaClient&) = delete;

    // *IDN? -> response line. ProtocolError when the line is empty or the
    // instrument stays silent past the timeout.
    std::string identify();

    // Calibration state string as reported by the instrument. Recorded in
    // acquisition metadata; no correction is ever applied on this side.
    std::string calibration_state();

    // Configure, trigger one sweep, wait for completion, fetch the complex
    // S11 block and the frequency list. A failed fetch is retried once.
    ComplexTrace acquire_sweep(const SweepConfig& cfg);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// One-shot conveniences; each opens its own connection.
std::string identify(const InstrumentEndpoint& endpoint);
ComplexTrace acquire_sweep(const InstrumentEndpoint& endpoint, const SweepConfig& cfg);

// n_trials sequential sweeps on one connection, converted to magnitude
// traces on one shared grid. Errors carry the failing trial number.
SampleRecord repeat_acquire(const InstrumentEndpoint& endpoint, const SweepConfig& cfg,
                            int n_trials = 10, const std::string& sample_id = "dut");

} // namespace pdnscan
