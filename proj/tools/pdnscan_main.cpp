// pdnscan: simulate PDN reflection sweeps, build golden signatures and
// verify devices against them. Exit codes: 0 ok/genuine, 1 counterfeit,
// 2 usage error, 3 runtime error.

#include <glob.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdnscan/detect.hpp"
#include "pdnscan/pdn_sim.hpp"
#include "pdnscan/report.hpp"
#include "pdnscan/rng.hpp"
#include "pdnscan/signature.hpp"
#include "pdnscan/touchstone.hpp"
#include "pdnscan/util.hpp"
#include "pdnscan/vna_client.hpp"

namespace fs = std::filesystem;
using namespace pdnscan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCounterfeit = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path executable_dir() {
    char buf[4096];
    const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n <= 0) return fs::current_path();
    buf[n] = '\0';
    return fs::path(buf).parent_path();
}

fs::path find_preset(const std::string& name) {
    std::vector<fs::path> roots;
    if (const char* env = std::getenv("PDNSCAN_PRESETS")) roots.emplace_back(env);
    const fs::path exe = executable_dir();
    roots.push_back(exe / "presets");
    roots.push_back(exe.parent_path() / "presets");
    roots.push_back(fs::current_path() / "presets");
    for (const auto& root : roots) {
        const fs::path candidate = root / (name + ".json");
        if (fs::exists(candidate)) return candidate;
    }
    throw UsageError("preset '" + name + "' not found (searched $PDNSCAN_PRESETS, " +
                     (exe / "presets").string() + ", " +
                     (exe.parent_path() / "presets").string() + ", ./presets)");
}

FrequencyGrid parse_grid_flag(const std::string& spec) {
    double start = 0.0, stop = 0.0;
    long points = 0;
    if (std::sscanf(spec.c_str(), "%lf,%lf,%ld", &start, &stop, &points) != 3 || points < 2)
        throw UsageError("--grid wants start,stop,points (e.g. 1e6,1e9,5000)");
    return FrequencyGrid::linear(start, stop, static_cast<std::size_t>(points));
}

std::vector<fs::path> expand_globs(const std::vector<std::string>& patterns) {
    std::vector<fs::path> files;
    for (const auto& pattern : patterns) {
        glob_t g{};
        const int rc = ::glob(pattern.c_str(), GLOB_ERR, nullptr, &g);
        if (rc == 0)
            for (std::size_t i = 0; i < g.gl_pathc; ++i) files.emplace_back(g.gl_pathv[i]);
        ::globfree(&g);
        if (rc == GLOB_NOMATCH) throw Error("no files match '" + pattern + "'");
        if (rc != 0 && rc != GLOB_NOMATCH) throw Error("glob failed for '" + pattern + "'");
    }
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    return files;
}

MagnitudeTrace magnitude_from_file(const fs::path& path) {
    return magnitude_db(extract_s11(read_touchstone_file(path)));
}

// Trial-average several sweep files into one DUT trace.
MagnitudeTrace load_dut(const std::vector<fs::path>& files) {
    SampleRecord rec;
    rec.sample_id = files.front().stem().string();
    for (const auto& f : files) rec.trials.push_back(magnitude_from_file(f));
    return average_trials(rec);
}

std::string band_summary(const FlaggedBand& b) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%.6g MHz - %.6g MHz  points=%d  max=%.2f sigma  mean=%.2f sigma",
                  b.f_start_hz / 1e6, b.f_stop_hz / 1e6, b.point_count, b.max_deviation_sigma,
                  b.mean_deviation_sigma);
    return buf;
}

// ---- simulate -----------------------------------------------------------

struct SimulateArgs {
    std::string model_file;
    std::string preset;
    std::string grid = "1e6,1e9,5000";
    double noise_db = 0.05;
    std::uint64_t seed = 1;
    int trials = 10;
    double variation = 0.02;
    double aged_hours = 0.0;
    double damaged = 0.0;
    std::string powered; // "", "on", "off"
    std::string out;
};

int run_simulate(const SimulateArgs& args) {
    if (args.model_file.empty() == args.preset.empty())
        throw UsageError("exactly one of --model or --preset is required");
    if (args.trials < 1) throw UsageError("--trials must be >= 1");

    PdnModel model = args.preset.empty() ? load_model_file(args.model_file)
                                         : load_model_file(find_preset(args.preset));
    if (args.powered == "on") model.powered = true;
    else if (args.powered == "off") model.powered = false;
    else if (!args.powered.empty()) throw UsageError("--powered wants on or off");

    const FrequencyGrid grid = parse_grid_flag(args.grid);

    if (args.variation > 0.0)
        model = sample_genuine(model, VariationSpec{args.variation, args.seed});
    if (args.aged_hours > 0.0) {
        AgingSpec aging;
        aging.stress_hours = args.aged_hours;
        model = apply_aging(model, aging);
    }
    if (args.damaged > 0.0) model = apply_damage(model, args.damaged); // after aging, documented

    // The measurement protocol this mirrors records each device `trials`
    // times and averages; the written sweep carries the dB-mean magnitude
    // (noise is magnitude-only, so phase is common to all trials).
    ComplexTrace sweep = simulate_sweep(model, grid, NoiseSpec{args.noise_db, args.seed});
    if (args.trials > 1 && args.noise_db > 0.0) {
        std::vector<double> sum_db = magnitude_db(sweep).values_db();
        for (int t = 1; t < args.trials; ++t) {
            const NoiseSpec noise{args.noise_db, derive_seed(args.seed, static_cast<std::uint64_t>(t))};
            const MagnitudeTrace m = magnitude_db(simulate_sweep(model, grid, noise));
            for (std::size_t i = 0; i < sum_db.size(); ++i) sum_db[i] += m.values_db()[i];
        }
        std::vector<Complex> values(sweep.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double mag = std::pow(10.0, sum_db[i] / args.trials / 20.0);
            const Complex v = sweep.values()[i];
            values[i] = std::abs(v) > 0.0 ? v * (mag / std::abs(v)) : Complex(mag, 0.0);
        }
        sweep = ComplexTrace(grid, std::move(values));
    }

    std::vector<std::string> comments;
    comments.push_back(" pdnscan simulate: model=" +
                       (model.name.empty() ? std::string("custom") : model.name) +
                       " seed=" + std::to_string(args.seed) +
                       " trials=" + std::to_string(args.trials) +
                       " noise_db=" + format_double(args.noise_db) +
                       " variation=" + format_double(args.variation) +
                       " aged_h=" + format_double(args.aged_hours) +
                       " damaged=" + format_double(args.damaged) +
                       " powered=" + (model.powered ? "on" : "off"));
    write_touchstone_file(make_s1p(sweep, model.z0.z0_ohms, std::move(comments)), args.out,
                          NumberFormat::RI);
    std::cout << "wrote " << args.out << " (" << grid.size() << " points, "
              << format_double(grid.front()) << " - " << format_double(grid.back())
              << " Hz)\n";
    return kExitOk;
}

// ---- golden -------------------------------------------------------------

struct GoldenArgs {
    std::vector<std::string> inputs;
    int trials_per_sample = 1;
    std::vector<std::string> meta;
    std::string out;
};

int run_golden(const GoldenArgs& args) {
    if (args.trials_per_sample < 1) throw UsageError("--trials-per-sample must be >= 1");
    const auto files = expand_globs(args.inputs);
    if (files.size() % static_cast<std::size_t>(args.trials_per_sample) != 0)
        throw Error("input count " + std::to_string(files.size()) +
                    " is not a multiple of --trials-per-sample " +
                    std::to_string(args.trials_per_sample));

    std::vector<SampleRecord> records;
    for (std::size_t i = 0; i < files.size(); i += args.trials_per_sample) {
        SampleRecord rec;
        rec.sample_id = files[i].stem().string();
        for (int t = 0; t < args.trials_per_sample; ++t)
            rec.trials.push_back(magnitude_from_file(files[i + t]));
        records.push_back(std::move(rec));
    }

    std::vector<std::pair<std::string, std::string>> metadata;
    for (const auto& kv : args.meta) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("--meta wants KEY=VALUE, got '" + kv + "'");
        metadata.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }

    const GoldenSignature sig = build_golden(records, std::move(metadata));
    save_golden_file(sig, args.out);

    std::vector<double> sorted = sig.sigma_db;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    std::printf("golden: %d samples x %d trials, %zu points\n", sig.n_samples, sig.n_trials,
                sig.grid.size());
    std::printf("sigma_db: median %.4g, max %.4g\n", median, sorted.back());
    std::cout << "wrote " << args.out << "\n";
    return kExitOk;
}

// ---- verify / report ----------------------------------------------------

struct VerifyArgs {
    std::string golden_file;
    std::vector<std::string> dut;
    double k_sigma = 6.0;
    int min_band_points = 5;
    int merge_gap_points = 3;
    double sigma_floor_db = 1e-4;
    std::string report_dir; // empty = no artifacts
};

int run_verify(const VerifyArgs& args, bool report_required) {
    const GoldenSignature golden = load_golden_file(args.golden_file);
    const auto files = expand_globs(args.dut);
    const MagnitudeTrace dut = load_dut(files);

    DetectorConfig cfg;
    cfg.k_sigma = args.k_sigma;
    cfg.min_band_points = args.min_band_points;
    cfg.merge_gap_points = args.merge_gap_points;
    cfg.sigma_floor_db = args.sigma_floor_db;

    const Verdict verdict = verify(golden, dut, cfg);

    std::cout << "verdict: " << decision_name(verdict.decision) << "\n";
    const auto peak = std::max_element(verdict.deviation_sigma.begin(),
                                       verdict.deviation_sigma.end());
    std::printf("max deviation: %.2f sigma at %.6g MHz\n", *peak,
                golden.grid[static_cast<std::size_t>(
                    peak - verdict.deviation_sigma.begin())] / 1e6);
    if (!verdict.bands.empty()) {
        std::cout << "flagged bands: " << verdict.bands.size() << "\n";
        for (std::size_t i = 0; i < verdict.bands.size(); ++i)
            std::cout << "  " << (i + 1) << ") " << band_summary(verdict.bands[i]) << "\n";
    }

    if (!args.report_dir.empty() || report_required) {
        const fs::path dir = args.report_dir;
        write_report_dir(render_report(verdict, golden, dut), dir);
        std::cout << "report: " << (dir / "result.json").string() << ", "
                  << (dir / "report.svg").string() << "\n";
    }
    return verdict.decision == Decision::counterfeit ? kExitCounterfeit : kExitOk;
}

// ---- acquire ------------------------------------------------------------

struct AcquireArgs {
    std::string host;
    std::uint16_t port = 5025;
    double timeout_s = 30.0;
    int trials = 10;
    SweepConfig sweep;
    std::string out_dir;
};

int run_acquire(const AcquireArgs& args) {
    if (args.trials < 1) throw UsageError("--trials must be >= 1");
    const InstrumentEndpoint endpoint{args.host, args.port, args.timeout_s};
    fs::create_directories(args.out_dir);

    VnaClient client(endpoint);
    const std::string idn = client.identify();
    const std::string cal = client.calibration_state();
    std::cout << "instrument: " << idn << "\n";
    std::cout << "calibration: " << cal << "\n";

    std::vector<std::pair<std::string, std::string>> manifest_files;
    for (int t = 1; t <= args.trials; ++t) {
        ComplexTrace sweep = [&] {
            try {
                return client.acquire_sweep(args.sweep);
            } catch (const Error& e) {
                throw Error("trial " + std::to_string(t) + ": " + e.what());
            }
        }();
        char name[32];
        std::snprintf(name, sizeof(name), "trial_%03d.s1p", t);
        const fs::path path = fs::path(args.out_dir) / name;
        write_touchstone_file(
            make_s1p(sweep, 50.0, {" acquired from " + idn, " calibration " + cal}), path,
            NumberFormat::RI);
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        manifest_files.emplace_back(name, to_hex16(fnv1a64(bytes)));
        std::cout << "trial " << t << "/" << args.trials << ": wrote " << path.string() << "\n";
    }

    // Manifest goes last: its presence marks a complete acquisition.
    const fs::path manifest = fs::path(args.out_dir) / "manifest.txt";
    std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
    out << "pdnscan-manifest v1\n";
    out << "instrument " << idn << "\n";
    out << "calibration " << cal << "\n";
    out << "trials " << args.trials << "\n";
    for (const auto& [name, hash] : manifest_files)
        out << "file " << name << " fnv1a64 " << hash << "\n";
    if (!out) throw Error("cannot write " + manifest.string());
    std::cout << "manifest: " << manifest.string() << "\n";
    return kExitOk;
}

// ---- convert ------------------------------------------------------------

int run_convert(const std::string& in, const std::string& format, const std::string& out) {
    NumberFormat fmt;
    if (format == "RI" || format == "ri") fmt = NumberFormat::RI;
    else if (format == "MA" || format == "ma") fmt = NumberFormat::MA;
    else if (format == "DB" || format == "db") fmt = NumberFormat::DB;
    else throw UsageError("--format wants RI, MA or DB");
    const TouchstoneNetwork net = read_touchstone_file(in);
    write_touchstone_file(net, out, fmt);
    std::cout << "wrote " << out << " (" << net.grid.size() << " points, "
              << number_format_name(fmt) << ")\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PDN reflection-signature toolkit: simulate sweeps, build golden "
                 "signatures, verify devices"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate an S11 sweep to a .s1p file");
    simulate->add_option("--model", sim.model_file, "Model JSON file");
    simulate->add_option("--preset", sim.preset, "Named preset (e.g. cw308-like)");
    simulate->add_option("--grid", sim.grid, "start,stop,points (Hz)")->capture_default_str();
    simulate->add_option("--noise", sim.noise_db, "Magnitude noise sigma in dB")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Seed for variation and noise")->capture_default_str();
    simulate->add_option("--trials", sim.trials, "Trials averaged into the sweep")->capture_default_str();
    simulate->add_option("--variation", sim.variation,
                         "Process-variation sigma (0 = exact model)")->capture_default_str();
    simulate->add_option("--aged", sim.aged_hours, "Accelerated-aging stress hours");
    simulate->add_option("--damaged", sim.damaged, "Damage severity in (0,1]");
    simulate->add_option("--powered", sim.powered, "on|off (default: model setting)");
    simulate->add_option("--out", sim.out, "Output .s1p path")->required();

    GoldenArgs gold;
    auto* golden = app.add_subcommand("golden", "Build a golden signature from sweeps");
    golden->add_option("--inputs", gold.inputs, "Input .s1p files or globs")->required();
    golden->add_option("--trials-per-sample", gold.trials_per_sample,
                       "Consecutive files per sample")->capture_default_str();
    golden->add_option("--meta", gold.meta, "Metadata KEY=VALUE (repeatable)");
    golden->add_option("--out", gold.out, "Output golden file")->required();

    VerifyArgs ver;
    auto* verify_cmd = app.add_subcommand("verify", "Verify a DUT sweep against a golden");
    verify_cmd->add_option("--golden", ver.golden_file, "Golden signature file")->required();
    verify_cmd->add_option("--dut", ver.dut, "DUT .s1p file(s); several are trial-averaged")
        ->required();
    verify_cmd->add_option("--k", ver.k_sigma, "Decision threshold in sigmas")->capture_default_str();
    verify_cmd->add_option("--min-band-points", ver.min_band_points,
                           "Minimum marked points per flagged band")->capture_default_str();
    verify_cmd->add_option("--merge-gap", ver.merge_gap_points,
                           "Unmarked gap merged into a band")->capture_default_str();
    verify_cmd->add_option("--sigma-floor", ver.sigma_floor_db, "Sigma floor in dB")->capture_default_str();
    verify_cmd->add_option("--report", ver.report_dir, "Write result.json + report.svg here");

    VerifyArgs rep;
    auto* report_cmd = app.add_subcommand("report", "Verify and always write report artifacts");
    report_cmd->add_option("--golden", rep.golden_file, "Golden signature file")->required();
    report_cmd->add_option("--dut", rep.dut, "DUT .s1p file(s)")->required();
    report_cmd->add_option("--k", rep.k_sigma, "Decision threshold in sigmas")->capture_default_str();
    report_cmd->add_option("--min-band-points", rep.min_band_points,
                           "Minimum marked points per flagged band")->capture_default_str();
    report_cmd->add_option("--merge-gap", rep.merge_gap_points,
                           "Unmarked gap merged into a band")->capture_default_str();
    report_cmd->add_option("--sigma-floor", rep.sigma_floor_db, "Sigma floor in dB")->capture_default_str();
    report_cmd->add_option("--out", rep.report_dir, "Report directory")->required();

    AcquireArgs acq;
    auto* acquire = app.add_subcommand("acquire", "Acquire sweeps from a (mock) VNA");
    acquire->add_option("--host", acq.host, "Instrument host")->required();
    acquire->add_option("--port", acq.port, "SCPI TCP port")->capture_default_str();
    acquire->add_option("--timeout", acq.timeout_s, "Per-operation timeout in seconds")->capture_default_str();
    acquire->add_option("--trials", acq.trials, "Number of sweeps")->capture_default_str();
    acquire->add_option("--start", acq.sweep.f_start_hz, "Sweep start Hz")->capture_default_str();
    acquire->add_option("--stop", acq.sweep.f_stop_hz, "Sweep stop Hz")->capture_default_str();
    acquire->add_option("--points", acq.sweep.points, "Sweep points")->capture_default_str();
    acquire->add_option("--ifbw", acq.sweep.if_bandwidth_hz, "IF bandwidth Hz")->capture_default_str();
    acquire->add_option("--power", acq.sweep.power_dbm, "Output power dBm")->capture_default_str();
    acquire->add_option("--out", acq.out_dir, "Output directory")->required();

    std::string conv_in, conv_fmt, conv_out;
    auto* convert = app.add_subcommand("convert", "Rewrite a Touchstone file in another format");
    convert->add_option("--in", conv_in, "Input .s1p/.s2p")->required();
    convert->add_option("--format", conv_fmt, "RI|MA|DB")->required();
    convert->add_option("--out", conv_out, "Output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (golden->parsed()) return run_golden(gold);
        if (verify_cmd->parsed()) return run_verify(ver, false);
        if (report_cmd->parsed()) return run_verify(rep, true);
        if (acquire->parsed()) return run_acquire(acq);
        if (convert->parsed()) return run_convert(conv_in, conv_fmt, conv_out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
