// Standalone mock VNA: serves a stored sweep over the SCPI-on-TCP protocol
// the pdnscan acquire client speaks, with optional fault injection.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pdnscan/mock_vna.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }
} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mock SCPI vector network analyzer"};
    std::string config_path, s1p_path;
    unsigned port = 0;
    app.add_option("--config", config_path, "JSON config (see README)");
    app.add_option("--s1p", s1p_path, "Serve this sweep (overrides config)");
    app.add_option("--port", port, "TCP port (0 = ephemeral, overrides config)");
    CLI11_PARSE(app, argc, argv);

    try {
        pdnscan::MockVnaConfig cfg;
        std::filesystem::path sweep_file;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw pdnscan::Error("cannot open " + config_path);
            std::ostringstream buf;
            buf << in.rdbuf();
            cfg = pdnscan::mock_config_from_json(buf.str(), &sweep_file);
        }
        if (!s1p_path.empty()) sweep_file = s1p_path;
        if (port != 0) cfg.port = static_cast<std::uint16_t>(port);
        if (sweep_file.empty())
            throw pdnscan::Error("a sweep file is required (--s1p or \"s1p\" in the config)");

        pdnscan::MockVnaServer server(sweep_file, cfg);
        std::cout << "mock VNA listening on 127.0.0.1:" << server.port() << std::endl;

        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!g_stop) ::usleep(100 * 1000);
        server.stop();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
