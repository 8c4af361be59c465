#include "pdnscan/mock_vna.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "pdnscan/rng.hpp"
#include "pdnscan/touchstone.hpp"
#include "pdnscan/util.hpp"

namespace pdnscan {

MockVnaConfig mock_config_from_json(const std::string& text, std::filesystem::path* s1p_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("mock config is not valid JSON: ") + e.what());
    }
    MockVnaConfig cfg;
    cfg.idn = j.value("idn", cfg.idn);
    cfg.cal_state = j.value("cal_state", cfg.cal_state);
    cfg.port = j.value("port", 0);
    cfg.transcript_path = j.value("transcript_path", "");
    cfg.truncate_points = j.value("truncate_points", 0);
    cfg.fail_sweep_index = j.value("fail_sweep_index", 0);
    cfg.fail_first_fetch = j.value("fail_first_fetch", false);
    cfg.drop_on_fetch = j.value("drop_on_fetch", false);
    cfg.opc_delay_ms = j.value("opc_delay_ms", 0);
    cfg.fetch_delay_ms = j.value("fetch_delay_ms", 0);
    cfg.trial_noise_db = j.value("trial_noise_db", 0.0);
    cfg.noise_seed = j.value("noise_seed", 0);
    if (s1p_path) *s1p_path = j.value("s1p", "");
    return cfg;
}

struct MockVnaServer::Impl {
    ComplexTrace sweep;
    MockVnaConfig config;

    int listen_fd = -1;
    int wake_pipe[2] = {-1, -1};
    std::uint16_t bound_port = 0;
    std::thread worker;
    std::atomic<bool> stopping{false};

    mutable std::mutex mutex;
    std::vector<std::string> received;
    int sweep_count = 0;          // INIT commands seen
    int fetches_this_sweep = 0;   // CALC:DATA? since the last INIT

    Impl(ComplexTrace s, MockVnaConfig cfg) : sweep(std::move(s)), config(std::move(cfg)) {
        if (::pipe(wake_pipe) != 0) throw Error("mock: pipe() failed");
        listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd < 0) throw Error("mock: socket() failed");
        int one = 1;
        ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(config.port);
        if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
            throw Error("mock: cannot bind port " + std::to_string(config.port) + ": " +
                        std::strerror(errno));
        if (::listen(listen_fd, 4) != 0) throw Error("mock: listen() failed");
        socklen_t len = sizeof(addr);
        ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
        bound_port = ntohs(addr.sin_port);
        worker = std::thread([this] { serve(); });
    }

    ~Impl() {
        shutdown();
        if (listen_fd >= 0) ::close(listen_fd);
        if (wake_pipe[0] >= 0) ::close(wake_pipe[0]);
        if (wake_pipe[1] >= 0) ::close(wake_pipe[1]);
    }

    void shutdown() {
        bool expected = false;
        if (stopping.compare_exchange_strong(expected, true)) {
            char b = 'x';
            [[maybe_unused]] ssize_t n = ::write(wake_pipe[1], &b, 1);
        }
        if (worker.joinable()) worker.join();
        flush_transcript();
    }

    void flush_transcript() {
        if (config.transcript_path.empty()) return;
        std::lock_guard lock(mutex);
        std::ofstream out(config.transcript_path, std::ios::binary | std::ios::trunc);
        for (const auto& line : received) out << line << '\n';
    }

    // Interruptible sleep so stop() never waits on an injected delay.
    void delay(int ms) {
        const auto end = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
        while (!stopping && std::chrono::steady_clock::now() < end)
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

    void serve() {
        while (!stopping) {
            pollfd pfds[2] = {{listen_fd, POLLIN, 0}, {wake_pipe[0], POLLIN, 0}};
            if (::poll(pfds, 2, -1) <= 0) continue;
            if (pfds[1].revents || stopping) break;
            if (!(pfds[0].revents & POLLIN)) continue;
            const int conn = ::accept(listen_fd, nullptr, nullptr);
            if (conn < 0) continue;
            session(conn);
            ::close(conn);
        }
    }

    void session(int conn) {
        std::string buffer;
        while (!stopping) {
            const auto nl = buffer.find('\n');
            if (nl == std::string::npos) {
                pollfd pfds[2] = {{conn, POLLIN, 0}, {wake_pipe[0], POLLIN, 0}};
                if (::poll(pfds, 2, -1) <= 0) continue;
                if (pfds[1].revents || stopping) return;
                char chunk[4096];
                const ssize_t n = ::recv(conn, chunk, sizeof(chunk), 0);
                if (n <= 0) return; // client went away
                buffer.append(chunk, static_cast<std::size_t>(n));
                continue;
            }
            std::string line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (!handle(conn, line)) return; // fault hook dropped the connection
        }
    }

    static bool starts_with_ci(const std::string& line, std::string_view prefix) {
        if (line.size() < prefix.size()) return false;
        for (std::size_t i = 0; i < prefix.size(); ++i)
            if (std::toupper(static_cast<unsigned char>(line[i])) !=
                std::toupper(static_cast<unsigned char>(prefix[i])))
                return false;
        return true;
    }

    void respond(int conn, const std::string& text) {
        std::string wire = text + "\n";
        std::size_t sent = 0;
        while (sent < wire.size() && !stopping) {
            const ssize_t n = ::send(conn, wire.data() + sent, wire.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) return;
            sent += static_cast<std::size_t>(n);
        }
    }

    std::string data_payload() {
        // Served values, possibly noisy per sweep, possibly truncated.
        int sweep_idx, fetch_idx;
        {
            std::lock_guard lock(mutex);
            sweep_idx = sweep_count;
            fetch_idx = ++fetches_this_sweep;
        }
        std::size_t n = sweep.size();
        const bool failing =
            (config.fail_sweep_index > 0 && sweep_idx == config.fail_sweep_index) ||
            (config.fail_first_fetch && fetch_idx == 1);
        if (config.truncate_points > 0)
            n -= std::min<std::size_t>(n, static_cast<std::size_t>(config.truncate_points));
        if (failing && n > 0) n -= 1;

        std::string out;
        out.reserve(n * 32);
        for (std::size_t i = 0; i < n; ++i) {
            Complex v = sweep.values()[i];
            if (config.trial_noise_db > 0.0) {
                const double noise_db =
                    config.trial_noise_db *
                    counter_normal(config.noise_seed, RngStream::mock_trial_noise,
                                   static_cast<std::uint64_t>(sweep_idx) * sweep.size() + i);
                v *= std::pow(10.0, noise_db / 20.0);
            }
            if (i) out += ',';
            out += format_double(v.real());
            out += ',';
            out += format_double(v.imag());
        }
        return out;
    }

    std::string freq_payload() const {
        std::string out;
        out.reserve(sweep.size() * 16);
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            if (i) out += ',';
            out += format_double(sweep.grid()[i]);
        }
        return out;
    }

    // Returns false when the connection should be dropped.
    bool handle(int conn, const std::string& line) {
        {
            std::lock_guard lock(mutex);
            received.push_back(line);
        }
        if (starts_with_ci(line, "*IDN?")) {
            respond(conn, config.idn);
        } else if (starts_with_ci(line, "SENS:CORR?")) {
            respond(conn, config.cal_state);
        } else if (starts_with_ci(line, "INIT")) {
            std::lock_guard lock(mutex);
            ++sweep_count;
            fetches_this_sweep = 0;
        } else if (starts_with_ci(line, "*OPC?")) {
            if (config.opc_delay_ms > 0) delay(config.opc_delay_ms);
            if (stopping) return false;
            respond(conn, "1");
        } else if (starts_with_ci(line, "CALC:DATA?")) {
            if (config.fetch_delay_ms > 0) delay(config.fetch_delay_ms);
            if (stopping) return false;
            if (config.drop_on_fetch) return false;
            respond(conn, data_payload());
        } else if (starts_with_ci(line, "SENS:FREQ:DATA?")) {
            respond(conn, freq_payload());
        } else if (line.find('?') != std::string::npos) {
            respond(conn, ""); // unknown query: empty line
        }
        // set commands (SENS:..., SOUR:...) are recorded and acknowledged silently
        return true;
    }
};

MockVnaServer::MockVnaServer(ComplexTrace sweep, MockVnaConfig config)
    : impl_(std::make_unique<Impl>(std::move(sweep), std::move(config))) {}

MockVnaServer::MockVnaServer(const std::filesystem::path& s1p_path, MockVnaConfig config)
    : impl_(std::make_unique<Impl>(extract_s11(read_touchstone_file(s1p_path)),
                                   std::move(config))) {}

MockVnaServer::~MockVnaServer() = default;

std::uint16_t MockVnaServer::port() const { return impl_->bound_port; }

void MockVnaServer::stop() { impl_->shutdown(); }

std::vector<std::string> MockVnaServer::transcript() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->received;
}

} // namespace pdnscan
