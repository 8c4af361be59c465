#include "pdnscan/vna_client.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <utility>

#include "pdnscan/util.hpp"

namespace pdnscan {

void SweepConfig::validate() const {
    if (!(f_start_hz > 0.0 && f_start_hz < f_stop_hz))
        throw Error("sweep needs 0 < f_start < f_stop");
    if (points < 2) throw Error("sweep needs at least 2 points");
    if (!(if_bandwidth_hz > 0.0)) throw Error("IF bandwidth must be > 0");
}

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left < 0 ? 0 : static_cast<int>(left);
}

std::string substitute(const std::string& pattern, const std::string& arg) {
    const auto pos = pattern.find("{}");
    if (pos == std::string::npos) return pattern;
    return pattern.substr(0, pos) + arg + pattern.substr(pos + 2);
}

std::vector<double> parse_csv_doubles(const std::string& line) {
    std::vector<double> out;
    std::size_t i = 0;
    while (i <= line.size()) {
        std::size_t comma = line.find(',', i);
        if (comma == std::string::npos) comma = line.size();
        std::string_view tok(line.data() + i, comma - i);
        while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
        while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
        if (!tok.empty()) {
            double v = 0.0;
            if (!parse_double(tok, v))
                throw ProtocolError("bad numeric field '" + std::string(tok) +
                                    "' in instrument data");
            out.push_back(v);
        }
        i = comma + 1;
        if (comma == line.size()) break;
    }
    return out;
}

} // namespace

struct VnaClient::Impl {
    InstrumentEndpoint endpoint;
    ScpiCommandMap map;
    int fd = -1;
    std::string rx_buffer;

    explicit Impl(const InstrumentEndpoint& ep, ScpiCommandMap m)
        : endpoint(ep), map(std::move(m)) {
        if (!(endpoint.timeout_seconds > 0.0)) throw Error("timeout must be > 0");
        if (endpoint.termination.empty()) throw Error("termination must be non-empty");
        connect_with_timeout();
    }

    ~Impl() {
        if (fd >= 0) ::close(fd);
    }

    Clock::time_point deadline() const {
        return Clock::now() +
               std::chrono::milliseconds(static_cast<long>(endpoint.timeout_seconds * 1000.0));
    }

    void connect_with_timeout() {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        const std::string port_str = std::to_string(endpoint.port);
        if (::getaddrinfo(endpoint.host.c_str(), port_str.c_str(), &hints, &res) != 0 || !res)
            throw ConnectTimeout("cannot resolve host '" + endpoint.host + "'");

        const auto dl = deadline();
        int err = 0;
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_NONBLOCK, ai->ai_protocol);
            if (fd < 0) continue;
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
            if (errno == EINPROGRESS) {
                pollfd pf{fd, POLLOUT, 0};
                const int rc = ::poll(&pf, 1, remaining_ms(dl));
                if (rc > 0) {
                    socklen_t len = sizeof(err);
                    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
                    if (err == 0) break;
                } else {
                    err = ETIMEDOUT;
                }
            } else {
                err = errno;
            }
            ::close(fd);
            fd = -1;
        }
        ::freeaddrinfo(res);
        if (fd < 0)
            throw ConnectTimeout("cannot connect to " + endpoint.host + ":" + port_str + " (" +
                                 std::strerror(err ? err : ECONNREFUSED) + ")");
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }

    void send_line(const std::string& command, Clock::time_point dl) {
        std::string wire = command + endpoint.termination;
        std::size_t sent = 0;
        while (sent < wire.size()) {
            pollfd pf{fd, POLLOUT, 0};
            const int rc = ::poll(&pf, 1, remaining_ms(dl));
            if (rc <= 0) throw SweepTimeout("timed out sending '" + command + "'");
            const ssize_t n = ::send(fd, wire.data() + sent, wire.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
                throw ProtocolError("send failed: " + std::string(std::strerror(errno)));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    // Returns one terminated response line (terminator stripped), or
    // nullopt on deadline expiry.
    std::optional<std::string> read_line(Clock::time_point dl) {
        const std::string& term = endpoint.termination;
        for (;;) {
            const auto nl = rx_buffer.find(term);
            if (nl != std::string::npos) {
                std::string line = rx_buffer.substr(0, nl);
                rx_buffer.erase(0, nl + term.size());
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            pollfd pf{fd, POLLIN, 0};
            const int rc = ::poll(&pf, 1, remaining_ms(dl));
            if (rc <= 0) return std::nullopt;
            char chunk[65536];
            const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
            if (n == 0) throw ProtocolError("connection closed by instrument");
            if (n < 0) {
                if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
                throw ProtocolError("recv failed: " + std::string(std::strerror(errno)));
            }
            rx_buffer.append(chunk, static_cast<std::size_t>(n));
        }
    }
};

VnaClient::VnaClient(const InstrumentEndpoint& endpoint, ScpiCommandMap map)
    : impl_(std::make_unique<Impl>(endpoint, std::move(map))) {}

VnaClient::~VnaClient() = default;
VnaClient::VnaClient(VnaClient&&) noexcept = default;
VnaClient& VnaClient::operator=(VnaClient&&) noexcept = default;

std::string VnaClient::identify() {
    const auto dl = impl_->deadline();
    impl_->send_line(impl_->map.idn_query, dl);
    auto line = impl_->read_line(dl);
    if (!line) throw ProtocolError("no identification line before timeout");
    if (line->empty()) throw ProtocolError("instrument returned an empty identification line");
    return *line;
}

std::string VnaClient::calibration_state() {
    const auto dl = impl_->deadline();
    impl_->send_line(impl_->map.cal_query, dl);
    auto line = impl_->read_line(dl);
    if (!line) throw ProtocolError("no calibration state line before timeout");
    return line->empty() ? std::string("unknown") : *line;
}

ComplexTrace VnaClient::acquire_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const auto dl = impl_->deadline();
    auto& m = impl_->map;

    impl_->send_line(substitute(m.set_start, format_double(cfg.f_start_hz)), dl);
    impl_->send_line(substitute(m.set_stop, format_double(cfg.f_stop_hz)), dl);
    impl_->send_line(substitute(m.set_points, std::to_string(cfg.points)), dl);
    impl_->send_line(substitute(m.set_if_bandwidth, format_double(cfg.if_bandwidth_hz)), dl);
    impl_->send_line(substitute(m.set_power, format_double(cfg.power_dbm)), dl);
    impl_->send_line(m.initiate, dl);
    impl_->send_line(m.opc_query, dl);
    {
        auto done = impl_->read_line(dl);
        if (!done) throw SweepTimeout("sweep did not complete within the timeout");
        if (*done != "1")
            throw ProtocolError("unexpected completion response '" + *done + "'");
    }

    // Fetch the data block; one retry on short or missing data.
    const std::size_t want = static_cast<std::size_t>(cfg.points);
    std::vector<double> raw;
    for (int attempt = 0; attempt < 2; ++attempt) {
        impl_->send_line(m.fetch_data, dl);
        auto line = impl_->read_line(dl);
        if (!line) {
            if (attempt == 1) throw SweepTimeout("no sweep data before timeout (after retry)");
            continue;
        }
        raw = parse_csv_doubles(*line);
        if (raw.size() == 2 * want) break;
        if (attempt == 1)
            throw DataLengthMismatch("expected " + std::to_string(want) +
                                     " complex points, received " +
                                     std::to_string(raw.size() / 2) + " (after retry)");
        raw.clear();
    }

    impl_->send_line(m.fetch_frequencies, dl);
    auto fline = impl_->read_line(dl);
    if (!fline) throw SweepTimeout("no frequency list before timeout");
    std::vector<double> freqs = parse_csv_doubles(*fline);
    if (freqs.size() != want)
        throw DataLengthMismatch("expected " + std::to_string(want) +
                                 " frequency points, received " + std::to_string(freqs.size()));

    std::vector<Complex> values(want);
    for (std::size_t i = 0; i < want; ++i) values[i] = Complex(raw[2 * i], raw[2 * i + 1]);
    return ComplexTrace(FrequencyGrid(std::move(freqs)), std::move(values));
}

std::string identify(const InstrumentEndpoint& endpoint) {
    VnaClient client(endpoint);
    return client.identify();
}

ComplexTrace acquire_sweep(const InstrumentEndpoint& endpoint, const SweepConfig& cfg) {
    VnaClient client(endpoint);
    return client.acquire_sweep(cfg);
}

SampleRecord repeat_acquire(const InstrumentEndpoint& endpoint, const SweepConfig& cfg,
                            int n_trials, const std::string& sample_id) {
    if (n_trials < 1) throw Error("n_trials must be >= 1");
    VnaClient client(endpoint);
    SampleRecord record;
    record.sample_id = sample_id;
    for (int t = 1; t <= n_trials; ++t) {
        const std::string ctx = "trial " + std::to_string(t) + ": ";
        try {
            ComplexTrace sweep = client.acquire_sweep(cfg);
            record.trials.push_back(magnitude_db(sweep));
        } catch (const ConnectTimeout& e) {
            throw ConnectTimeout(ctx + e.what());
        } catch (const SweepTimeout& e) {
            throw SweepTimeout(ctx + e.what());
        } catch (const DataLengthMismatch& e) {
            throw DataLengthMismatch(ctx + e.what());
        } catch (const ProtocolError& e) {
            throw ProtocolError(ctx + e.what());
        }
        if (t > 1 && !(record.trials.back().grid() == record.trials.front().grid()))
            throw GridMismatch(ctx + "instrument changed the frequency grid between trials");
    }
    return record;
}

} // namespace pdnscan
