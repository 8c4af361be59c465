#include "pdnscan/signature.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pdnscan/util.hpp"

namespace pdnscan {

MagnitudeTrace average_trials(const SampleRecord& record) {
    if (record.trials.empty())
        throw TooFewSamples("sample '" + record.sample_id + "' has no trials");
    const FrequencyGrid& grid = record.trials.front().grid();
    for (std::size_t t = 1; t < record.trials.size(); ++t)
        if (!(record.trials[t].grid() == grid))
            throw GridMismatch("sample '" + record.sample_id + "' trial " + std::to_string(t) +
                               " is on a different grid");
    const double n = static_cast<double>(record.trials.size());
    std::vector<double> mean(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double sum = 0.0;
        for (const auto& trial : record.trials) sum += trial.values_db()[i];
        mean[i] = sum / n;
    }
    return MagnitudeTrace(grid, std::move(mean));
}

GoldenSignature build_golden(const std::vector<SampleRecord>& records,
                             std::vector<std::pair<std::string, std::string>> metadata) {
    if (records.size() < 2)
        throw TooFewSamples("golden signature needs >= 2 samples, got " +
                            std::to_string(records.size()));

    std::vector<MagnitudeTrace> averaged;
    averaged.reserve(records.size());
    int n_trials = 0;
    for (const auto& rec : records) {
        averaged.push_back(average_trials(rec));
        const int t = static_cast<int>(rec.trials.size());
        n_trials = n_trials == 0 ? t : std::min(n_trials, t);
    }
    const FrequencyGrid& grid = averaged.front().grid();
    for (std::size_t s = 1; s < averaged.size(); ++s)
        if (!(averaged[s].grid() == grid))
            throw GridMismatch("sample '" + records[s].sample_id +
                               "' is on a different grid than sample '" +
                               records[0].sample_id + "'");

    // Two-pass mean / n-1 standard deviation, accumulated in sample order.
    const double n = static_cast<double>(averaged.size());
    std::vector<double> mean(grid.size()), sigma(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double sum = 0.0;
        for (const auto& a : averaged) sum += a.values_db()[i];
        const double mu = sum / n;
        double ss = 0.0;
        for (const auto& a : averaged) {
            const double d = a.values_db()[i] - mu;
            ss += d * d;
        }
        mean[i] = mu;
        sigma[i] = std::sqrt(ss / (n - 1.0));
    }

    GoldenSignature sig{grid, std::move(mean), std::move(sigma),
                        static_cast<int>(records.size()), n_trials, std::move(metadata)};
    return sig;
}

// Golden file grammar (version 1):
//
//   #%pdnscan-golden 1
//   n_points <N>
//   n_samples <N>
//   n_trials <N>
//   meta <key> <value...>          (zero or more)
//   checksum fnv1a64 <16 hex digits over the data section>
//   data
//   <f_hz> <mean_db> <sigma_db>    (N rows, shortest-exact decimals)

std::string save_golden(const GoldenSignature& sig) {
    if (sig.n_samples < 2) throw TooFewSamples("golden signature has n_samples < 2");
    std::string data;
    data.reserve(48 * sig.grid.size());
    for (std::size_t i = 0; i < sig.grid.size(); ++i) {
        data += format_double(sig.grid[i]);
        data += ' ';
        data += format_double(sig.mean_db[i]);
        data += ' ';
        data += format_double(sig.sigma_db[i]);
        data += '\n';
    }
    std::string out = "#%pdnscan-golden 1\n";
    out += "n_points " + std::to_string(sig.grid.size()) + '\n';
    out += "n_samples " + std::to_string(sig.n_samples) + '\n';
    out += "n_trials " + std::to_string(sig.n_trials) + '\n';
    for (const auto& [key, value] : sig.metadata) out += "meta " + key + ' ' + value + '\n';
    out += "checksum fnv1a64 " + to_hex16(fnv1a64(data)) + '\n';
    out += "data\n";
    out += data;
    return out;
}

namespace {

std::vector<std::string> split_tokens(const std::string& line, std::size_t max_splits) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (i >= line.size()) break;
        if (out.size() == max_splits) { // rest of line is one token
            out.push_back(line.substr(i));
            break;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        out.push_back(line.substr(start, i - start));
    }
    return out;
}

} // namespace

GoldenSignature load_golden(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;

    if (!std::getline(in, line)) throw CorruptFile("empty golden file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("#%pdnscan-golden", 0) != 0)
        throw CorruptFile("missing golden file signature line");
    {
        auto tok = split_tokens(line, 99);
        if (tok.size() != 2) throw CorruptFile("malformed signature line");
        if (tok[1] != "1")
            throw FormatVersionUnknown("golden file version '" + tok[1] +
                                       "' is not supported (expected 1)");
    }

    std::size_t n_points = 0;
    int n_samples = 0, n_trials = 0;
    std::string checksum_hex;
    std::vector<std::pair<std::string, std::string>> metadata;
    bool in_header = true;
    while (in_header) {
        if (!std::getline(in, line)) throw CorruptFile("truncated header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto tok = split_tokens(line, 2);
        if (tok.empty()) continue;
        if (tok[0] == "data") {
            in_header = false;
        } else if (tok[0] == "n_points" && tok.size() == 2) {
            n_points = static_cast<std::size_t>(std::stoull(tok[1]));
        } else if (tok[0] == "n_samples" && tok.size() == 2) {
            n_samples = std::stoi(tok[1]);
        } else if (tok[0] == "n_trials" && tok.size() == 2) {
            n_trials = std::stoi(tok[1]);
        } else if (tok[0] == "meta" && tok.size() == 3) {
            metadata.emplace_back(tok[1], tok[2]);
        } else if (tok[0] == "checksum" && tok.size() == 3 && tok[1] == "fnv1a64") {
            checksum_hex = tok[2];
        } else {
            throw CorruptFile("unexpected header line: " + line);
        }
    }
    if (n_points == 0) throw CorruptFile("header lacks n_points");
    if (n_samples < 2) throw CorruptFile("header lacks a valid n_samples");
    if (n_trials < 1) throw CorruptFile("header lacks a valid n_trials");
    if (checksum_hex.empty()) throw CorruptFile("header lacks a checksum");

    std::string data;
    std::vector<double> freqs, mean, sigma;
    freqs.reserve(n_points);
    mean.reserve(n_points);
    sigma.reserve(n_points);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        data += line;
        data += '\n';
        auto tok = split_tokens(line, 99);
        double f = 0.0, m = 0.0, s = 0.0;
        if (tok.size() != 3 || !parse_double(tok[0], f) || !parse_double(tok[1], m) ||
            !parse_double(tok[2], s))
            throw CorruptFile("malformed data row: " + line);
        if (s < 0.0) throw CorruptFile("negative sigma in data row: " + line);
        freqs.push_back(f);
        mean.push_back(m);
        sigma.push_back(s);
    }
    if (freqs.size() != n_points)
        throw CorruptFile("expected " + std::to_string(n_points) + " data rows, found " +
                          std::to_string(freqs.size()));
    if (to_hex16(fnv1a64(data)) != checksum_hex)
        throw CorruptFile("checksum mismatch; file is corrupted");

    GoldenSignature sig{FrequencyGrid(std::move(freqs)), std::move(mean), std::move(sigma),
                        n_samples, n_trials, std::move(metadata)};
    return sig;
}

void save_golden_file(const GoldenSignature& sig, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << save_golden(sig);
    if (!out) throw Error("write failed for " + path.string());
}

GoldenSignature load_golden_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_golden(buf.str());
}

} // namespace pdnscan
