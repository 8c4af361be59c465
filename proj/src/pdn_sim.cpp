#include "pdnscan/pdn_sim.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pdnscan/rng.hpp"
#include "pdnscan/util.hpp"

namespace pdnscan {

namespace {

void validate_branch(const RlcBranch& b, const std::string& where) {
    if (!(std::isfinite(b.r_ohms) && b.r_ohms >= 0.0))
        throw InvalidModel(where + ": resistance must be >= 0");
    if (!(std::isfinite(b.l_henries) && b.l_henries >= 0.0))
        throw InvalidModel(where + ": inductance must be >= 0");
    if (b.c_farads && !(std::isfinite(*b.c_farads) && *b.c_farads > 0.0))
        throw InvalidModel(where + ": capacitance must be > 0 when present");
    const bool any = b.r_ohms > 0.0 || b.l_henries > 0.0 || b.c_farads.has_value();
    if (!any) throw InvalidModel(where + ": branch needs at least one nonzero element");
}

Complex parallel(Complex a, Complex b) { return a * b / (a + b); }

} // namespace

Complex RlcBranch::impedance(double omega) const {
    Complex z(r_ohms, omega * l_henries);
    if (c_farads) z += Complex(0.0, -1.0 / (omega * *c_farads));
    return z;
}

void PdnModel::validate() const {
    if (stages.empty()) throw InvalidModel("model needs at least one stage");
    std::set<std::string> names;
    bool any_shunt = die_on_branch.has_value();
    for (const auto& st : stages) {
        if (st.name.empty()) throw InvalidModel("stage with empty name");
        if (!names.insert(st.name).second)
            throw InvalidModel("duplicate stage name '" + st.name + "'");
        if (!st.series && !st.shunt)
            throw InvalidModel("stage '" + st.name + "' has neither series nor shunt branch");
        if (st.series) validate_branch(*st.series, "stage '" + st.name + "' series");
        if (st.shunt) validate_branch(*st.shunt, "stage '" + st.name + "' shunt");
        any_shunt = any_shunt || st.shunt.has_value();
    }
    if (die_on_branch) validate_branch(*die_on_branch, "die_on_branch");
    if (!any_shunt)
        throw InvalidModel("model has no shunt path; input impedance would be open");
    if (die_band_hz && !(die_band_hz->first > 0.0 && die_band_hz->first < die_band_hz->second))
        throw InvalidModel("die_band_hz must satisfy 0 < lo < hi");
}

Complex pdn_input_impedance(const PdnModel& model, double f_hz) {
    if (!(std::isfinite(f_hz) && f_hz > 0.0))
        throw InvalidModel("frequency must be > 0 Hz");
    const double omega = 2.0 * std::numbers::pi * f_hz;

    // Walk die -> probe. `acc` is the impedance looking toward the die from
    // the current stage node; unset means open (nothing downstream yet).
    std::optional<Complex> acc;
    for (auto it = model.stages.rbegin(); it != model.stages.rend(); ++it) {
        const bool is_die = it == model.stages.rbegin();
        if (it->shunt) {
            const Complex zsh = it->shunt->impedance(omega);
            acc = acc ? parallel(zsh, *acc) : zsh;
        }
        if (is_die && model.powered && model.die_on_branch) {
            const Complex zon = model.die_on_branch->impedance(omega);
            acc = acc ? parallel(zon, *acc) : zon;
        }
        if (it->series && acc) *acc += it->series->impedance(omega);
        // series into an open adds nothing observable; keep acc unset
    }
    if (!acc) throw InvalidModel("model has no shunt path at " + format_double(f_hz) + " Hz");
    return *acc;
}

ComplexTrace simulate_sweep(const PdnModel& model, const FrequencyGrid& grid,
                            const NoiseSpec& noise) {
    if (!(std::isfinite(noise.sigma_db) && noise.sigma_db >= 0.0))
        throw InvalidModel("noise sigma_db must be >= 0");
    std::vector<Complex> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Complex z = pdn_input_impedance(model, grid[i]);
        Complex s = s11_from_impedance(z, model.z0);
        if (noise.sigma_db > 0.0) {
            const double n_db =
                noise.sigma_db * counter_normal(noise.seed, RngStream::sweep_noise, i);
            s *= std::pow(10.0, n_db / 20.0);
        }
        values[i] = s;
    }
    return ComplexTrace(grid, std::move(values));
}

namespace {

// Element slots within a stage: series r/l/c then shunt r/l/c. The RNG is
// keyed by position, never by draw order, so factors for one element do not
// shift when another element is absent.
void vary_branch(std::optional<RlcBranch>& branch, const VariationSpec& var,
                 std::uint64_t stage_index, std::uint64_t slot_base) {
    if (!branch) return;
    auto factor = [&](std::uint64_t slot) {
        const double n =
            counter_normal(var.seed, RngStream::element_variation, stage_index * 8 + slot);
        return std::exp(var.sigma_fraction * n);
    };
    branch->r_ohms *= factor(slot_base + 0);
    branch->l_henries *= factor(slot_base + 1);
    if (branch->c_farads) *branch->c_farads *= factor(slot_base + 2);
}

} // namespace

PdnModel sample_genuine(const PdnModel& model, const VariationSpec& var) {
    if (!(var.sigma_fraction >= 0.0 && var.sigma_fraction < 0.5))
        throw InvalidModel("sigma_fraction must lie in [0, 0.5)");
    PdnModel out = model;
    if (var.sigma_fraction == 0.0) return out;
    for (std::size_t i = 0; i < out.stages.size(); ++i) {
        vary_branch(out.stages[i].series, var, i, 0);
        vary_branch(out.stages[i].shunt, var, i, 3);
    }
    vary_branch(out.die_on_branch, var, out.stages.size(), 0);
    return out;
}

PdnModel apply_aging(const PdnModel& model, const AgingSpec& aging) {
    if (!(aging.stress_hours >= 0.0)) throw InvalidModel("stress_hours must be >= 0");
    if (!(aging.reference_hours > 0.0)) throw InvalidModel("reference_hours must be > 0");
    if (aging.esr_drift_coeff < 0.0 || aging.cap_drift_coeff < 0.0 ||
        aging.ron_drift_coeff < 0.0)
        throw InvalidModel("drift coefficients must be >= 0");

    PdnModel out = model;
    if (aging.stress_hours == 0.0) return out;

    const double s = std::pow(aging.stress_hours / aging.reference_hours, aging.time_exponent);
    if (aging.cap_drift_coeff * s >= 1.0)
        throw DriftOutOfRange("cap drift " + format_double(aging.cap_drift_coeff * s) +
                              " would drive the die capacitance to zero or below");

    PdnStage& die = out.stages.back();
    if (!die.shunt || !die.shunt->c_farads)
        throw InvalidModel("die stage '" + die.name +
                           "' needs a shunt branch with capacitance to age");
    die.shunt->r_ohms *= 1.0 + aging.esr_drift_coeff * s;
    *die.shunt->c_farads *= 1.0 - aging.cap_drift_coeff * s;
    if (out.die_on_branch) out.die_on_branch->r_ohms *= 1.0 + aging.ron_drift_coeff * s;
    return out;
}

PdnModel apply_damage(const PdnModel& model, double severity) {
    if (!(severity > 0.0 && severity <= 1.0))
        throw InvalidModel("damage severity must lie in (0, 1]");
    PdnModel out = model;
    auto hit = [severity](std::optional<RlcBranch>& b) {
        if (!b) return;
        b->r_ohms *= 1.0 + severity;
        b->l_henries *= 1.0 + 0.2 * severity;
        if (b->c_farads) *b->c_farads *= 1.0 - 0.5 * severity;
    };
    for (auto& st : out.stages) {
        hit(st.series);
        hit(st.shunt);
    }
    hit(out.die_on_branch);
    return out;
}

namespace {

using nlohmann::json;

json branch_to_json(const RlcBranch& b) {
    json j;
    if (b.r_ohms != 0.0) j["r_ohms"] = b.r_ohms;
    if (b.l_henries != 0.0) j["l_henries"] = b.l_henries;
    if (b.c_farads) j["c_farads"] = *b.c_farads;
    return j;
}

RlcBranch branch_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw InvalidModel(where + ": branch must be a JSON object");
    RlcBranch b;
    for (auto& [key, value] : j.items()) {
        if (key == "r_ohms") b.r_ohms = value.get<double>();
        else if (key == "l_henries") b.l_henries = value.get<double>();
        else if (key == "c_farads") b.c_farads = value.get<double>();
        else throw InvalidModel(where + ": unknown branch field '" + key + "'");
    }
    return b;
}

} // namespace

PdnModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidModel(std::string("model file is not valid JSON: ") + e.what());
    }
    PdnModel m;
    try {
        m.name = j.value("name", "");
        m.z0 = ReferenceImpedance(j.value("z0_ohms", 50.0));
        m.powered = j.value("powered", true);
        if (j.contains("die_band_hz")) {
            const auto& band = j.at("die_band_hz");
            m.die_band_hz = std::make_pair(band.at(0).get<double>(), band.at(1).get<double>());
        }
        for (const auto& js : j.at("stages")) {
            PdnStage st;
            st.name = js.at("name").get<std::string>();
            if (js.contains("series")) st.series = branch_from_json(js["series"], st.name);
            if (js.contains("shunt")) st.shunt = branch_from_json(js["shunt"], st.name);
            m.stages.push_back(std::move(st));
        }
        if (j.contains("die_on_branch"))
            m.die_on_branch = branch_from_json(j["die_on_branch"], "die_on_branch");
    } catch (const json::exception& e) {
        throw InvalidModel(std::string("bad model document: ") + e.what());
    }
    m.validate();
    return m;
}

std::string model_to_json(const PdnModel& model) {
    json j;
    if (!model.name.empty()) j["name"] = model.name;
    j["z0_ohms"] = model.z0.z0_ohms;
    j["powered"] = model.powered;
    if (model.die_band_hz)
        j["die_band_hz"] = {model.die_band_hz->first, model.die_band_hz->second};
    j["stages"] = json::array();
    for (const auto& st : model.stages) {
        json js;
        js["name"] = st.name;
        if (st.series) js["series"] = branch_to_json(*st.series);
        if (st.shunt) js["shunt"] = branch_to_json(*st.shunt);
        j["stages"].push_back(std::move(js));
    }
    if (model.die_on_branch) j["die_on_branch"] = branch_to_json(*model.die_on_branch);
    return j.dump(2) + "\n";
}

PdnModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidModel("cannot open model file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

void save_model_file(const PdnModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidModel("cannot write model file " + path.string());
    out << model_to_json(model);
}

} // namespace pdnscan
