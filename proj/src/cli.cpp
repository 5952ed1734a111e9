#include "phasenoise/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "phasenoise/analytic.hpp"
#include "phasenoise/coupled.hpp"
#include "phasenoise/noise.hpp"
#include "phasenoise/numfmt.hpp"
#include "phasenoise/rng.hpp"

#ifndef PHASENOISE_VERSION
#define PHASENOISE_VERSION "0.0.0"
#endif

namespace phasenoise {

using json = nlohmann::ordered_json;

const char* tool_version() { return PHASENOISE_VERSION; }

namespace {

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// nlohmann writes non-finite numbers as null; keep them as strings instead.
json num(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

json system_json(const SystemParams& p) {
    json j;
    j["kappa"] = num(p.kappa);
    j["delta"] = num(p.delta);
    j["pump_rate"] = opt_num(p.pump_rate);
    j["laser_power"] = opt_num(p.laser_power);
    j["laser_wavelength"] = opt_num(p.laser_wavelength);
    return j;
}

json noise_json(const NoiseSpec& n) {
    json j;
    j["kind"] = to_string(n.kind);
    j["gamma_l"] = opt_num(n.gamma_l);
    if (n.kind == NoiseKind::lorentzian) {
        j["total_strength"] = num(n.lorentzian.total_strength);
        j["center_frequency"] = num(n.lorentzian.center_frequency);
        j["half_width"] = num(n.lorentzian.half_width);
    }
    if (!n.table.empty()) {
        json t = json::array();
        for (const auto& p : n.table) t.push_back(json::array({num(p.omega), num(p.density)}));
        j["spectrum"] = t;
    }
    return j;
}

json sim_json(const SimConfig& c) {
    json j;
    j["dt"] = num(c.dt);
    j["duration"] = num(c.duration);
    j["burn_in"] = num(c.burn_in);
    j["n_trajectories"] = c.n_trajectories;
    j["n_batches"] = c.n_batches;
    j["seed"] = c.seed;
    j["frame"] = to_string(c.frame);
    j["vacuum_noise"] = c.vacuum_noise;
    return j;
}

json mech_json(const MechanicalParams& m) {
    json j;
    j["omega_m"] = num(m.omega_m);
    j["gamma_m"] = num(m.gamma_m);
    j["n_th"] = num(m.n_th);
    j["g"] = num(m.g);
    return j;
}

json header(const Scenario& s, const char* command) {
    json j;
    j["tool"] = {{"name", "phasenoise"}, {"version", tool_version()}, {"command", command}};
    j["scenario"] = s.name;
    j["scenario_hash"] = hex(scenario_hash(s));
    return j;
}

json moments_json(const MomentStats& m) {
    json j;
    j["mean_re"] = num(m.mean.real());
    j["mean_im"] = num(m.mean.imag());
    j["mean_stderr"] = num(m.mean_stderr);
    j["second_moment"] = num(m.second_moment);
    j["second_moment_stderr"] = num(m.second_moment_stderr);
    j["occupation"] = num(m.occupation);
    j["occupation_stderr"] = num(m.occupation_stderr);
    return j;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::string fmt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string bool_str(bool b) { return b ? "true" : "false"; }

struct Row {
    std::vector<std::string> cells;

    Row() : cells(sweep_columns().size()) {}
    void set(const std::string& column, std::string value) {
        const auto& cols = sweep_columns();
        const auto it = std::find(cols.begin(), cols.end(), column);
        cells[static_cast<std::size_t>(it - cols.begin())] = std::move(value);
    }
    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
        return out;
    }
};

Row input_row(const Scenario& s, const std::string& mode, const std::optional<Bundle>& bundle) {
    Row r;
    r.set("scenario", csv_field(s.name));
    r.set("point_hash", hex(scenario_hash(s)));
    r.set("mode", mode);
    const auto& sys = bundle ? bundle->system : s.system;
    r.set("kappa", format_double(sys.kappa));
    r.set("delta", format_double(sys.delta));
    r.set("pump_rate", fmt(sys.pump_rate));
    r.set("noise_kind", to_string(s.noise.kind));
    r.set("gamma_l", fmt(s.noise.gamma_l));
    if (s.noise.kind == NoiseKind::lorentzian) {
        r.set("total_strength", format_double(s.noise.lorentzian.total_strength));
        r.set("center_frequency", format_double(s.noise.lorentzian.center_frequency));
        r.set("half_width", format_double(s.noise.lorentzian.half_width));
    }
    r.set("spectrum_points", std::to_string(s.noise.table.size()));
    if (bundle) {
        r.set("dt", format_double(bundle->sim.dt));
        r.set("duration", format_double(bundle->sim.duration));
        r.set("burn_in", format_double(bundle->sim.burn_in));
        r.set("n_trajectories", std::to_string(bundle->sim.n_trajectories));
        r.set("seed", std::to_string(bundle->sim.seed));
        r.set("vacuum_noise", bool_str(bundle->sim.vacuum_noise));
    }
    if (s.mechanics) {
        r.set("omega_m", format_double(s.mechanics->omega_m));
        r.set("gamma_m", format_double(s.mechanics->gamma_m));
        r.set("n_th", format_double(s.mechanics->n_th));
        r.set("g", format_double(s.mechanics->g));
    }
    return r;
}

void fill_analytic(Row& r, const SteadyStateReport& rep) {
    r.set("n", format_double(rep.n));
    r.set("damping_linewidth", format_double(rep.gamma_l));
    r.set("s_at_delta", format_double(rep.s_at_delta));
    r.set("n_add", format_double(rep.n_add));
    r.set("margin_1", format_double(rep.conditions.margin_1));
    r.set("margin_2", format_double(rep.conditions.margin_2));
    r.set("pass_1", bool_str(rep.conditions.pass_1));
    r.set("pass_2", bool_str(rep.conditions.pass_2));
    r.set("t_eff", fmt(rep.t_eff));
}

Bundle analytic_bundle(const Scenario& s) {
    auto outcome = validate(s.system, s.noise);
    if (!outcome.ok()) {
        std::string msg = "invalid scenario:";
        for (const auto& v : outcome.violations) msg += "\n  " + v.field + ": " + v.message;
        throw ConfigError(outcome.violations.front().field, 0, msg);
    }
    return *outcome.bundle;
}

Row analytic_row(const Scenario& s) {
    const auto b = analytic_bundle(s);
    Row r = input_row(s, "analytic", std::nullopt);
    r.set("pump_rate", format_double(b.system.pump()));
    fill_analytic(r, steady_state_report(b.system, b.noise, s.analytic));
    return r;
}

Mode default_mode(const Scenario& s) { return s.sim_given && s.sim.frame == Frame::lab ? Mode::lab : Mode::displaced; }

Row simulation_row(const Scenario& s, Mode mode) {
    const auto bundle = make_bundle(s);
    Row r = input_row(s, to_string(mode), bundle);
    fill_analytic(r, steady_state_report(bundle.system, bundle.noise, s.analytic));
    EnsembleOptions opt;
    opt.threads = 1;
    const auto res = run_ensemble(bundle, mode, opt);
    r.set("sim_n_add", format_double(res.stats.a.occupation));
    r.set("sim_n_add_stderr", format_double(res.stats.a.occupation_stderr));
    r.set("divergent", std::to_string(res.stats.divergent));
    if (res.stats.sum) {
        r.set("sum_n_add", format_double(res.stats.sum->occupation));
        r.set("sum_n_add_stderr", format_double(res.stats.sum->occupation_stderr));
        r.set("diff_n_add", format_double(res.stats.diff->occupation));
        r.set("diff_n_add_stderr", format_double(res.stats.diff->occupation_stderr));
    }
    return r;
}

Row coupled_row(const Scenario& s) {
    if (!s.mechanics) throw ConfigError("mechanics", 0, "mode 'coupled' needs a [mechanics] section");
    const auto b = analytic_bundle(s);
    Row r = input_row(s, "coupled", std::nullopt);
    r.set("pump_rate", format_double(b.system.pump()));
    fill_analytic(r, steady_state_report(b.system, b.noise, s.analytic));
    const auto model = build_model(b.system, *s.mechanics, b.noise);
    const auto rep = model.tabulated ? solve_spectral(model, b.noise) : solve_steady(model);
    r.set("n_cav", format_double(rep.n_cav));
    r.set("n_m", format_double(rep.n_m));
    r.set("n_m_phase_share", format_double(rep.phase_noise_share));
    return r;
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
    };
    const auto t = static_cast<unsigned>(std::min<std::size_t>(worker_count(threads), n));
    if (t <= 1) {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
}

}  // namespace

void apply_overrides(Scenario& s, std::optional<std::uint64_t> seed, std::optional<std::uint64_t> trajectories) {
    if (!seed && !trajectories) return;
    if (!s.sim_given) {
        s.sim = default_sim_config(s.system, s.noise);
        s.sim_given = true;
    }
    if (seed) s.sim.seed = *seed;
    if (trajectories) s.sim.n_trajectories = *trajectories;
}

const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols{
        "scenario",      "point_hash",       "mode",        "kappa",          "delta",
        "pump_rate",     "noise_kind",       "gamma_l",     "total_strength", "center_frequency",
        "half_width",    "spectrum_points",  "dt",          "duration",       "burn_in",
        "n_trajectories", "seed",            "vacuum_noise", "omega_m",       "gamma_m",
        "n_th",          "g",                "n",           "damping_linewidth", "s_at_delta",
        "n_add",         "margin_1",         "margin_2",    "pass_1",         "pass_2",
        "t_eff",         "sim_n_add",        "sim_n_add_stderr", "sum_n_add", "sum_n_add_stderr",
        "diff_n_add",    "diff_n_add_stderr", "divergent",  "n_cav",          "n_m",
        "n_m_phase_share"};
    return cols;
}

std::string analytic_text(const Scenario& s) {
    const auto b = analytic_bundle(s);
    const auto rep = steady_state_report(b.system, b.noise, s.analytic);
    std::ostringstream os;
    auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
    kv("tool_version", tool_version());
    kv("scenario", s.name);
    kv("scenario_hash", hex(scenario_hash(s)));
    kv("kappa", format_double(b.system.kappa));
    kv("delta", format_double(b.system.delta));
    kv("pump_rate", format_double(b.system.pump()));
    kv("noise_kind", to_string(b.noise.kind));
    kv("damping_linewidth", format_double(rep.gamma_l));
    kv("alpha_re", format_double(rep.alpha.real()));
    kv("alpha_im", format_double(rep.alpha.imag()));
    kv("n", format_double(rep.n));
    kv("s_at_delta", format_double(rep.s_at_delta));
    kv("n_add", format_double(rep.n_add));
    kv("t_eff", rep.t_eff ? format_double(*rep.t_eff) : "undefined (delta <= 0)");
    kv("threshold", format_double(rep.conditions.threshold));
    kv("margin_1", format_double(rep.conditions.margin_1));
    kv("pass_1", bool_str(rep.conditions.pass_1));
    kv("margin_2", format_double(rep.conditions.margin_2));
    kv("pass_2", bool_str(rep.conditions.pass_2));
    kv("max_gamma_l_condition_1", format_double(rep.conditions.max_gamma_l_condition_1));
    kv("max_gamma_l", format_double(rep.conditions.max_gamma_l));
    kv("max_s_at_delta", format_double(rep.conditions.max_s_at_delta));
    kv("target_n_add", format_double(rep.target_n_add));
    kv("max_tolerable_s_at_delta", format_double(rep.max_tolerable_s_at_delta));
    return os.str();
}

std::string analytic_csv(const Scenario& s) {
    std::string out;
    for (std::size_t i = 0; i < sweep_columns().size(); ++i) out += (i ? "," : "") + sweep_columns()[i];
    return out + "\n" + analytic_row(s).str() + "\n";
}

SimulateOutput simulate(const Scenario& s, const SimulateOptions& options) {
    const auto bundle = make_bundle(s);
    const Mode mode = options.mode.value_or(default_mode(s));
    EnsembleOptions eo;
    eo.threads = options.threads;
    eo.store_trajectories = options.keep_first_trajectory ? 1 : 0;
    auto res = run_ensemble(bundle, mode, eo);

    json j = header(s, "simulate");
    j["mode"] = to_string(mode);
    j["input"] = {{"system", system_json(bundle.system)}, {"noise", noise_json(bundle.noise)},
                  {"sim", sim_json(bundle.sim)}};
    j["rng"] = {{"algorithm", RandomStream::algorithm},
                {"seed", bundle.sim.seed},
                {"stream_layout", "trajectory * 16 + channel (phase 0, vacuum_a 1, vacuum_b 2)"}};
    const auto rep = steady_state_report(bundle.system, bundle.noise, s.analytic);
    j["analytic"] = {{"n", num(rep.n)}, {"n_add", num(rep.n_add)}};
    const auto& st = res.stats;
    json stats;
    stats["trajectories"] = st.trajectories;
    stats["divergent"] = st.divergent;
    stats["diagnostics"] = st.diagnostics;
    stats["vacuum_offset"] = num(st.vacuum_offset);
    stats["a"] = moments_json(st.a);
    if (st.b) stats["b"] = moments_json(*st.b);
    if (st.sum) stats["sum"] = moments_json(*st.sum);
    if (st.diff) stats["difference"] = moments_json(*st.diff);
    j["stats"] = stats;

    SimulateOutput out;
    out.record = j.dump(2) + "\n";
    if (options.keep_first_trajectory && !res.stored.empty()) out.first = std::move(res.stored.front());
    return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    const bool two = !traj.b.empty();
    out << "t,re_a,im_a" << (two ? ",re_b,im_b" : "") << '\n';
    for (std::size_t k = 0; k < traj.a.size(); ++k) {
        out << format_double(traj.times[k]) << ',' << format_double(traj.a[k].real()) << ','
            << format_double(traj.a[k].imag());
        if (two) out << ',' << format_double(traj.b[k].real()) << ',' << format_double(traj.b[k].imag());
        out << '\n';
    }
}

std::string sweep_csv(const Scenario& s, unsigned threads) {
    std::vector<std::string> modes = s.sweep_modes;
    if (modes.empty()) modes.push_back("analytic");
    for (const auto& m : modes) {
        if (m != "analytic" && m != "coupled" && !parse_mode(m)) {
            throw ConfigError("sweep.modes", 0, "unknown mode '" + m + "'");
        }
    }
    for (const auto& axis : s.sweep) {
        if (axis.values.empty()) throw ConfigError("sweep." + axis.key, 0, "empty grid");
        for (double v : axis.values) {
            if (!std::isfinite(v)) throw ConfigError("sweep." + axis.key, 0, "non-finite grid value");
        }
    }

    std::vector<Scenario> points{s};
    for (const auto& axis : s.sweep) {
        std::vector<Scenario> next;
        for (const auto& p : points) {
            for (double v : axis.values) {
                Scenario q = p;
                set_field(q, axis.key, v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    for (auto& p : points) {
        p.sweep.clear();
        p.sweep_modes.clear();
    }

    const std::size_t tasks = points.size() * modes.size();
    std::vector<std::string> rows(tasks);
    std::vector<std::exception_ptr> errors(tasks);
    parallel_for(tasks, threads, [&](std::size_t i) {
        const auto& p = points[i / modes.size()];
        const auto& m = modes[i % modes.size()];
        try {
            if (m == "analytic") {
                rows[i] = analytic_row(p).str();
            } else if (m == "coupled") {
                rows[i] = coupled_row(p).str();
            } else {
                rows[i] = simulation_row(p, *parse_mode(m)).str();
            }
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::string out;
    for (std::size_t i = 0; i < sweep_columns().size(); ++i) out += (i ? "," : "") + sweep_columns()[i];
    out += '\n';
    for (const auto& r : rows) out += r + '\n';
    return out;
}

std::optional<CoupledMethod> parse_coupled_method(std::string_view text) {
    if (text == "lyapunov") return CoupledMethod::lyapunov;
    if (text == "spectral") return CoupledMethod::spectral;
    if (text == "both") return CoupledMethod::both;
    if (text == "auto") return CoupledMethod::automatic;
    return std::nullopt;
}

namespace {

json cooling_json(const CoolingReport& r) {
    json j;
    j["n_cav"] = num(r.n_cav);
    j["n_m"] = num(r.n_m);
    j["phase_noise_share"] = num(r.phase_noise_share);
    j["phase_noise_share_cav"] = num(r.phase_noise_share_cav);
    j["residual"] = num(r.residual);
    j["condition_estimate"] = num(r.condition_estimate);
    j["min_physical_eigenvalue"] = num(r.min_physical_eigenvalue);
    j["physical"] = r.physical;
    j["t_eff_delta"] = opt_num(r.t_eff_delta);
    j["t_eff_mech"] = num(r.t_eff_mech);
    json cov = json::array();
    for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < r.covariance.cols(); ++k) row.push_back(num(r.covariance(i, k)));
        cov.push_back(row);
    }
    j["covariance"] = cov;
    return j;
}

std::string cooling_csv_row(const char* method, const CoolingReport& r) {
    return std::string(method) + "," + format_double(r.n_cav) + "," + format_double(r.n_m) + "," +
           format_double(r.phase_noise_share) + "," + format_double(r.phase_noise_share_cav) + "," +
           format_double(r.residual) + "," + bool_str(r.physical) + "\n";
}

double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

CoupledOutput coupled(const Scenario& s, CoupledMethod method) {
    if (!s.mechanics) throw ConfigError("mechanics", 0, "the coupled command needs a [mechanics] section");
    const auto b = analytic_bundle(s);
    const auto model = build_model(b.system, *s.mechanics, b.noise);
    if (method == CoupledMethod::automatic) {
        method = model.tabulated ? CoupledMethod::spectral : CoupledMethod::lyapunov;
    }

    json j = header(s, "coupled");
    j["input"] = {{"system", system_json(b.system)}, {"noise", noise_json(b.noise)},
                  {"mechanics", mech_json(*s.mechanics)}};
    j["model"] = {{"alpha_re", num(model.alpha.real())},
                  {"alpha_im", num(model.alpha.imag())},
                  {"damping_linewidth", num(model.gamma_l)},
                  {"filter_states", model.filter_states},
                  {"phase_noise_rate", num(model.phase_noise_rate)},
                  {"vacuum_rate", num(model.vacuum_rate())}};
    std::string csv = "method,n_cav,n_m,phase_noise_share,phase_noise_share_cav,residual,physical\n";

    std::optional<CoolingReport> lyap, spec;
    if (method == CoupledMethod::lyapunov || method == CoupledMethod::both) {
        lyap = solve_steady(model);
        j["lyapunov"] = cooling_json(*lyap);
        csv += cooling_csv_row("lyapunov", *lyap);
    }
    if (method == CoupledMethod::spectral || method == CoupledMethod::both) {
        spec = solve_spectral(model, b.noise);
        j["spectral"] = cooling_json(*spec);
        csv += cooling_csv_row("spectral", *spec);
    }
    if (lyap && spec) {
        const double dn_m = rel_diff(lyap->n_m, spec->n_m);
        const double dn_cav = rel_diff(lyap->n_cav, spec->n_cav);
        j["agreement"] = {{"n_m_rel_diff", num(dn_m)},
                          {"n_cav_rel_diff", num(dn_cav)},
                          {"within_1e-4", dn_m <= 1e-4 && dn_cav <= 1e-4}};
        csv += "agreement," + format_double(dn_cav) + "," + format_double(dn_m) + ",,,,\n";
    }
    return {j.dump(2) + "\n", csv};
}

std::string psd_csv(std::istream& in, const std::string& column, double dt, std::size_t segment, double overlap) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("psd input is empty");
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) names.push_back(cell);
    }
    std::size_t col = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == column) col = i;
    }
    if (col == names.size()) {
        std::size_t idx = 0;
        auto res = std::from_chars(column.data(), column.data() + column.size(), idx);
        if (res.ec != std::errc{} || res.ptr != column.data() + column.size() || idx >= names.size()) {
            throw std::invalid_argument("psd input has no column '" + column + "'");
        }
        col = idx;
    }
    std::vector<double> samples;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t i = 0; i <= col; ++i) {
            if (!std::getline(ss, cell, ',')) {
                throw std::invalid_argument("psd input line " + std::to_string(lineno) + ": missing column");
            }
        }
        double v = 0.0;
        if (!parse_double(cell, v)) {
            throw std::invalid_argument("psd input line " + std::to_string(lineno) + ": bad number '" + cell + "'");
        }
        samples.push_back(v);
    }
    std::ostringstream os;
    write_spectrum_csv(os, estimate_psd(samples, dt, segment, overlap));
    return os.str();
}

namespace {

void emit(const std::string& payload, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << payload;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("output", 0, "cannot write " + path);
    f << payload;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Laser phase-noise heating of optically cooled oscillators"};
    app.require_subcommand(1);
    std::string config_path, output_path, units_text;
    std::optional<std::uint64_t> seed;
    auto add_globals = [&](CLI::App* a) {
        a->add_option("--config", config_path, "Scenario file");
        a->add_option("--output", output_path, "Write the payload here instead of stdout");
        a->add_option("--seed", seed, "Override sim.seed");
        a->add_option("--units", units_text, "Rate units of the scenario file")->check(CLI::IsMember({"rad", "hz"}));
    };
    add_globals(&app);
    app.set_version_flag("--version", tool_version());

    auto* analytic_cmd = app.add_subcommand("analytic", "Closed-form steady state and condition margins");
    std::string csv_path;
    analytic_cmd->add_option("--csv", csv_path, "Also write a CSV row");

    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo ensemble");
    std::string mode_text, dump_path;
    std::optional<std::uint64_t> trajectories;
    sim_cmd->add_option("--mode", mode_text)->check(CLI::IsMember({"displaced", "lab", "twin", "two-cavity"}));
    sim_cmd->add_option("--trajectories", trajectories);
    sim_cmd->add_option("--dump-trajectories", dump_path, "CSV of trajectory 0");

    auto* sweep_cmd = app.add_subcommand("sweep", "Grid over the [sweep] axes");

    auto* coupled_cmd = app.add_subcommand("coupled", "Cavity plus mechanical oscillator");
    std::string method_text = "auto";
    std::string coupled_csv_path;
    coupled_cmd->add_option("--method", method_text)->check(CLI::IsMember({"lyapunov", "spectral", "both", "auto"}));
    coupled_cmd->add_option("--csv", coupled_csv_path);

    auto* psd_cmd = app.add_subcommand("psd", "Welch PSD of one CSV column");
    std::string psd_input, psd_column = "1";
    double psd_dt = 0.0, psd_overlap = 0.5;
    std::size_t psd_segment = 1024;
    psd_cmd->add_option("--input", psd_input)->required();
    psd_cmd->add_option("--column", psd_column, "Name or zero-based index");
    psd_cmd->add_option("--dt", psd_dt)->required();
    psd_cmd->add_option("--segment", psd_segment);
    psd_cmd->add_option("--overlap", psd_overlap);

    for (auto* sub : {analytic_cmd, sim_cmd, sweep_cmd, coupled_cmd, psd_cmd}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    const auto started = std::chrono::steady_clock::now();
    try {
        if (psd_cmd->parsed()) {
            std::ifstream in(psd_input);
            if (!in) throw ConfigError("input", 0, "cannot open " + psd_input);
            emit(psd_csv(in, psd_column, psd_dt, psd_segment, psd_overlap), output_path, out);
        } else {
            if (config_path.empty()) throw ConfigError("config", 0, "--config is required");
            std::optional<Units> units;
            if (!units_text.empty()) units = units_text == "hz" ? Units::hz : Units::rad;
            Scenario s = load_scenario(config_path, units);
            if (analytic_cmd->parsed()) {
                emit(analytic_text(s), output_path, out);
                if (!csv_path.empty()) emit(analytic_csv(s), csv_path, out);
            } else if (sim_cmd->parsed()) {
                apply_overrides(s, seed, trajectories);
                SimulateOptions opt;
                if (!mode_text.empty()) opt.mode = parse_mode(mode_text);
                opt.keep_first_trajectory = !dump_path.empty();
                auto res = simulate(s, opt);
                emit(res.record, output_path, out);
                if (res.first) {
                    std::ostringstream os;
                    write_trajectory_csv(os, *res.first);
                    emit(os.str(), dump_path, out);
                }
            } else if (sweep_cmd->parsed()) {
                apply_overrides(s, seed, std::nullopt);
                emit(sweep_csv(s), output_path, out);
            } else if (coupled_cmd->parsed()) {
                auto res = coupled(s, *parse_coupled_method(method_text));
                emit(res.record, output_path, out);
                if (!coupled_csv_path.empty()) emit(res.csv, coupled_csv_path, out);
            }
        }
    } catch (const InstabilityError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    err << "elapsed " << secs << " s\n";
    return 0;
}

}  // namespace phasenoise
