#include "phasenoise/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "phasenoise/noise.hpp"
#include "phasenoise/numfmt.hpp"

namespace phasenoise {

namespace {

std::string make_message(const std::string& field, std::size_t line, const std::string& message) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += field + ": ";
    return out + message;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

enum class Scale { none, rate, rate_squared, integer };

struct NumericField {
    Scale scale;
    std::function<void(Scenario&, double)> set;
    std::function<std::optional<double>(const Scenario&)> get;
};

MechanicalParams& mech(Scenario& s) {
    if (!s.mechanics) s.mechanics = MechanicalParams{};
    return *s.mechanics;
}

std::optional<double> mech_get(const Scenario& s, double MechanicalParams::*member) {
    if (!s.mechanics) return std::nullopt;
    return (*s.mechanics).*member;
}

const std::map<std::string, NumericField>& numeric_fields() {
    static const std::map<std::string, NumericField> fields = [] {
        std::map<std::string, NumericField> f;
        f["system.kappa"] = {Scale::rate, [](Scenario& s, double v) { s.system.kappa = v; },
                             [](const Scenario& s) -> std::optional<double> { return s.system.kappa; }};
        f["system.delta"] = {Scale::rate, [](Scenario& s, double v) { s.system.delta = v; },
                             [](const Scenario& s) -> std::optional<double> { return s.system.delta; }};
        f["system.pump_rate"] = {Scale::rate, [](Scenario& s, double v) { s.system.pump_rate = v; },
                                 [](const Scenario& s) { return s.system.pump_rate; }};
        f["system.laser_power"] = {Scale::none, [](Scenario& s, double v) { s.system.laser_power = v; },
                                   [](const Scenario& s) { return s.system.laser_power; }};
        f["system.laser_wavelength"] = {Scale::none, [](Scenario& s, double v) { s.system.laser_wavelength = v; },
                                        [](const Scenario& s) { return s.system.laser_wavelength; }};
        f["noise.gamma_l"] = {Scale::rate, [](Scenario& s, double v) { s.noise.gamma_l = v; },
                              [](const Scenario& s) { return s.noise.gamma_l; }};
        f["noise.total_strength"] = {
            Scale::rate_squared, [](Scenario& s, double v) { s.noise.lorentzian.total_strength = v; },
            [](const Scenario& s) -> std::optional<double> {
                if (s.noise.kind != NoiseKind::lorentzian) return std::nullopt;
                return s.noise.lorentzian.total_strength;
            }};
        f["noise.center_frequency"] = {
            Scale::rate, [](Scenario& s, double v) { s.noise.lorentzian.center_frequency = v; },
            [](const Scenario& s) -> std::optional<double> {
                if (s.noise.kind != NoiseKind::lorentzian) return std::nullopt;
                return s.noise.lorentzian.center_frequency;
            }};
        f["noise.half_width"] = {Scale::rate, [](Scenario& s, double v) { s.noise.lorentzian.half_width = v; },
                                 [](const Scenario& s) -> std::optional<double> {
                                     if (s.noise.kind != NoiseKind::lorentzian) return std::nullopt;
                                     return s.noise.lorentzian.half_width;
                                 }};
        auto sim_get = [](double SimConfig::*m) {
            return [m](const Scenario& s) -> std::optional<double> {
                if (!s.sim_given) return std::nullopt;
                return s.sim.*m;
            };
        };
        f["sim.dt"] = {Scale::none, [](Scenario& s, double v) { s.sim.dt = v; }, sim_get(&SimConfig::dt)};
        f["sim.duration"] = {Scale::none, [](Scenario& s, double v) { s.sim.duration = v; },
                             sim_get(&SimConfig::duration)};
        f["sim.burn_in"] = {Scale::none, [](Scenario& s, double v) { s.sim.burn_in = v; },
                            sim_get(&SimConfig::burn_in)};
        f["sim.n_trajectories"] = {Scale::integer,
                                   [](Scenario& s, double v) { s.sim.n_trajectories = static_cast<std::uint64_t>(v); },
                                   [](const Scenario& s) -> std::optional<double> {
                                       if (!s.sim_given) return std::nullopt;
                                       return static_cast<double>(s.sim.n_trajectories);
                                   }};
        f["sim.n_batches"] = {Scale::integer,
                              [](Scenario& s, double v) { s.sim.n_batches = static_cast<std::uint64_t>(v); },
                              [](const Scenario& s) -> std::optional<double> {
                                  if (!s.sim_given) return std::nullopt;
                                  return static_cast<double>(s.sim.n_batches);
                              }};
        f["mechanics.omega_m"] = {Scale::rate, [](Scenario& s, double v) { mech(s).omega_m = v; },
                                  [](const Scenario& s) { return mech_get(s, &MechanicalParams::omega_m); }};
        f["mechanics.gamma_m"] = {Scale::rate, [](Scenario& s, double v) { mech(s).gamma_m = v; },
                                  [](const Scenario& s) { return mech_get(s, &MechanicalParams::gamma_m); }};
        f["mechanics.n_th"] = {Scale::none, [](Scenario& s, double v) { mech(s).n_th = v; },
                               [](const Scenario& s) { return mech_get(s, &MechanicalParams::n_th); }};
        f["mechanics.g"] = {Scale::rate, [](Scenario& s, double v) { mech(s).g = v; },
                            [](const Scenario& s) { return mech_get(s, &MechanicalParams::g); }};
        f["analytic.threshold"] = {Scale::none, [](Scenario& s, double v) { s.analytic.threshold = v; },
                                   [](const Scenario& s) -> std::optional<double> { return s.analytic.threshold; }};
        f["analytic.target_n_add"] = {
            Scale::none, [](Scenario& s, double v) { s.analytic.target_n_add = v; },
            [](const Scenario& s) -> std::optional<double> { return s.analytic.target_n_add; }};
        return f;
    }();
    return fields;
}

double unit_factor(Scale scale, Units units) {
    if (units == Units::rad) return 1.0;
    const double two_pi = 2.0 * std::numbers::pi;
    switch (scale) {
        case Scale::rate: return two_pi;
        case Scale::rate_squared: return two_pi * two_pi;
        default: return 1.0;
    }
}

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line;
};

double parse_number(const Entry& e, const std::string& text) {
    double v = 0.0;
    if (!parse_double(text, v) || !std::isfinite(v)) {
        throw ConfigError(e.section.empty() ? e.key : e.section + "." + e.key, e.line,
                          "expected a finite number, got '" + text + "'");
    }
    return v;
}

std::vector<double> parse_grid(const Entry& e) {
    const std::string field = e.section + "." + e.key;
    const std::string v = e.value;
    auto ranged = [&](const std::string& prefix) -> std::optional<std::vector<double>> {
        if (v.rfind(prefix + "(", 0) != 0 || v.back() != ')') return std::nullopt;
        const auto args = split(v.substr(prefix.size() + 1, v.size() - prefix.size() - 2), ',');
        if (args.size() != 3) throw ConfigError(field, e.line, prefix + "(start, stop, count) takes three arguments");
        const double a = parse_number(e, args[0]);
        const double b = parse_number(e, args[1]);
        const double n = parse_number(e, args[2]);
        if (!(n >= 1.0) || n != std::floor(n)) throw ConfigError(field, e.line, "grid count must be a positive integer");
        if (prefix == "log" && !(a > 0.0 && b > 0.0)) throw ConfigError(field, e.line, "log grid needs positive bounds");
        std::vector<double> out;
        const auto count = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
            out.push_back(prefix == "lin" ? a + f * (b - a) : a * std::pow(b / a, f));
        }
        return out;
    };
    if (auto g = ranged("lin")) return *g;
    if (auto g = ranged("log")) return *g;
    std::vector<double> out;
    for (const auto& item : split(v, ',')) out.push_back(parse_number(e, item));
    return out;
}

std::vector<SpectrumPoint> parse_inline_spectrum(const Entry& e) {
    std::vector<SpectrumPoint> out;
    for (const auto& item : split(e.value, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("noise.spectrum", e.line, "expected omega:S pairs");
        out.push_back({parse_number(e, trim(item.substr(0, colon))), parse_number(e, trim(item.substr(colon + 1)))});
    }
    return out;
}

std::optional<Units> parse_units(const std::string& v) {
    if (v == "rad") return Units::rad;
    if (v == "hz") return Units::hz;
    return std::nullopt;
}

}  // namespace

ConfigError::ConfigError(std::string field, std::size_t line, const std::string& message)
    : std::runtime_error(make_message(field, line, message)), field_(std::move(field)), line_(line) {}

bool is_sweepable(const std::string& key) {
    return numeric_fields().count(key) > 0;
}

void set_field(Scenario& s, const std::string& key, double value) {
    const auto it = numeric_fields().find(key);
    if (it == numeric_fields().end()) throw ConfigError(key, 0, "unknown numeric field");
    it->second.set(s, value);
}

Scenario parse_scenario(const std::string& text, const std::string& base_dir, std::optional<Units> units_override) {
    std::vector<Entry> entries;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    static const std::vector<std::string> sections{"system", "noise", "sim", "mechanics", "analytic", "sweep"};
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("", lineno, "malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
                throw ConfigError("", lineno, "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("", lineno, "expected 'key = value', got '" + line + "'");
        Entry e{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno};
        if (e.key.empty()) throw ConfigError("", lineno, "missing key");
        if (e.value.empty()) throw ConfigError(section + "." + e.key, lineno, "missing value");
        entries.push_back(std::move(e));
    }

    Units units = Units::rad;
    for (const auto& e : entries) {
        if (e.key == "units" && (e.section.empty() || e.section == "system")) {
            auto u = parse_units(e.value);
            if (!u) throw ConfigError("units", e.line, "expected 'rad' or 'hz', got '" + e.value + "'");
            units = *u;
        }
    }
    if (units_override) units = *units_override;

    Scenario s;
    std::map<std::string, std::size_t> seen;
    std::optional<Entry> spectrum_file, spectrum_inline;
    std::vector<std::pair<std::string, std::size_t>> sim_keys;
    for (const auto& e : entries) {
        const std::string full = e.section.empty() ? e.key : e.section + "." + e.key;
        if (auto [it, fresh] = seen.emplace(full, e.line); !fresh) {
            throw ConfigError(full, e.line, "duplicate key (first set on line " + std::to_string(it->second) + ")");
        }
        if (e.key == "units" && (e.section.empty() || e.section == "system")) continue;
        if (e.section.empty()) {
            if (e.key == "name") {
                s.name = e.value;
                continue;
            }
            throw ConfigError(e.key, e.line, "unknown top-level key");
        }
        if (e.section == "sweep") {
            if (e.key == "modes") {
                for (const auto& m : split(e.value, ',')) s.sweep_modes.push_back(m);
                continue;
            }
            const auto it = numeric_fields().find(e.key);
            if (it == numeric_fields().end()) {
                throw ConfigError("sweep." + e.key, e.line, "sweep axis must name a numeric field such as noise.gamma_l");
            }
            SweepAxis axis{e.key, parse_grid(e)};
            const double f = unit_factor(it->second.scale, units);
            for (auto& v : axis.values) v *= f;
            s.sweep.push_back(std::move(axis));
            continue;
        }
        if (full == "noise.kind") {
            auto k = parse_noise_kind(e.value);
            if (!k) throw ConfigError(full, e.line, "expected none, white, lorentzian or tabulated");
            s.noise.kind = *k;
            continue;
        }
        if (full == "noise.spectrum_file") {
            spectrum_file = e;
            continue;
        }
        if (full == "noise.spectrum") {
            spectrum_inline = e;
            continue;
        }
        if (full == "sim.frame") {
            if (e.value != "lab" && e.value != "displaced") throw ConfigError(full, e.line, "expected lab or displaced");
            sim_keys.emplace_back(full, e.line);
            continue;
        }
        if (full == "sim.vacuum_noise") {
            if (e.value != "true" && e.value != "false") throw ConfigError(full, e.line, "expected true or false");
            sim_keys.emplace_back(full, e.line);
            continue;
        }
        if (full == "sim.seed") {
            sim_keys.emplace_back(full, e.line);
            continue;
        }
        const auto it = numeric_fields().find(full);
        if (it == numeric_fields().end()) throw ConfigError(full, e.line, "unknown key");
        const double v = parse_number(e, e.value);
        if (it->second.scale == Scale::integer && (v < 0.0 || v != std::floor(v))) {
            throw ConfigError(full, e.line, "expected a non-negative integer");
        }
        if (e.section == "sim") {
            sim_keys.emplace_back(full, e.line);
            continue;
        }
        it->second.set(s, v * unit_factor(it->second.scale, units));
    }

    if (spectrum_file && spectrum_inline) {
        throw ConfigError("noise.spectrum", spectrum_inline->line, "give either spectrum or spectrum_file, not both");
    }
    if (spectrum_file) {
        std::filesystem::path p(spectrum_file->value);
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        try {
            s.noise.table = read_spectrum_csv(p.string());
        } catch (const std::invalid_argument& ex) {
            throw ConfigError("noise.spectrum_file", spectrum_file->line, ex.what());
        }
    } else if (spectrum_inline) {
        s.noise.table = parse_inline_spectrum(*spectrum_inline);
    }

    // Simulation block: system-scaled defaults, then the explicit keys.
    if (!sim_keys.empty()) {
        s.sim_given = true;
        s.sim = default_sim_config(s.system, s.noise);
        for (const auto& e : entries) {
            if (e.section != "sim") continue;
            if (e.key == "frame") {
                s.sim.frame = e.value == "lab" ? Frame::lab : Frame::displaced;
            } else if (e.key == "vacuum_noise") {
                s.sim.vacuum_noise = e.value == "true";
            } else if (e.key == "seed") {
                std::uint64_t seed = 0;
                auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), seed);
                if (res.ec != std::errc{} || res.ptr != e.value.data() + e.value.size()) {
                    throw ConfigError("sim.seed", e.line, "expected an unsigned 64-bit integer");
                }
                s.sim.seed = seed;
            } else {
                numeric_fields().at("sim." + e.key).set(s, parse_number(e, e.value));
            }
        }
    }

    if (s.mechanics) {
        for (const char* req : {"mechanics.omega_m", "mechanics.gamma_m", "mechanics.g"}) {
            if (!seen.count(req)) throw ConfigError(req, 0, "required when a [mechanics] section is present");
        }
    }
    return s;
}

Scenario load_scenario(const std::string& path, std::optional<Units> units_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_scenario(buf.str(), dir.empty() ? "." : dir.string(), units_override);
}

std::string serialize(const Scenario& s) {
    std::ostringstream os;
    os << "name = " << s.name << "\nunits = rad\n";
    auto emit_section = [&](const std::string& section) {
        for (const auto& [key, field] : numeric_fields()) {
            if (key.rfind(section + ".", 0) != 0) continue;
            if (auto v = field.get(s)) os << key.substr(section.size() + 1) << " = " << format_double(*v) << '\n';
        }
    };
    os << "\n[system]\n";
    emit_section("system");

    os << "\n[noise]\nkind = " << to_string(s.noise.kind) << '\n';
    emit_section("noise");
    if (!s.noise.table.empty()) {
        os << "spectrum = ";
        for (std::size_t i = 0; i < s.noise.table.size(); ++i) {
            if (i) os << ", ";
            os << format_double(s.noise.table[i].omega) << ':' << format_double(s.noise.table[i].density);
        }
        os << '\n';
    }

    if (s.sim_given) {
        os << "\n[sim]\n";
        emit_section("sim");
        os << "seed = " << s.sim.seed << "\nframe = " << to_string(s.sim.frame)
           << "\nvacuum_noise = " << (s.sim.vacuum_noise ? "true" : "false") << '\n';
    }
    if (s.mechanics) {
        os << "\n[mechanics]\n";
        emit_section("mechanics");
    }
    os << "\n[analytic]\n";
    emit_section("analytic");
    if (!s.sweep.empty() || !s.sweep_modes.empty()) {
        os << "\n[sweep]\n";
        for (const auto& axis : s.sweep) {
            os << axis.key << " = ";
            for (std::size_t i = 0; i < axis.values.size(); ++i) {
                if (i) os << ", ";
                os << format_double(axis.values[i]);
            }
            os << '\n';
        }
        if (!s.sweep_modes.empty()) {
            os << "modes = ";
            for (std::size_t i = 0; i < s.sweep_modes.size(); ++i) os << (i ? ", " : "") << s.sweep_modes[i];
            os << '\n';
        }
    }
    return os.str();
}

std::uint64_t scenario_hash(const Scenario& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : serialize(s)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

Bundle make_bundle(const Scenario& s) {
    const auto sim = s.sim_given ? s.sim : default_sim_config(s.system, s.noise);
    auto outcome = validate(s.system, s.noise, sim);
    if (!outcome.ok()) {
        std::string msg = "invalid scenario:";
        for (const auto& v : outcome.violations) msg += "\n  " + v.field + ": " + v.message;
        throw ConfigError(outcome.violations.front().field, 0, msg);
    }
    return *outcome.bundle;
}

}  // namespace phasenoise
