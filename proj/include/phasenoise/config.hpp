#pragma once

// Scenario files: plain-text key/value documents with sections.
//
//   name = noise_budget
//   units = rad            # or hz: rate-valued keys are multiplied by 2 pi
//
//   [system]   kappa, delta, pump_rate, laser_power, laser_wavelength
//   [noise]    kind, gamma_l, total_strength, center_frequency, half_width,
//              spectrum_file (CSV) or spectrum = w:S, w:S, ...
//   [sim]      dt, duration, burn_in, n_trajectories, seed, frame,
//              vacuum_noise, n_batches
//   [mechanics] omega_m, gamma_m, n_th, g
//   [analytic] threshold, target_n_add
//   [sweep]    <section>.<key> = v1, v2, ... | lin(a, b, n) | log(a, b, n)
//              modes = analytic, displaced, ...
//
// '#' starts a comment. Tabulated spectra are always rad/s.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phasenoise/analytic.hpp"
#include "phasenoise/core.hpp"
#include "phasenoise/coupled.hpp"

namespace phasenoise {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, std::size_t line, const std::string& message);

    const std::string& field() const { return field_; }
    std::size_t line() const { return line_; }  // 0 when not tied to a line

private:
    std::string field_;
    std::size_t line_;
};

enum class Units { rad, hz };

struct SweepAxis {
    std::string key;  // "<section>.<field>"
    std::vector<double> values;  // internal (rad/s) units

    bool operator==(const SweepAxis&) const = default;
};

struct Scenario {
    std::string name = "scenario";
    SystemParams system;
    NoiseSpec noise;
    SimConfig sim;
    bool sim_given = false;
    std::optional<MechanicalParams> mechanics;
    AnalyticOptions analytic;
    std::vector<SweepAxis> sweep;
    std::vector<std::string> sweep_modes;

    bool operator==(const Scenario&) const = default;
};

/// Parses scenario text. Relative spectrum_file paths resolve against
/// base_dir. `units_override` wins over the file's own units key.
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".",
                        std::optional<Units> units_override = std::nullopt);

Scenario load_scenario(const std::string& path, std::optional<Units> units_override = std::nullopt);

/// Canonical text in rad units; parse_scenario(serialize(s)) == s.
std::string serialize(const Scenario& s);

/// FNV-1a over the canonical serialization.
std::uint64_t scenario_hash(const Scenario& s);

/// Sets a numeric field addressed as "<section>.<key>" (internal units).
void set_field(Scenario& s, const std::string& key, double value);

bool is_sweepable(const std::string& key);

/// Validated bundle (pump filled in, sim defaults applied when absent).
/// Throws ConfigError listing every violation.
Bundle make_bundle(const Scenario& s);

}  // namespace phasenoise
