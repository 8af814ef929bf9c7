#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "iafc/backward.hpp"
#include "iafc/comb.hpp"
#include "iafc/csv.hpp"
#include "iafc/ensemble.hpp"
#include "iafc/error.hpp"
#include "iafc/units.hpp"

namespace iafc {

/// Every parameter of a CLI run. Frequencies in rad/us, temperatures in K.
///
/// Text form: one `key = value` per line, '#' comments, lists separated by
/// commas. Unknown keys are rejected.
struct RunConfig {
    // comb
    int n_teeth = 7;
    double delta = units::from_mhz(100.0);
    double gamma = units::from_mhz(5.0);
    double total_depth = 30.0;
    std::string comb_file;

    // pulse and propagation; sigma = 0 means sigma_over_delta * delta
    double sigma = 0.0;
    double sigma_over_delta = 2.0;
    double l_scale = 1.0;
    std::size_t max_points = std::size_t{1} << 22;

    // disorder and sweeps
    std::string disorder = "none";  // for sweep-length: none | spacing | depth
    double strength = 0.0;
    std::vector<double> strengths = {0, 5, 10, 15, 20, 25, 30};
    std::vector<double> finesses = {20, 60, 100};
    std::vector<double> lengths;  // empty: default grid around the forward optimum
    std::size_t trials = 500;
    std::uint64_t seed = 1;
    std::size_t threads = 0;

    // thermal
    std::vector<double> ground_energies;
    std::vector<double> temperatures = {4, 100, 300};
    std::vector<std::size_t> tooth_assignment;

    // backward fit
    std::string input;
    double gate_threshold = default_gate_threshold;

    // analytic table
    std::vector<double> table_finesses = {10, 20, 50, 100};
    double table_max_depth = 8.0;
    std::size_t table_points = 161;

    // output
    std::string out_dir = ".";
    bool plot = false;

    void set(const std::string& key, const std::string& value);
    std::string to_text() const;
    csv::Metadata metadata() const;

    /// Pulse width actually used for a comb with mean spacing `spacing`.
    double pulse_sigma(double spacing) const { return sigma > 0.0 ? sigma : sigma_over_delta * spacing; }

    FrequencyComb base_comb() const
    {
        if (comb_file.empty()) return uniform_comb(n_teeth, delta, gamma, total_depth);
        std::ifstream in(comb_file);
        if (!in) throw IoError("cannot open comb file '" + comb_file + "'");
        return read_comb(in, comb_file);
    }

    /// Spacing used for the echo window: the comb's mean spacing, or `delta`
    /// for a single tooth.
    double echo_spacing(const FrequencyComb& comb) const
    {
        return comb.size() >= 2 ? comb.mean_spacing() : delta;
    }
};

namespace config_detail {

inline std::string trim(const std::string& s) { return csv::trim(s); }

inline double to_double(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ValidationError("config '" + key + "': '" + v + "' is not a number");
    return x;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v)
{
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ValidationError("config '" + key + "': '" + v + "' is not a non-negative integer");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ValidationError("config '" + key + "': '" + v + "' is out of range");
    }
}

inline std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline std::string fmt(double x) { return detail::num(x); }

template <class T>
std::string fmt_list(const std::vector<T>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ", ";
        if constexpr (std::is_floating_point_v<T>)
            s += fmt(xs[i]);
        else
            s += std::to_string(xs[i]);
    }
    return s;
}

struct Field {
    const char* name;
    std::function<void(RunConfig&, const std::string&)> parse;
    std::function<std::string(const RunConfig&)> format;
};

template <class T>
Field scalar(const char* name, T RunConfig::*member)
{
    return {name,
            [name, member](RunConfig& c, const std::string& v) {
                if constexpr (std::is_same_v<T, std::string>)
                    c.*member = v;
                else if constexpr (std::is_same_v<T, bool>) {
                    if (v == "true" || v == "1" || v == "yes" || v == "on")
                        c.*member = true;
                    else if (v == "false" || v == "0" || v == "no" || v == "off")
                        c.*member = false;
                    else
                        throw ValidationError(std::string("config '") + name + "': expected true or false");
                } else if constexpr (std::is_floating_point_v<T>)
                    c.*member = to_double(name, v);
                else if constexpr (std::is_signed_v<T>) {
                    const double x = to_double(name, v);
                    if (x != std::floor(x) || std::abs(x) > 1e9)
                        throw ValidationError(std::string("config '") + name + "': expected an integer");
                    c.*member = static_cast<T>(x);
                } else
                    c.*member = static_cast<T>(to_uint(name, v));
            },
            [member](const RunConfig& c) -> std::string {
                if constexpr (std::is_same_v<T, std::string>)
                    return c.*member;
                else if constexpr (std::is_same_v<T, bool>)
                    return c.*member ? "true" : "false";
                else if constexpr (std::is_floating_point_v<T>)
                    return fmt(c.*member);
                else
                    return std::to_string(c.*member);
            }};
}

template <class T>
Field list(const char* name, std::vector<T> RunConfig::*member)
{
    return {name,
            [name, member](RunConfig& c, const std::string& v) {
                std::vector<T> out;
                for (const auto& item : split_list(v)) {
                    if constexpr (std::is_floating_point_v<T>)
                        out.push_back(to_double(name, item));
                    else
                        out.push_back(static_cast<T>(to_uint(name, item)));
                }
                c.*member = std::move(out);
            },
            [member](const RunConfig& c) { return fmt_list(c.*member); }};
}

inline const std::vector<Field>& fields()
{
    static const std::vector<Field> f = {
        scalar("n_teeth", &RunConfig::n_teeth),
        scalar("delta", &RunConfig::delta),
        scalar("gamma", &RunConfig::gamma),
        scalar("total_depth", &RunConfig::total_depth),
        scalar("comb_file", &RunConfig::comb_file),
        scalar("sigma", &RunConfig::sigma),
        scalar("sigma_over_delta", &RunConfig::sigma_over_delta),
        scalar("l_scale", &RunConfig::l_scale),
        scalar("max_points", &RunConfig::max_points),
        scalar("disorder", &RunConfig::disorder),
        scalar("strength", &RunConfig::strength),
        list("strengths", &RunConfig::strengths),
        list("finesses", &RunConfig::finesses),
        list("lengths", &RunConfig::lengths),
        scalar("trials", &RunConfig::trials),
        scalar("seed", &RunConfig::seed),
        scalar("threads", &RunConfig::threads),
        list("ground_energies", &RunConfig::ground_energies),
        list("temperatures", &RunConfig::temperatures),
        list("tooth_assignment", &RunConfig::tooth_assignment),
        scalar("input", &RunConfig::input),
        scalar("gate_threshold", &RunConfig::gate_threshold),
        list("table_finesses", &RunConfig::table_finesses),
        scalar("table_max_depth", &RunConfig::table_max_depth),
        scalar("table_points", &RunConfig::table_points),
        scalar("out_dir", &RunConfig::out_dir),
        scalar("plot", &RunConfig::plot),
    };
    return f;
}

} // namespace config_detail

inline void RunConfig::set(const std::string& key, const std::string& value)
{
    for (const auto& f : config_detail::fields())
        if (key == f.name) {
            f.parse(*this, config_detail::trim(value));
            return;
        }
    throw ValidationError("unknown config key '" + key + "'");
}

inline std::string RunConfig::to_text() const
{
    std::string s;
    for (const auto& f : config_detail::fields()) s += std::string(f.name) + " = " + f.format(*this) + "\n";
    return s;
}

inline csv::Metadata RunConfig::metadata() const
{
    csv::Metadata m;
    for (const auto& f : config_detail::fields()) m.emplace_back(std::string("config.") + f.name, f.format(*this));
    return m;
}

/// Apply `key = value` lines on top of `config`.
inline void load_config(std::istream& in, RunConfig& config)
{
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        config.set(config_detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

inline void load_config_file(const std::string& path, RunConfig& config)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    load_config(in, config);
}

/// Rejects any configuration that would violate a downstream precondition.
/// `command` selects the extra checks of one subcommand.
inline void validate(const RunConfig& c, const std::string& command)
{
    using detail::require;
    auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };

    if (c.comb_file.empty()) {
        require(c.n_teeth > 0 && c.n_teeth % 2 == 1, "n_teeth must be odd and positive");
        require(positive(c.gamma), "gamma must be positive");
        require(c.total_depth >= 0.0 && std::isfinite(c.total_depth), "total_depth must be non-negative");
        if (c.n_teeth > 1 && !(c.delta > c.gamma)) throw FinesseError("delta must exceed gamma (finesse > 1)");
    } else if (!std::filesystem::exists(c.comb_file)) {
        throw IoError("comb file '" + c.comb_file + "' does not exist");
    }
    require(positive(c.delta), "delta must be positive");
    require(c.sigma == 0.0 || positive(c.sigma), "sigma must be positive (or 0 for sigma_over_delta)");
    require(positive(c.sigma_over_delta), "sigma_over_delta must be positive");
    require(c.l_scale >= 0.0 && std::isfinite(c.l_scale), "l_scale must be non-negative");
    require(c.max_points >= 2, "max_points must be at least 2");
    require(c.trials >= 1, "trials must be at least 1");
    require(c.gate_threshold >= 0.0, "gate_threshold must be non-negative");
    require(c.disorder == "none" || c.disorder == "spacing" || c.disorder == "depth",
            "disorder must be none, spacing or depth");
    require(c.strength >= 0.0 && std::isfinite(c.strength), "strength must be non-negative");

    if (command == "sweep-spacing" || command == "sweep-depth") {
        detail::require_increasing(c.strengths, "strengths");
        require(c.strengths.front() >= 0.0, "strengths must be non-negative");
        require(!c.finesses.empty(), "finesses must not be empty");
        for (double f : c.finesses) require(f > 1.0 && std::isfinite(f), "every finesse must exceed 1");
    }
    if (command == "sweep-length" || (command == "fit-backward" && c.input.empty())) {
        if (!c.lengths.empty()) {
            detail::require_increasing(c.lengths, "lengths");
            require(c.lengths.front() > 0.0, "lengths must be positive");
            require(c.lengths.size() >= 5, "a length sweep needs at least 5 lengths");
        }
    }
    if (command == "fit-backward" && !c.input.empty() && !std::filesystem::exists(c.input))
        throw IoError("input file '" + c.input + "' does not exist");
    if (command == "thermal") {
        require(!c.ground_energies.empty(), "thermal run needs ground_energies");
        for (double e : c.ground_energies) require(std::isfinite(e), "ground energies must be finite");
        require(!c.temperatures.empty(), "thermal run needs temperatures");
        for (double t : c.temperatures) require(positive(t), "temperatures must be positive");
        for (auto m : c.tooth_assignment)
            require(m < c.ground_energies.size(), "tooth_assignment refers to a missing ground state");
        if (c.comb_file.empty()) {
            const auto n = c.tooth_assignment.empty() ? c.ground_energies.size() : c.tooth_assignment.size();
            require(n == std::size_t(c.n_teeth), "tooth assignment must cover every tooth");
        }
    }
    if (command == "analytic-table") {
        require(positive(c.table_max_depth), "table_max_depth must be positive");
        require(c.table_points >= 2, "table_points must be at least 2");
        for (double f : c.table_finesses) require(f > 0.0, "table finesses must be positive");
    }
}

} // namespace iafc
