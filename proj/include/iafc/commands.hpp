#pragma once

#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "iafc/analytic.hpp"
#include "iafc/backward.hpp"
#include "iafc/comb.hpp"
#include "iafc/config.hpp"
#include "iafc/csv.hpp"
#include "iafc/ensemble.hpp"
#include "iafc/spectral.hpp"
#include "iafc/svg.hpp"
#include "iafc/version.hpp"

// Subcommands of the iafc tool. Each writes its files into config.out_dir
// and returns a process exit status.
namespace iafc::cli {

enum ExitCode : int { ok = 0, internal_error = 1, invalid_input = 2, gate_failed = 3 };

namespace detail {

inline std::string path(const RunConfig& c, const std::string& name)
{
    return (std::filesystem::path(c.out_dir) / name).string();
}

inline csv::Metadata header_meta(const RunConfig& c, const std::string& command)
{
    csv::Metadata m = {{"iafc_version", version}, {"command", command}};
    const auto cfg = c.metadata();
    m.insert(m.end(), cfg.begin(), cfg.end());
    return m;
}

inline void prepare_out_dir(const RunConfig& c)
{
    std::error_code ec;
    std::filesystem::create_directories(c.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + c.out_dir + "': " + ec.message());
}

inline void write_manifest(const RunConfig& c, const std::string& command)
{
    auto out = csv::open_output(path(c, "manifest.cfg"));
    out << "# iafc " << version << " " << command << "\n# replay: iafc " << command << " --config manifest.cfg\n"
        << c.to_text();
}

inline std::string tag(double x)
{
    std::ostringstream s;
    s << x;
    return s.str();
}

inline DisorderKind parse_kind(const std::string& s)
{
    if (s == "spacing") return DisorderKind::spacing;
    if (s == "depth") return DisorderKind::depth;
    return DisorderKind::none;
}

inline EnsembleOptions ensemble_options(const RunConfig& c)
{
    EnsembleOptions o;
    o.threads = c.threads;
    o.grid.max_points = c.max_points;
    return o;
}

inline EfficiencyCurve length_curve(const RunConfig& c)
{
    const auto comb = c.base_comb();
    auto lengths = c.lengths;
    if (lengths.empty()) lengths = default_length_grid(comb.total_depth(), finesse(comb));
    const DisorderSpec spec{parse_kind(c.disorder), c.strength, c.trials, c.seed};
    return sweep_length(comb, spec, c.pulse_sigma(comb.mean_spacing()), lengths, ensemble_options(c));
}

} // namespace detail

struct SimulateSummary {
    double efficiency = 0.0;
    EchoPeak peak;
};

/// One deterministic propagation: input/output traces, output spectrum and
/// a summary with the first-echo efficiency.
inline SimulateSummary cmd_simulate(const RunConfig& c, std::ostream& log)
{
    validate(c, "simulate");
    detail::prepare_out_dir(c);
    const auto comb = c.base_comb();
    const double spacing = c.echo_spacing(comb);
    const double sigma = c.pulse_sigma(spacing);
    const auto grid = make_grid(comb, sigma, {c.max_points, 0.0});
    const auto pulse = gaussian_spectrum(grid, sigma);
    const auto input = to_time_domain(pulse);
    const auto fwd = propagate_forward(pulse, comb, c.l_scale);

    const double pi = units::two_pi / 2.0;
    SimulateSummary s;
    s.efficiency = first_echo_efficiency(fwd.trace, input, spacing);
    s.peak = echo_peak_time(fwd.trace, pi / spacing, 3.0 * pi / spacing);

    const auto meta = detail::header_meta(c, "simulate");
    {
        auto out = csv::open_output(detail::path(c, "simulate_input.csv"));
        csv::write_trace(out, input, meta);
    }
    {
        auto out = csv::open_output(detail::path(c, "simulate_output.csv"));
        csv::write_trace(out, fwd.trace, meta);
    }
    {
        auto out = csv::open_output(detail::path(c, "simulate_spectrum.csv"));
        csv::write_spectrum(out, fwd.spectrum, meta);
    }
    {
        auto out = csv::open_output(detail::path(c, "simulate_summary.csv"));
        csv::Writer w(out);
        w.meta(meta).header({"eta", "echo_peak_time", "echo_reliable", "expected_echo_time", "input_energy",
                             "output_energy"});
        w.row({s.efficiency, s.peak.time, s.peak.reliable ? 1.0 : 0.0, units::two_pi / spacing, input.energy(),
               fwd.trace.energy()});
    }
    if (c.plot) {
        // Only the first few echo periods are worth drawing.
        svg::Series series{"|E(L,t)|^2", {}, {}};
        const double t_end = 4.0 * units::two_pi / spacing;
        for (std::size_t k = 0; k < grid.n_points; ++k) {
            const double t = grid.time(k);
            if (t < -0.5 * units::two_pi / spacing || t > t_end) continue;
            series.x.push_back(t);
            series.y.push_back(std::norm(fwd.trace.amplitudes[k]));
        }
        auto out = csv::open_output(detail::path(c, "simulate_intensity.svg"));
        svg::line_plot(out, "Transmitted intensity", "t (us)", "intensity", {series});
    }
    log << "eta = " << s.efficiency << "  echo peak at t = " << s.peak.time << " us"
        << (s.peak.reliable ? "" : " (no distinguished echo)") << "\n";
    return s;
}

/// Strength sweeps (spacing or depth disorder) for every finesse, or a
/// length sweep. Writes one CSV per curve and a replayable manifest.
inline std::vector<EfficiencyCurve> cmd_sweep(const RunConfig& c, DisorderKind kind, bool length_sweep,
                                              std::ostream& log)
{
    const std::string command = length_sweep ? "sweep-length"
                                             : std::string("sweep-") + to_string(kind);
    validate(c, command);
    detail::prepare_out_dir(c);
    const auto meta = detail::header_meta(c, command);

    std::vector<EfficiencyCurve> curves;
    std::vector<std::string> names;
    if (length_sweep) {
        curves.push_back(detail::length_curve(c));
        names.push_back("sweep_length");
    } else {
        curves = sweep_strength(c.base_comb(), kind, c.strengths, c.finesses, c.sigma_over_delta, c.l_scale,
                                c.trials, c.seed, detail::ensemble_options(c));
        for (double f : c.finesses) names.push_back(std::string("sweep_") + to_string(kind) + "_F" + detail::tag(f));
    }

    std::vector<svg::Series> series;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        auto out = csv::open_output(detail::path(c, names[i] + ".csv"));
        csv::write_curve(out, curves[i], meta);
        series.push_back({names[i], curves[i].abscissa, curves[i].ordinate});
        log << names[i] << ":";
        for (std::size_t k = 0; k < curves[i].abscissa.size(); ++k)
            log << " (" << curves[i].abscissa[k] << ", " << curves[i].ordinate[k] << " +- " << curves[i].errors[k]
                << ")";
        log << "\n";
    }
    detail::write_manifest(c, command);
    if (c.plot) {
        auto out = csv::open_output(detail::path(c, length_sweep ? "sweep_length.svg"
                                                                  : std::string("sweep_") + to_string(kind) + ".svg"));
        svg::line_plot(out, "Forward efficiency", length_sweep ? "L scale" : "fluctuation strength", "eta", series);
    }
    return curves;
}

/// Fit a length sweep (read from `input`, or simulated from the config) and
/// report backward efficiencies. Returns gate_failed when the fit does not
/// converge or its residual exceeds the gate.
inline int cmd_fit_backward(const RunConfig& c, std::ostream& log, BackwardEstimate* result = nullptr)
{
    validate(c, "fit-backward");
    detail::prepare_out_dir(c);

    std::vector<double> lengths, etas;
    if (!c.input.empty()) {
        const auto table = csv::read_file(c.input);
        if (table.header.size() < 2) throw ValidationError("input CSV needs length and efficiency columns");
        for (const auto& row : table.rows) {
            lengths.push_back(row[0]);
            etas.push_back(row[1]);
        }
    } else {
        const auto curve = detail::length_curve(c);
        lengths = curve.abscissa;
        etas = curve.ordinate;
        auto out = csv::open_output(detail::path(c, "sweep_length.csv"));
        csv::write_curve(out, curve, detail::header_meta(c, "fit-backward"));
    }

    BackwardEstimate est;
    try {
        est = estimate_backward(lengths, etas, c.gate_threshold);
    } catch (const FitError& e) {
        throw ValidationError(e.what());
    }
    if (result) *result = est;

    const auto meta = detail::header_meta(c, "fit-backward");
    {
        auto out = csv::open_output(detail::path(c, "fit.csv"));
        csv::Writer w(out);
        w.meta(meta).meta({{"gate", est.gate_passed ? "passed" : "failed"}});
        w.header({"eta0", "alpha_tilde", "rms_residual", "converged", "gate_threshold", "gate_passed", "at_length",
                  "eta_backward"});
        w.row({est.fit.eta0, est.fit.alpha_tilde, est.fit.rms_residual, est.fit.converged ? 1.0 : 0.0,
               c.gate_threshold, est.gate_passed ? 1.0 : 0.0, est.at_length, est.eta_backward});
    }
    {
        auto out = csv::open_output(detail::path(c, "backward.csv"));
        csv::Writer w(out);
        w.meta(meta).meta({{"reliable", est.gate_passed ? "true" : "false"}});
        w.header({"L", "eta_forward", "eta_forward_fit", "eta_backward"});
        for (std::size_t i = 0; i < lengths.size(); ++i) {
            const double x = est.fit.alpha_tilde * lengths[i];
            const double fitted = est.fit.eta0 * x * x * std::exp(-x);
            const double back = est.fit.converged ? backward_efficiency(est.fit, lengths[i])
                                                  : std::numeric_limits<double>::quiet_NaN();
            w.row({lengths[i], etas[i], fitted, back});
        }
    }
    log << "eta0 = " << est.fit.eta0 << "  alpha_tilde = " << est.fit.alpha_tilde
        << "  rms residual = " << est.fit.rms_residual << "\n"
        << "backward efficiency at L = " << est.at_length << ": " << est.eta_backward << "\n"
        << "fit gate (" << c.gate_threshold << "): " << (est.gate_passed ? "passed" : "FAILED, estimate unreliable")
        << "\n";
    return est.gate_passed ? ok : gate_failed;
}

struct ThermalPoint {
    double temperature = 0.0;
    std::vector<double> weights;
    double efficiency = 0.0;
};

/// Efficiency of the population-weighted comb at each temperature.
inline std::vector<ThermalPoint> cmd_thermal(const RunConfig& c, std::ostream& log)
{
    validate(c, "thermal");
    detail::prepare_out_dir(c);
    const auto base = c.base_comb();
    const double spacing = c.echo_spacing(base);
    const double sigma = c.pulse_sigma(spacing);
    const auto grid = make_grid(base, sigma, {c.max_points, 0.0});
    const auto pulse = gaussian_spectrum(grid, sigma);
    const auto input = to_time_domain(pulse);
    const auto meta = detail::header_meta(c, "thermal");

    std::vector<ThermalPoint> points;
    for (double t : c.temperatures) {
        ThermalSpec spec{c.ground_energies, t, c.tooth_assignment};
        ThermalPoint p{t, boltzmann_weights(spec), 0.0};
        const auto comb = apply_populations(base, p.weights, spec.tooth_assignment);
        const auto fwd = propagate_forward(pulse, comb, c.l_scale);
        p.efficiency = first_echo_efficiency(fwd.trace, input, spacing);
        {
            auto out = csv::open_output(detail::path(c, "thermal_comb_T" + detail::tag(t) + ".txt"));
            write_comb(out, FrequencyComb(std::vector<Tooth>(comb.teeth().begin(), comb.teeth().end()),
                                          "populations at T = " + detail::tag(t) + " K"));
        }
        log << "T = " << t << " K  eta = " << p.efficiency << "\n";
        points.push_back(std::move(p));
    }

    {
        auto out = csv::open_output(detail::path(c, "thermal.csv"));
        csv::Writer w(out);
        w.meta(meta).header({"temperature", "eta"});
        for (const auto& p : points) w.row({p.temperature, p.efficiency});
    }
    {
        auto out = csv::open_output(detail::path(c, "thermal_weights.csv"));
        csv::Writer w(out);
        std::vector<std::string> cols{"temperature"};
        for (std::size_t m = 0; m < c.ground_energies.size(); ++m) cols.push_back("w" + std::to_string(m));
        w.meta(meta).header(cols);
        for (const auto& p : points) {
            std::vector<double> row{p.temperature};
            row.insert(row.end(), p.weights.begin(), p.weights.end());
            w.row(row);
        }
    }
    if (c.plot) {
        svg::Series s{"eta(T)", {}, {}};
        for (const auto& p : points) {
            s.x.push_back(p.temperature);
            s.y.push_back(p.efficiency);
        }
        auto out = csv::open_output(detail::path(c, "thermal.svg"));
        svg::line_plot(out, "Efficiency vs temperature", "T (K)", "eta", {s});
    }
    return points;
}

/// Closed-form forward and backward efficiencies on a grid of effective
/// depths, for each table finesse plus the high-finesse limit (finesse = inf).
inline void cmd_analytic_table(const RunConfig& c, std::ostream& log)
{
    validate(c, "analytic-table");
    detail::prepare_out_dir(c);
    auto finesses = c.table_finesses;
    finesses.push_back(std::numeric_limits<double>::infinity());

    auto out = csv::open_output(detail::path(c, "analytic_table.csv"));
    csv::Writer w(out);
    w.meta(detail::header_meta(c, "analytic-table")).header({"alpha_tilde_L", "finesse", "eta_f", "eta_b"});
    std::vector<svg::Series> series;
    for (double f : finesses) {
        svg::Series fwd{"forward F=" + detail::tag(f), {}, {}}, bwd{"backward F=" + detail::tag(f), {}, {}};
        for (std::size_t i = 0; i < c.table_points; ++i) {
            const double x = c.table_max_depth * double(i) / double(c.table_points - 1);
            const analytic::AfcParams p{x, f};
            const double ef = analytic::eta_forward(p), eb = analytic::eta_backward(p);
            w.row({x, f, ef, eb});
            fwd.x.push_back(x);
            fwd.y.push_back(ef);
            bwd.x.push_back(x);
            bwd.y.push_back(eb);
        }
        series.push_back(std::move(fwd));
        series.push_back(std::move(bwd));
    }
    if (c.plot) {
        auto svg_out = csv::open_output(detail::path(c, "analytic_table.svg"));
        svg::line_plot(svg_out, "AFC efficiencies", "effective depth aL/F", "eta", series);
    }
    log << "wrote " << detail::path(c, "analytic_table.csv") << "\n";
}

inline const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names = {"simulate",    "sweep-spacing", "sweep-depth",   "sweep-length",
                                                   "fit-backward", "thermal",      "analytic-table"};
    return names;
}

/// Runs one subcommand and maps failures to exit codes: 2 for invalid input
/// or I/O problems, 3 for a failed fit gate, 1 for anything unexpected.
inline int run(const std::string& command, const RunConfig& c, std::ostream& log, std::ostream& err)
{
    try {
        if (command == "simulate")
            cmd_simulate(c, log);
        else if (command == "sweep-spacing")
            cmd_sweep(c, DisorderKind::spacing, false, log);
        else if (command == "sweep-depth")
            cmd_sweep(c, DisorderKind::depth, false, log);
        else if (command == "sweep-length")
            cmd_sweep(c, detail::parse_kind(c.disorder), true, log);
        else if (command == "fit-backward")
            return cmd_fit_backward(c, log);
        else if (command == "thermal")
            cmd_thermal(c, log);
        else if (command == "analytic-table")
            cmd_analytic_table(c, log);
        else {
            err << "unknown command '" << command << "'\n";
            return invalid_input;
        }
        return ok;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return invalid_input;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return invalid_input;
    } catch (const GridError& e) {
        err << "error: " << e.what() << "\n";
        return invalid_input;
    } catch (const FitError& e) {
        err << "error: " << e.what() << "\n";
        return invalid_input;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return internal_error;
    }
}

} // namespace iafc::cli
