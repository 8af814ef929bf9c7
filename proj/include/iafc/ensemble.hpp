#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "iafc/comb.hpp"
#include "iafc/error.hpp"
#include "iafc/random.hpp"
#include "iafc/spectral.hpp"

namespace iafc {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    void merge(const CompensatedSum& other)
    {
        add(other.sum_);
        add(other.comp_);
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Element-wise compensated sum of equally long traces.
class TraceAccumulator {
public:
    explicit TraceAccumulator(std::size_t n = 0) : sums_(n) {}

    void add(std::span<const double> trace)
    {
        if (trace.size() != sums_.size()) throw GridError("trace length mismatch in accumulator");
        for (std::size_t k = 0; k < trace.size(); ++k) sums_[k].add(trace[k]);
    }
    void merge(const TraceAccumulator& other)
    {
        for (std::size_t k = 0; k < sums_.size(); ++k) sums_[k].merge(other.sums_[k]);
    }
    std::vector<double> mean(std::size_t count) const
    {
        std::vector<double> out(sums_.size());
        for (std::size_t k = 0; k < sums_.size(); ++k) out[k] = sums_[k].value() / double(count);
        return out;
    }

private:
    std::vector<CompensatedSum> sums_;
};

enum class DisorderKind { none, spacing, depth };

inline const char* to_string(DisorderKind k)
{
    switch (k) {
    case DisorderKind::spacing: return "spacing";
    case DisorderKind::depth: return "depth";
    case DisorderKind::none: break;
    }
    return "none";
}

/// Disorder model for one ensemble. Spacing strength is in units of the
/// mean tooth width; depth strength is an absolute depth.
struct DisorderSpec {
    DisorderKind kind = DisorderKind::none;
    double strength = 0.0;
    std::size_t n_trials = 500;
    std::uint64_t master_seed = 1;
};

struct EnsembleOptions {
    /// Worker threads; 0 picks the hardware concurrency.
    std::size_t threads = 0;
    GridOptions grid{};
};

struct EnsembleResult {
    double mean_efficiency = 0.0;
    double std_error = 0.0;
    std::size_t n_trials = 0;
    IntensityTrace mean_intensity_trace;
    std::vector<double> per_trial_efficiencies;
    double input_energy = 0.0;
};

inline double mean_width(const FrequencyComb& comb)
{
    double s = 0.0;
    for (const auto& t : comb.teeth()) s += t.width;
    return s / double(comb.size());
}

/// Absolute perturbation amplitude for the spec: gamma_r in rad/us for
/// spacing disorder, d_r for depth disorder.
inline double disorder_amplitude(const FrequencyComb& base, const DisorderSpec& spec)
{
    switch (spec.kind) {
    case DisorderKind::spacing: return spec.strength * mean_width(base);
    case DisorderKind::depth: return spec.strength;
    case DisorderKind::none: break;
    }
    return 0.0;
}

/// The comb seen by atom `trial` of the ensemble.
inline FrequencyComb realize_comb(const FrequencyComb& base, const DisorderSpec& spec, std::size_t trial)
{
    const double amp = disorder_amplitude(base, spec);
    if (spec.kind == DisorderKind::none || amp == 0.0) return base;
    auto rng = RandomStream::for_trial(spec.master_seed, trial);
    return spec.kind == DisorderKind::spacing ? perturb_spacing(base, amp, rng) : perturb_depth(base, amp, rng);
}

inline void validate(const DisorderSpec& spec)
{
    detail::require(spec.n_trials >= 1, "ensemble needs at least one trial");
    detail::require(spec.strength >= 0.0 && std::isfinite(spec.strength), "disorder strength must be non-negative");
}

namespace detail {

inline double sample_std_error(std::span<const double> xs)
{
    if (xs.size() < 2) return 0.0;
    CompensatedSum s;
    for (double x : xs) s.add(x);
    const double mean = s.value() / double(xs.size());
    CompensatedSum ss;
    for (double x : xs) ss.add((x - mean) * (x - mean));
    return std::sqrt(ss.value() / double(xs.size() - 1)) / std::sqrt(double(xs.size()));
}

} // namespace detail

/// Monte-Carlo ensemble of independently perturbed combs. Each trial is one
/// atom; the detected intensity is the incoherent mean over atoms and the
/// efficiency is taken from that mean trace.
inline EnsembleResult run_ensemble(const FrequencyComb& base, const DisorderSpec& spec, double sigma,
                                   double l_scale, EnsembleOptions opts = {})
{
    validate(spec);
    detail::require(base.size() >= 2, "ensemble needs a comb with at least two teeth");
    const double delta = base.mean_spacing();
    const double amp = disorder_amplitude(base, spec);

    auto grid_opts = opts.grid;
    if (spec.kind == DisorderKind::spacing) grid_opts.center_margin += amp;
    const auto grid = make_grid(base, sigma, grid_opts);
    const auto pulse = gaussian_spectrum(grid, sigma);
    const double e_in = to_time_domain(pulse).energy();

    EnsembleResult result;
    result.n_trials = spec.n_trials;
    result.input_energy = e_in;

    if (spec.kind == DisorderKind::none || amp == 0.0) {
        const auto fwd = propagate_forward(pulse, base, l_scale);
        result.mean_intensity_trace = {grid, fwd.trace.intensity()};
        result.mean_efficiency = first_echo_efficiency(result.mean_intensity_trace, e_in, delta);
        result.per_trial_efficiencies.assign(spec.n_trials, result.mean_efficiency);
        return result;
    }

    std::size_t n_workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min(n_workers, spec.n_trials);

    // Contiguous blocks of trials per worker, merged in block order.
    std::vector<TraceAccumulator> partial(n_workers, TraceAccumulator(grid.n_points));
    std::vector<double> effs(spec.n_trials);
    std::vector<std::exception_ptr> errors(n_workers);

    auto work = [&](std::size_t w) {
        try {
            const std::size_t begin = spec.n_trials * w / n_workers;
            const std::size_t end = spec.n_trials * (w + 1) / n_workers;
            for (std::size_t i = begin; i < end; ++i) {
                const auto comb = realize_comb(base, spec, i);
                const auto fwd = propagate_forward(pulse, comb, l_scale);
                IntensityTrace trace{grid, fwd.trace.intensity()};
                effs[i] = first_echo_efficiency(trace, e_in, delta);
                partial[w].add(trace.values);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };

    if (n_workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work, w);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (std::size_t w = 1; w < n_workers; ++w) partial[0].merge(partial[w]);
    result.mean_intensity_trace = {grid, partial[0].mean(spec.n_trials)};
    result.mean_efficiency = first_echo_efficiency(result.mean_intensity_trace, e_in, delta);
    result.std_error = detail::sample_std_error(effs);
    result.per_trial_efficiencies = std::move(effs);
    return result;
}

/// Mean efficiency with standard errors against one swept parameter.
struct EfficiencyCurve {
    std::vector<double> abscissa;
    std::vector<double> ordinate;
    std::vector<double> errors;
    std::vector<std::pair<std::string, std::string>> metadata;

    void validate() const
    {
        detail::require(abscissa.size() == ordinate.size() && ordinate.size() == errors.size(),
                        "curve columns must have equal lengths");
        for (std::size_t i = 1; i < abscissa.size(); ++i)
            detail::require(abscissa[i] > abscissa[i - 1], "curve abscissa must be strictly increasing");
    }

    const std::string* find(const std::string& key) const
    {
        for (const auto& [k, v] : metadata)
            if (k == key) return &v;
        return nullptr;
    }
};

namespace detail {

inline void require_increasing(std::span<const double> xs, const char* what)
{
    require(!xs.empty(), std::string(what) + " must not be empty");
    for (std::size_t i = 1; i < xs.size(); ++i)
        require(xs[i] > xs[i - 1], std::string(what) + " must be strictly increasing");
}

inline std::string num(double x)
{
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
}

} // namespace detail

/// Same teeth with all centers scaled so that finesse(result) == target.
/// Widths are kept, so this changes the spacing at fixed tooth width.
inline FrequencyComb with_finesse(const FrequencyComb& comb, double target)
{
    detail::require(target > 0.0, "finesse must be positive");
    const double scale = target / finesse(comb);
    std::vector<Tooth> teeth(comb.teeth().begin(), comb.teeth().end());
    for (auto& t : teeth) t.center *= scale;
    return FrequencyComb(std::move(teeth), comb.label());
}

/// One curve per finesse of mean efficiency against disorder strength. The
/// pulse width follows the spacing, sigma = sigma_over_delta * delta.
inline std::vector<EfficiencyCurve> sweep_strength(const FrequencyComb& base, DisorderKind kind,
                                                   std::span<const double> strengths,
                                                   std::span<const double> finesses, double sigma_over_delta,
                                                   double l_scale, std::size_t n_trials,
                                                   std::uint64_t master_seed, EnsembleOptions opts = {})
{
    detail::require_increasing(strengths, "strengths");
    detail::require(!finesses.empty(), "need at least one finesse");
    detail::require(sigma_over_delta > 0.0, "pulse width factor must be positive");

    std::vector<EfficiencyCurve> curves;
    for (double f : finesses) {
        const auto comb = with_finesse(base, f);
        const double sigma = sigma_over_delta * comb.mean_spacing();
        EfficiencyCurve c;
        c.metadata = {{"kind", to_string(kind)},
                      {"finesse", detail::num(f)},
                      {"delta", detail::num(comb.mean_spacing())},
                      {"gamma", detail::num(mean_width(comb))},
                      {"total_depth", detail::num(comb.total_depth())},
                      {"n_teeth", std::to_string(comb.size())},
                      {"sigma", detail::num(sigma)},
                      {"l_scale", detail::num(l_scale)},
                      {"n_trials", std::to_string(n_trials)},
                      {"master_seed", std::to_string(master_seed)}};
        for (double s : strengths) {
            const auto r = run_ensemble(comb, {kind, s, n_trials, master_seed}, sigma, l_scale, opts);
            c.abscissa.push_back(s);
            c.ordinate.push_back(r.mean_efficiency);
            c.errors.push_back(r.std_error);
        }
        curves.push_back(std::move(c));
    }
    return curves;
}

/// Mean forward efficiency against propagation length (depth scale).
inline EfficiencyCurve sweep_length(const FrequencyComb& base, const DisorderSpec& spec, double sigma,
                                    std::span<const double> l_grid, EnsembleOptions opts = {})
{
    detail::require_increasing(l_grid, "length grid");
    detail::require(l_grid.front() >= 0.0, "lengths must be non-negative");
    EfficiencyCurve c;
    c.metadata = {{"kind", to_string(spec.kind)},
                  {"strength", detail::num(spec.strength)},
                  {"finesse", detail::num(finesse(base))},
                  {"delta", detail::num(base.mean_spacing())},
                  {"gamma", detail::num(mean_width(base))},
                  {"total_depth", detail::num(base.total_depth())},
                  {"n_teeth", std::to_string(base.size())},
                  {"sigma", detail::num(sigma)},
                  {"n_trials", std::to_string(spec.n_trials)},
                  {"master_seed", std::to_string(spec.master_seed)}};
    for (double l : l_grid) {
        const auto r = run_ensemble(base, spec, sigma, l, opts);
        c.abscissa.push_back(l);
        c.ordinate.push_back(r.mean_efficiency);
        c.errors.push_back(r.std_error);
    }
    return c;
}

/// Evenly spaced lengths from 1/4 to 5 times the nominal forward optimum
/// L = 2 F / (alpha L).
inline std::vector<double> default_length_grid(double total_depth, double finesse_value, std::size_t n = 16)
{
    detail::require(total_depth > 0.0 && finesse_value > 0.0, "need positive depth and finesse");
    detail::require(n >= 2, "need at least two lengths");
    const double peak = 2.0 * finesse_value / total_depth;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = peak * (0.25 + 4.75 * double(i) / double(n - 1));
    return out;
}

} // namespace iafc
