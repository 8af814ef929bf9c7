#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "iafc/error.hpp"
#include "iafc/random.hpp"
#include "iafc/units.hpp"

namespace iafc {

/// One Lorentzian absorption line of the comb.
///
/// `center` is the detuning from the carrier and `width` the full width,
/// both in rad/us. `depth` is the dimensionless amplitude-absorption
/// coefficient at unit propagation length: on resonance the propagator
/// contributes 2*depth.
struct Tooth {
    double center = 0.0;
    double width = 1.0;
    double depth = 0.0;

    friend bool operator==(const Tooth&, const Tooth&) = default;
};

/// Ordered set of teeth. Centers are strictly ascending and there is
/// always at least one tooth.
class FrequencyComb {
public:
    explicit FrequencyComb(std::vector<Tooth> teeth, std::string label = {})
        : teeth_(std::move(teeth)), label_(std::move(label))
    {
        detail::require(!teeth_.empty(), "frequency comb needs at least one tooth");
        for (const auto& t : teeth_) {
            detail::require(std::isfinite(t.center), "tooth center must be finite");
            detail::require(std::isfinite(t.width) && t.width > 0.0, "tooth width must be positive");
            detail::require(std::isfinite(t.depth) && t.depth >= 0.0, "tooth depth must be non-negative");
        }
        std::stable_sort(teeth_.begin(), teeth_.end(),
                         [](const Tooth& a, const Tooth& b) { return a.center < b.center; });
        for (std::size_t i = 1; i < teeth_.size(); ++i)
            detail::require(teeth_[i].center > teeth_[i - 1].center,
                            "tooth centers must be distinct");
    }

    std::span<const Tooth> teeth() const { return teeth_; }
    const Tooth& operator[](std::size_t i) const { return teeth_[i]; }
    std::size_t size() const { return teeth_.size(); }
    const std::string& label() const { return label_; }

    double min_width() const
    {
        return std::ranges::min(teeth_, {}, &Tooth::width).width;
    }

    double max_abs_center() const
    {
        double r = 0.0;
        for (const auto& t : teeth_) r = std::max(r, std::abs(t.center));
        return r;
    }

    double total_depth() const
    {
        return std::accumulate(teeth_.begin(), teeth_.end(), 0.0,
                               [](double s, const Tooth& t) { return s + t.depth; });
    }

    /// Mean neighbour spacing; zero for a single tooth.
    double mean_spacing() const
    {
        if (teeth_.size() < 2) return 0.0;
        return (teeth_.back().center - teeth_.front().center) / double(teeth_.size() - 1);
    }

    friend bool operator==(const FrequencyComb& a, const FrequencyComb& b)
    {
        return a.teeth_ == b.teeth_;
    }

private:
    std::vector<Tooth> teeth_;
    std::string label_;
};

/// Thermal ground-state manifold. Energies are E_m/hbar in rad/us.
/// `tooth_assignment[n]` is the ground state feeding tooth n; leave it empty
/// for the identity map (tooth n <- ground state n).
struct ThermalSpec {
    std::vector<double> ground_energies;
    double temperature = 300.0;
    std::vector<std::size_t> tooth_assignment;
};

/// 2N+1 identical teeth at centers n*delta, n = -N..N, sharing total_depth.
inline FrequencyComb uniform_comb(int n_teeth, double delta, double gamma, double total_depth)
{
    detail::require(n_teeth > 0 && n_teeth % 2 == 1, "tooth count must be odd and positive");
    detail::require(gamma > 0.0 && std::isfinite(gamma), "tooth width must be positive");
    detail::require(total_depth >= 0.0 && std::isfinite(total_depth), "total depth must be non-negative");
    if (n_teeth > 1 && !(delta > gamma))
        throw FinesseError("comb spacing must exceed tooth width (finesse > 1)");

    const int half = n_teeth / 2;
    std::vector<Tooth> teeth;
    teeth.reserve(static_cast<std::size_t>(n_teeth));
    for (int n = -half; n <= half; ++n)
        teeth.push_back({n * delta, gamma, total_depth / n_teeth});

    std::ostringstream label;
    label << "uniform n=" << n_teeth << " delta=" << delta << " gamma=" << gamma
          << " depth=" << total_depth;
    return FrequencyComb(std::move(teeth), label.str());
}

/// Shift every center by an independent uniform draw in [-gamma_r, gamma_r].
/// Teeth are allowed to overlap afterwards.
inline FrequencyComb perturb_spacing(const FrequencyComb& comb, double gamma_r, RandomStream& rng)
{
    detail::require(gamma_r >= 0.0 && std::isfinite(gamma_r), "spacing fluctuation must be non-negative");
    if (gamma_r == 0.0) return comb;
    std::vector<Tooth> teeth(comb.teeth().begin(), comb.teeth().end());
    for (auto& t : teeth) t.center += rng.symmetric(gamma_r);
    return FrequencyComb(std::move(teeth), comb.label());
}

/// Add an independent uniform draw in [-d_r, d_r] to every depth, clamped at 0.
inline FrequencyComb perturb_depth(const FrequencyComb& comb, double d_r, RandomStream& rng)
{
    detail::require(d_r >= 0.0 && std::isfinite(d_r), "depth fluctuation must be non-negative");
    if (d_r == 0.0) return comb;
    std::vector<Tooth> teeth(comb.teeth().begin(), comb.teeth().end());
    for (auto& t : teeth) t.depth = std::max(0.0, t.depth + rng.symmetric(d_r));
    return FrequencyComb(std::move(teeth), comb.label());
}

/// Boltzmann populations exp(-E_m/k_B T)/Z, evaluated relative to the
/// lowest energy so that the exponentials never overflow.
inline std::vector<double> boltzmann_weights(const ThermalSpec& spec)
{
    detail::require(!spec.ground_energies.empty(), "thermal spec needs at least one ground state");
    detail::require(spec.temperature > 0.0 && std::isfinite(spec.temperature),
                    "temperature must be positive");
    const double e_min = std::ranges::min(spec.ground_energies);
    std::vector<double> w;
    w.reserve(spec.ground_energies.size());
    for (double e : spec.ground_energies)
        w.push_back(std::exp(-units::energy_over_kt(e - e_min, spec.temperature)));
    const double z = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= z;
    return w;
}

/// Identity tooth->ground map when `assignment` is empty.
inline std::vector<std::size_t> resolve_assignment(std::span<const std::size_t> assignment,
                                                   std::size_t n_teeth)
{
    if (!assignment.empty()) return {assignment.begin(), assignment.end()};
    std::vector<std::size_t> id(n_teeth);
    std::iota(id.begin(), id.end(), std::size_t{0});
    return id;
}

/// Scale each tooth depth by w_m * M, M = number of ground states. Uniform
/// weights leave the comb unchanged bit for bit.
inline FrequencyComb apply_populations(const FrequencyComb& comb, std::span<const double> weights,
                                       std::span<const std::size_t> assignment)
{
    detail::require(!weights.empty(), "population vector is empty");
    const auto map = resolve_assignment(assignment, comb.size());
    if (map.size() != comb.size())
        throw ValidationError("tooth assignment covers " + std::to_string(map.size()) +
                              " teeth, comb has " + std::to_string(comb.size()));
    for (std::size_t n = 0; n < map.size(); ++n)
        if (map[n] >= weights.size())
            throw ValidationError("tooth " + std::to_string(n) + " mapped to missing ground state " +
                                  std::to_string(map[n]));

    const bool uniform = std::ranges::all_of(weights, [&](double w) { return w == weights[0]; });
    if (uniform) return comb;

    const double m = static_cast<double>(weights.size());
    std::vector<Tooth> teeth(comb.teeth().begin(), comb.teeth().end());
    for (std::size_t n = 0; n < teeth.size(); ++n) teeth[n].depth *= weights[map[n]] * m;
    return FrequencyComb(std::move(teeth), comb.label());
}

/// Mean neighbour spacing over mean width.
inline double finesse(const FrequencyComb& comb)
{
    detail::require(comb.size() >= 2, "finesse needs at least two teeth");
    double mean_width = 0.0;
    for (const auto& t : comb.teeth()) mean_width += t.width;
    mean_width /= double(comb.size());
    return comb.mean_spacing() / mean_width;
}

// Text format: one tooth per line, "center width depth", '#' starts a comment.

inline FrequencyComb read_comb(std::istream& in, std::string label = "file")
{
    std::vector<Tooth> teeth;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        Tooth t;
        if (!(fields >> t.center)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw ValidationError("comb line " + std::to_string(line_no) + ": expected 'center width depth'");
        }
        std::string extra;
        if (!(fields >> t.width >> t.depth) || (fields >> extra))
            throw ValidationError("comb line " + std::to_string(line_no) + ": expected 'center width depth'");
        teeth.push_back(t);
    }
    return FrequencyComb(std::move(teeth), std::move(label));
}

inline void write_comb(std::ostream& out, const FrequencyComb& comb)
{
    out << "# " << comb.label() << "\n# center width depth (rad/us, rad/us, 1)\n";
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& t : comb.teeth()) out << t.center << ' ' << t.width << ' ' << t.depth << '\n';
    out.precision(old);
}

} // namespace iafc
