#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "iafc/ensemble.hpp"

using namespace iafc;
using Catch::Approx;

namespace {

const double kGamma = units::from_mhz(5.0);

FrequencyComb comb_with_finesse(double f, double total_depth = 30.0)
{
    return uniform_comb(7, f * kGamma, kGamma, total_depth);
}

} // namespace

TEST_CASE("CompensatedSum recovers small terms lost by naive summation", "[ensemble][sum]")
{
    CompensatedSum s;
    s.add(1.0);
    for (int i = 0; i < 1000; ++i) s.add(1e-16);
    s.add(-1.0);
    CHECK(s.value() == Approx(1e-13).epsilon(1e-12));
}

TEST_CASE("deterministic ensemble equals a single propagation", "[ensemble]")
{
    const auto comb = comb_with_finesse(20);
    const double sigma = 2.0 * comb.mean_spacing();
    const auto grid = make_grid(comb, sigma);
    const auto pulse = gaussian_spectrum(grid, sigma);
    const auto fwd = propagate_forward(pulse, comb, 1.0);
    const double eta = first_echo_efficiency(fwd.trace, to_time_domain(pulse), comb.mean_spacing());

    for (auto kind : {DisorderKind::none, DisorderKind::spacing, DisorderKind::depth}) {
        const auto r = run_ensemble(comb, {kind, 0.0, 37, 5}, sigma, 1.0);
        CHECK(r.mean_efficiency == eta);
        CHECK(r.std_error == 0.0);
        CHECK(r.n_trials == 37);
        CHECK(r.mean_intensity_trace.values == fwd.trace.intensity());
    }
}

TEST_CASE("ensemble replay is bit-exact and thread count does not matter", "[ensemble][determinism]")
{
    const auto comb = comb_with_finesse(20);
    const double sigma = 2.0 * comb.mean_spacing();
    const DisorderSpec spec{DisorderKind::spacing, 10.0, 24, 777};
    const auto a = run_ensemble(comb, spec, sigma, 1.0, {1, {}});
    const auto b = run_ensemble(comb, spec, sigma, 1.0, {1, {}});
    CHECK(a.mean_efficiency == b.mean_efficiency);
    CHECK(a.std_error == b.std_error);
    CHECK(a.per_trial_efficiencies == b.per_trial_efficiencies);
    CHECK(a.mean_intensity_trace.values == b.mean_intensity_trace.values);

    const auto p = run_ensemble(comb, spec, sigma, 1.0, {4, {}});
    CHECK(p.per_trial_efficiencies == a.per_trial_efficiencies);
    CHECK(std::abs(p.mean_efficiency - a.mean_efficiency) <= 1e-12 * a.mean_efficiency);
    for (std::size_t k = 0; k < p.mean_intensity_trace.values.size(); ++k)
        CHECK(std::abs(p.mean_intensity_trace.values[k] - a.mean_intensity_trace.values[k]) <=
              1e-12 * std::abs(a.mean_intensity_trace.values[k]) + 1e-300);

    const auto other = run_ensemble(comb, {DisorderKind::spacing, 10.0, 24, 778}, sigma, 1.0, {1, {}});
    CHECK(other.mean_efficiency != a.mean_efficiency);
}

TEST_CASE("mean-trace efficiency equals the mean of per-trial efficiencies", "[ensemble][property]")
{
    for (auto kind : {DisorderKind::spacing, DisorderKind::depth}) {
        const auto comb = comb_with_finesse(20);
        const double sigma = 2.0 * comb.mean_spacing();
        const double strength = kind == DisorderKind::spacing ? 20.0 : 1.4;
        const auto r = run_ensemble(comb, {kind, strength, 40, 31}, sigma, 1.0);
        CompensatedSum s;
        for (double e : r.per_trial_efficiencies) s.add(e);
        CHECK(std::abs(r.mean_efficiency - s.value() / 40.0) <= 1e-12);
        CHECK(r.mean_efficiency >= 0.0);
        CHECK(r.mean_efficiency <= 1.0);
        CHECK(std::ranges::all_of(r.mean_intensity_trace.values, [](double v) { return v >= 0.0; }));
    }
}

TEST_CASE("incoherent sum is invariant under trial order", "[ensemble][property]")
{
    const auto base = comb_with_finesse(20);
    const double sigma = 2.0 * base.mean_spacing();
    const auto grid = make_grid(base, sigma, {1 << 22, 25.0 * kGamma});
    const auto pulse = gaussian_spectrum(grid, sigma);
    const DisorderSpec spec{DisorderKind::spacing, 25.0, 30, 4242};

    std::vector<std::vector<double>> traces;
    for (std::size_t i = 0; i < spec.n_trials; ++i)
        traces.push_back(propagate_forward(pulse, realize_comb(base, spec, i), 1.0).trace.intensity());

    auto mean_in_order = [&](const std::vector<std::size_t>& order) {
        TraceAccumulator acc(grid.n_points);
        for (auto i : order) acc.add(traces[i]);
        return acc.mean(order.size());
    };
    std::vector<std::size_t> order(spec.n_trials);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto forward = mean_in_order(order);
    RandomStream shuffle(9);
    for (int rep = 0; rep < 3; ++rep) {
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[static_cast<std::size_t>(shuffle.unit() * double(i + 1))]);
        const auto permuted = mean_in_order(order);
        double worst = 0.0;
        for (std::size_t k = 0; k < forward.size(); ++k)
            if (forward[k] > 0.0) worst = std::max(worst, std::abs(permuted[k] - forward[k]) / forward[k]);
        CHECK(worst <= 1e-12);
    }

    // the library's own reduction agrees with the hand-built one
    const auto r = run_ensemble(base, spec, sigma, 1.0, {1, {}});
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto ref = mean_in_order(order);
    for (std::size_t k = 0; k < ref.size(); k += 97)
        CHECK(r.mean_intensity_trace.values[k] == Approx(ref[k]).epsilon(1e-12).margin(1e-300));
}

TEST_CASE("standard error shrinks as 1/sqrt(n)", "[ensemble][montecarlo]")
{
    const auto comb = comb_with_finesse(20);
    const double sigma = 2.0 * comb.mean_spacing();
    const auto small = run_ensemble(comb, {DisorderKind::spacing, 15.0, 125, 1}, sigma, 1.0);
    const auto large = run_ensemble(comb, {DisorderKind::spacing, 15.0, 500, 1}, sigma, 1.0);
    const double ratio = large.std_error / small.std_error;
    CHECK(ratio == Approx(0.5).epsilon(0.3));
}

TEST_CASE("spacing disorder lowers the efficiency at high finesse", "[ensemble][montecarlo]")
{
    const auto comb = comb_with_finesse(100);
    const double sigma = 2.0 * comb.mean_spacing();
    const auto clean = run_ensemble(comb, {DisorderKind::spacing, 0.0, 500, 3}, sigma, 1.0);
    const auto noisy = run_ensemble(comb, {DisorderKind::spacing, 30.0, 500, 3}, sigma, 1.0);
    const double se = std::hypot(clean.std_error, noisy.std_error);
    CHECK(clean.mean_efficiency - noisy.mean_efficiency > 3.0 * se);
}

TEST_CASE("sweep_strength with a single zero strength reproduces the clean efficiency", "[ensemble][sweep]")
{
    const auto base = comb_with_finesse(20);
    const std::vector<double> strengths{0.0};
    const std::vector<double> finesses{20.0, 40.0};
    const auto curves = sweep_strength(base, DisorderKind::spacing, strengths, finesses, 2.0, 1.0, 50, 1);
    REQUIRE(curves.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto comb = comb_with_finesse(finesses[i]);
        const auto clean = run_ensemble(comb, {}, 2.0 * comb.mean_spacing(), 1.0);
        CHECK(curves[i].ordinate.at(0) == Approx(clean.mean_efficiency).epsilon(1e-12));
        CHECK(curves[i].errors.at(0) == 0.0);
        CHECK(*curves[i].find("finesse") == detail::num(finesses[i]));
    }
    CHECK_THROWS_AS(sweep_strength(base, DisorderKind::spacing, std::vector<double>{1.0, 0.5}, finesses, 2.0, 1.0,
                                   5, 1),
                    ValidationError);
}

TEST_CASE("with_finesse scales spacing at fixed width", "[ensemble]")
{
    const auto c = with_finesse(comb_with_finesse(20), 60.0);
    CHECK(finesse(c) == Approx(60.0));
    CHECK(c.mean_spacing() == Approx(60.0 * kGamma));
    CHECK(c[0].width == kGamma);
}

TEST_CASE("unperturbed length sweep is unimodal near the analytic optimum", "[ensemble][sweep]")
{
    const double f = 20.0;
    const auto comb = comb_with_finesse(f);
    const auto lengths = default_length_grid(30.0, f, 24);
    const auto curve = sweep_length(comb, {}, 2.0 * comb.mean_spacing(), lengths);
    curve.validate();
    const auto peak = std::ranges::max_element(curve.ordinate) - curve.ordinate.begin();
    for (std::ptrdiff_t i = 1; i < std::ssize(curve.ordinate); ++i) {
        if (i <= peak)
            CHECK(curve.ordinate[i] > curve.ordinate[i - 1]);
        else
            CHECK(curve.ordinate[i] < curve.ordinate[i - 1]);
    }
    const double analytic_peak = 2.0 * f / 30.0;
    CHECK(curve.abscissa[peak] == Approx(analytic_peak).epsilon(0.35));
}

TEST_CASE("EfficiencyCurve validation", "[ensemble]")
{
    EfficiencyCurve c{{0.0, 1.0}, {0.5, 0.4}, {0.0}, {}};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.errors.push_back(0.0);
    CHECK_NOTHROW(c.validate());
    c.abscissa = {1.0, 1.0};
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("ensemble input validation", "[ensemble][errors]")
{
    const auto comb = comb_with_finesse(20);
    CHECK_THROWS_AS(run_ensemble(comb, {DisorderKind::spacing, 1.0, 0, 1}, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(run_ensemble(comb, {DisorderKind::spacing, -1.0, 1, 1}, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(run_ensemble(uniform_comb(1, 1.0, kGamma, 1.0), {}, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(run_ensemble(uniform_comb(7, 20 * 1e-9, 1e-9, 1.0), {}, 40e-9 * 1e6, 1.0), GridError);
}
