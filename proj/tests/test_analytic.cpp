#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "iafc/analytic.hpp"

using namespace iafc::analytic;
using Catch::Approx;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
const double kPi = std::numbers::pi;
} // namespace

TEST_CASE("emission_probability", "[analytic]")
{
    const double delta = 2 * kPi * 100.0;
    const std::vector<std::complex<double>> uniform(7, {0.3, 0.0});

    // maximum (sum |c_j|)^2 at the echo time
    CHECK(emission_probability(uniform, 2 * kPi / delta, delta) == Approx(2.1 * 2.1).epsilon(1e-12));
    // alternating sum over j = -3..3 is 1
    CHECK(emission_probability(uniform, kPi / delta, delta) == Approx(0.09).epsilon(1e-12));

    const std::vector<std::complex<double>> single{{0.2, 0.5}};
    for (double t : {0.0, 0.001, 0.37, 12.0}) CHECK(emission_probability(single, t, delta) == Approx(0.29));

    CHECK_THROWS(emission_probability(std::vector<std::complex<double>>{}, 0.0, delta));
}

TEST_CASE("emission_probability is periodic for real uniform coefficients", "[analytic][property]")
{
    const double delta = 3.7;
    const std::vector<std::complex<double>> c(5, {1.0, 0.0});
    for (double t = 0.0; t < 3.0; t += 0.137)
        CHECK(emission_probability(c, t + 2 * kPi / delta, delta) ==
              Approx(emission_probability(c, t, delta)).margin(1e-10));
}

TEST_CASE("eta_forward closed form", "[analytic]")
{
    CHECK(eta_forward({2.0, kInf}) == Approx(4.0 * std::exp(-2.0)).epsilon(1e-15));
    CHECK(eta_forward({0.0, 20.0}) == 0.0);
    CHECK(eta_forward({1.5, 20.0}) == Approx(0.45485989624249068).epsilon(1e-14));
    CHECK(dephasing_factor(20.0) == Approx(0.90601805578892297).epsilon(1e-14));
    CHECK(dephasing_factor(kInf) == 1.0);
    CHECK_THROWS(eta_forward({-1.0, 20.0}));
    CHECK_THROWS(eta_forward({1.0, 0.0}));
}

TEST_CASE("eta_backward closed form", "[analytic]")
{
    CHECK(eta_backward({2.0, kInf}) == Approx(0.74764507241550880).epsilon(1e-14));
    CHECK(eta_backward({0.0, kInf}) == 0.0);
    CHECK(eta_backward({kInf, kInf}) == 1.0);
    CHECK(eta_backward({60.0, 1e9}) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eta_forward peaks at effective depth 2 for every finesse", "[analytic][property]")
{
    for (double f : {5.0, 20.0, 100.0, kInf}) {
        double best_x = 0.0, best = -1.0;
        for (int i = 0; i <= 200000; ++i) {
            const double x = 1e-5 * i;
            const double v = eta_forward({x, f});
            if (v > best) {
                best = v;
                best_x = x;
            }
        }
        CHECK(best_x == Approx(2.0).margin(1e-5));
    }
}

TEST_CASE("efficiencies: bounds and monotonicity", "[analytic][property]")
{
    for (double x = 0.05; x < 10.0; x += 0.25) {
        double prev_f = 0.0, prev_b = 0.0;
        for (double f : {2.0, 5.0, 10.0, 20.0, 50.0, 100.0}) {
            const double ef = eta_forward({x, f}), eb = eta_backward({x, f});
            CHECK(ef > prev_f);
            CHECK(eb > prev_b);
            CHECK(ef <= 1.0);
            CHECK(eb <= 1.0);
            prev_f = ef;
            prev_b = eb;
        }
    }
    double prev = -1.0;
    int turns = 0;
    double prev_f = eta_forward({0.0, 20.0});
    bool rising = true;
    for (double x = 0.01; x < 20.0; x += 0.01) {
        const double eb = eta_backward({x, 20.0});
        CHECK(eb > prev);
        prev = eb;
        const double ef = eta_forward({x, 20.0});
        if (rising && ef < prev_f) {
            rising = false;
            ++turns;
        } else if (!rising && ef > prev_f) {
            ++turns;
        }
        prev_f = ef;
    }
    CHECK(turns == 1);  // unimodal
}
