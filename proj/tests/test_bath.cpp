#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "galilab/bath.hpp"

#include <cmath>
#include <random>

using namespace galilab;

namespace {

SpectralDensity drude(double gamma, double omega_c = 10.0, double mass = 1.0) {
    SpectralDensity d;
    d.family = SpectralDensity::Family::OhmicDrude;
    d.sys_mass = mass;
    d.gamma = gamma;
    d.omega_c = omega_c;
    return d;
}

}  // namespace

TEST_CASE("single mode kernels reduce to cos and sin") {
    DiscreteBath bath;
    bath.beta = 1e9;  // effectively zero temperature, coth -> 1
    bath.modes = {{1.0, 1.0}};
    std::vector<double> s;
    for (int k = 0; k <= 20; ++k) s.push_back(0.3 * k);
    const KernelTable t = kernels(bath, s);
    for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK(t.nu[k] == doctest::Approx(std::cos(s[k])).epsilon(1e-12));
        CHECK(t.eta[k] == doctest::Approx(std::sin(s[k])).epsilon(1e-12));
    }
    CHECK(t.eta[0] == 0.0);
}

TEST_CASE("Drude friction kernel matches the closed form") {
    // band-limited eta(s) for a wide band approximates M gamma wc^2 e^{-wc s}
    const SpectralDensity d = drude(0.05, 10.0);
    std::vector<double> s = {0.05, 0.1, 0.2, 0.4, 0.8};
    const double wmax = 60.0 * d.omega_c;  // wide band: truncation ringing small
    const KernelTable t = kernels(d, 1.0 / 10.0, s, wmax);
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double exact = d.sys_mass * d.gamma * d.omega_c * d.omega_c *
                             std::exp(-d.omega_c * s[k]);
        CHECK(t.eta[k] == doctest::Approx(exact).epsilon(2e-2));
    }
    // eta'(0) = int I w dw, finite by cutoff; Richardson slope at small s
    const KernelTable t0 = kernels(d, 1.0 / 10.0, {5e-5, 1e-4}, wmax);
    const double slope = (4.0 * t0.eta[0] / 5e-5 - t0.eta[1] / 1e-4) / 3.0;
    const double eta_prime0 = (2.0 * d.sys_mass * d.gamma / M_PI) * d.omega_c * d.omega_c *
                              (wmax - d.omega_c * std::atan(wmax / d.omega_c));
    CHECK(slope == doctest::Approx(eta_prime0).epsilon(1e-6));
}

TEST_CASE("discretization preserves the frequency renormalization to 1e-3") {
    const SpectralDensity d = drude(0.05);
    const double wmax = 8.0 * d.omega_c;
    for (std::size_t n : {128u, 256u, 512u}) {
        const DiscreteBath bath = discretize_bath(d, n, 0.1, wmax);
        REQUIRE(bath.size() == n);
        CHECK(frequency_renormalization_error(bath, d, wmax) < 1e-3);
    }
}

TEST_CASE("discretization recurrence bookkeeping") {
    const SpectralDensity d = drude(0.05);
    const DiscreteBath bath = discretize_bath(d, 256, 0.1, 80.0);
    CHECK(bath.recurrence_time() == doctest::Approx(2.0 * M_PI / (80.0 / 256.0)).epsilon(1e-9));
    // strictly increasing midpoint frequencies
    for (std::size_t k = 1; k < bath.size(); ++k)
        CHECK(bath.modes[k].omega > bath.modes[k - 1].omega);
    // zero coupling gives an empty bath
    CHECK(discretize_bath(drude(0.0), 256, 0.1, 80.0).size() == 0);
}

TEST_CASE("discrete kernels converge to the band-limited continuum") {
    const SpectralDensity d = drude(0.05);
    const double beta = 0.1;
    const double wmax = 80.0;
    std::vector<double> s;
    for (int k = 1; k <= 10; ++k) s.push_back(0.05 * k);
    const KernelTable cont = kernels(d, beta, s, wmax);

    double prev_err = 0.0;
    for (std::size_t n : {64u, 128u, 256u}) {
        const DiscreteBath bath = discretize_bath(d, n, beta, wmax);
        const KernelTable disc = kernels(bath, s);
        double scale = 0.0, err = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) scale = std::max(scale, std::abs(cont.nu[k]));
        for (std::size_t k = 0; k < s.size(); ++k) {
            err = std::max(err, std::abs(disc.nu[k] - cont.nu[k]) / scale);
            err = std::max(err, std::abs(disc.eta[k] - cont.eta[k]) / scale);
        }
        if (prev_err > 0.0) CHECK(err < 0.6 * prev_err);  // at least first order in 1/N
        prev_err = err;
    }
    CHECK(prev_err < 1e-3);
}

TEST_CASE("thermal bath satisfies the FDT by construction; faults are flagged") {
    const DiscreteBath bath = discretize_bath(drude(0.05), 128, 0.1, 80.0);
    CHECK(fdt_check(bath) < 1e-12);

    // beta -> infinity: coth -> 1, ground-state covariances
    DiscreteBath cold = bath;
    cold.beta = 1e9;
    CHECK(fdt_check(cold) < 1e-12);

    // injected fault: momentum variances scaled by 1.1
    std::vector<double> q(bath.size()), p(bath.size());
    for (std::size_t n = 0; n < bath.size(); ++n) {
        const auto& m = bath.modes[n];
        const double c = 1.0 / std::tanh(0.5 * bath.beta * m.omega);
        q[n] = c / (2.0 * m.mass * m.omega);
        p[n] = 0.5 * m.mass * m.omega * c * 1.1;
    }
    const double viol = fdt_check(bath, q, p);
    CHECK(viol == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("figure of merit anchors") {
    CHECK(fom(1e3, 300.0) == doctest::Approx(2.546e-11).epsilon(1e-3));
    CHECK(fom(1e3, 300.0) > 1e-11);
    CHECK(fom(1e3, 300.0) < 1e-10);
    CHECK(fom(1e4, 1e-6) == doctest::Approx(7.638e-2).epsilon(1e-3));
    CHECK(fom(1e4, 1e-6) > 0.03);
    CHECK(fom(1e4, 1e-6) < 0.3);
    CHECK(fom(0.0, 300.0) == 0.0);
}

TEST_CASE("fom is linear in gamma and inverse-linear in T") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> mag(-3.0, 6.0);
    for (int k = 0; k < 100; ++k) {
        const double g = std::pow(10.0, mag(rng));
        const double t = std::pow(10.0, mag(rng) - 3.0);
        const double base = fom(g, t);
        CHECK(fom(2.0 * g, t) == doctest::Approx(2.0 * base).epsilon(1e-12));
        CHECK(fom(g, 2.0 * t) == doctest::Approx(0.5 * base).epsilon(1e-12));
    }
}

TEST_CASE("platform table caps at fom = 1 and handles empty input") {
    CHECK(platform_table({}).empty());

    PlatformEntry hot;
    hot.name = "strong";
    hot.temperature_k = 1e-9;
    hot.gamma_hz = 1e6;  // fom ~ 7.6e3
    hot.gamma_lo_hz = 1e5;
    hot.gamma_hi_hz = 1e7;
    hot.temp_lo_k = 1e-9;
    hot.temp_hi_k = 1e-8;
    const auto rows = platform_table({hot});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].capped);
    CHECK(rows[0].fom_high == 1.0);
    CHECK(rows[0].fom_mid == 1.0);

    // the two default platforms land in their stated decades
    const auto defaults = platform_table(default_platforms());
    REQUIRE(defaults.size() == 2);
    CHECK(defaults[0].fom_mid > 1e-11);
    CHECK(defaults[0].fom_mid < 1e-10);
    CHECK(defaults[1].fom_mid > 0.03);
    CHECK(defaults[1].fom_mid < 0.3);
}

TEST_CASE("driving thresholds satisfy the ratio identity") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> mag(-2.0, 6.0);
    for (int k = 0; k < 100; ++k) {
        const double g = std::pow(10.0, mag(rng));
        const double t = std::pow(10.0, mag(rng) - 4.0);
        const double w = std::pow(10.0, mag(rng));
        const DrivingThresholds th = driving_thresholds(g, t, w);
        const double expected =
            std::pow(kBoltzmannSI * t, 2) / (kHbarSI * kHbarSI * w * g);
        CHECK(th.ratio == doctest::Approx(expected).epsilon(1e-12));
    }
    // cold-atom anchor: hbar (1e4)^2 / (k_B 1e-6) ~ 7.6e2 per second
    CHECK(driving_thresholds(1e4, 1e-6, 2.0 * M_PI * 1e5).mu_boost ==
          doctest::Approx(763.8).epsilon(1e-3));
    // high-T weak-coupling regime: ratio >> 1
    const double w0 = 2.0 * M_PI * 1e6;
    const double t_high = 100.0 * kHbarSI * w0 / kBoltzmannSI;
    const DrivingThresholds th = driving_thresholds(1e-3 * w0, t_high, w0);
    CHECK(th.ratio == doctest::Approx(1e7).epsilon(1e-9));
}
