#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "galilab/bath.hpp"
#include "galilab/composite.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace galilab;

namespace {

CompositeModel drude_model(double gamma, double omega_s, std::size_t n_modes,
                           double temperature = 10.0, double omega_c = 10.0, double r0 = 0.0) {
    SpectralDensity d;
    d.family = SpectralDensity::Family::OhmicDrude;
    d.sys_mass = 1.0;
    d.gamma = gamma;
    d.omega_c = omega_c;
    CompositeModel m;
    m.sys = {1.0, omega_s, r0};
    m.bath = discretize_bath(d, gamma > 0.0 ? n_modes : 0, 1.0 / temperature, 8.0 * omega_c);
    return m;
}

}  // namespace

TEST_CASE("quadratic form: bare oscillator") {
    CompositeModel m;
    m.sys = {1.0, 1.0, 0.0};
    const QuadraticForm f = build_quadratic_form(m);
    CHECK(f.h.rows() == 2);
    CHECK(f.h(0, 0) == doctest::Approx(1.0));
    CHECK(f.h(1, 1) == doctest::Approx(1.0));
    CHECK(f.h(0, 1) == 0.0);
    CHECK(f.c.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quadratic form: one free-system mode, hand-expanded") {
    // 1/2 * 1 * 4 * (q0 - q1)^2 -> potential block [[4,-4],[-4,4]]
    CompositeModel m;
    m.sys = {1.0, 0.0, 0.0};
    m.bath.beta = 1.0;
    m.bath.modes = {{1.0, 2.0}};
    const QuadraticForm f = build_quadratic_form(m);
    CHECK(f.h(0, 0) == doctest::Approx(4.0));
    CHECK(f.h(0, 2) == doctest::Approx(-4.0));
    CHECK(f.h(2, 0) == doctest::Approx(-4.0));
    CHECK(f.h(2, 2) == doctest::Approx(4.0));
    CHECK(f.h(1, 1) == doctest::Approx(1.0));
    CHECK(f.h(3, 3) == doctest::Approx(1.0));
}

TEST_CASE("quadratic form: potential row sums vanish for the free system") {
    const CompositeModel m = drude_model(0.1, 0.0, 16);
    const QuadraticForm f = build_quadratic_form(m);
    const std::size_t n = m.n_dof();
    for (std::size_t row = 0; row < n; ++row) {
        double sum = 0.0;
        for (std::size_t col = 0; col < n; ++col) sum += f.h(2 * row, 2 * col);
        CHECK(std::abs(sum) < 1e-12);
    }
    // with a trap, the system row sums to M omega_S^2
    const CompositeModel mt = drude_model(0.1, 1.3, 16);
    const QuadraticForm ft = build_quadratic_form(mt);
    double sum = 0.0;
    for (std::size_t col = 0; col < mt.n_dof(); ++col) sum += ft.h(0, 2 * col);
    CHECK(sum == doctest::Approx(1.3 * 1.3).epsilon(1e-12));
}

TEST_CASE("thermal composite state: ground state and coth anchor") {
    CompositeModel m;
    m.sys = {1.0, 1.0, 0.0};
    m.bath.beta = 1e9;
    m.bath.modes = {{1.0, 1.0}};
    const GaussianState s = thermal_composite_state(m, coherent_state(0.0, 0.0));
    CHECK(s.cov()(2, 2) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(s.cov()(3, 3) == doctest::Approx(0.5).epsilon(1e-9));

    // beta = 1, omega = 2: <q^2> = coth(1)/4
    m.bath.beta = 1.0;
    m.bath.modes = {{1.0, 2.0}};
    const GaussianState s2 = thermal_composite_state(m, coherent_state(0.0, 0.0));
    CHECK(s2.cov()(2, 2) == doctest::Approx(0.3282588213748328).epsilon(1e-12));
    // uncertainty bound: <q^2><p^2> = coth^2(beta w/2)/4 >= 1/4
    CHECK(s2.cov()(2, 2) * s2.cov()(3, 3) >= 0.25);

    m.bath.beta = -1.0;
    CHECK_THROWS(thermal_composite_state(m, coherent_state(0.0, 0.0)));
}

TEST_CASE("evolve: quarter-period rotation of a bare oscillator") {
    CompositeModel m;
    m.sys = {1.0, 1.0, 0.0};
    const GaussianState s0 = coherent_state(1.0, 0.0);
    const GaussianState s1 = evolve(m, s0, 0.5 * M_PI);
    CHECK(s1.mean_q() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s1.mean_p() == doctest::Approx(-1.0).epsilon(1e-12));

    const GaussianState same = evolve(m, s0, 0.0);
    CHECK((same.mean() - s0.mean()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("evolve: trap anchored away from the origin") {
    CompositeModel m;
    m.sys = {1.0, 2.0, 1.5};
    // coherent state at the anchor stays there
    const GaussianState rest = evolve(m, coherent_state(1.5, 0.0, 1.0, 2.0), 0.37);
    CHECK(rest.mean_q() == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(rest.mean_p() == doctest::Approx(0.0).epsilon(1e-10));
    // displaced state oscillates around the anchor
    const GaussianState half = evolve(m, coherent_state(2.5, 0.0, 1.0, 2.0), M_PI / 2.0);
    CHECK(half.mean_q() == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("matrix-exponential propagation agrees with RK4 to 1e-8") {
    const CompositeModel m = drude_model(0.2, 1.0, 8);
    const GaussianState s0 = thermal_composite_state(m, coherent_state(1.0, 0.5));
    const double t = 1.7;
    const GaussianState a = evolve(m, s0, t);
    const GaussianState b = evolve_rk4(m, s0, t, 40000);
    const double cov_scale = std::max(1.0, a.cov().cwiseAbs().maxCoeff());
    CHECK((a.mean() - b.mean()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((a.cov() - b.cov()).cwiseAbs().maxCoeff() / cov_scale < 1e-8);
}

TEST_CASE("propagator is symplectic and has the group property") {
    const CompositeModel m = drude_model(0.1, 1.0, 12);
    const GaussianState s0 = thermal_composite_state(m, coherent_state(1.0, -0.3));

    for (double t : {0.3, 1.1, 4.0}) {
        const GaussianState one = evolve(m, s0, t);
        const GaussianState two = evolve(m, evolve(m, s0, 0.4 * t), 0.6 * t);
        const double cov_scale = std::max(1.0, one.cov().cwiseAbs().maxCoeff());
        CHECK((one.mean() - two.mean()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((one.cov() - two.cov()).cwiseAbs().maxCoeff() / cov_scale < 1e-9);
    }

    // S Omega S^T = Omega, checked on a unit-mass bath where the raw drift
    // matrix is well scaled
    CompositeModel unit;
    unit.sys = {1.0, 1.0, 0.0};
    unit.bath.beta = 1.0;
    for (int k = 1; k <= 12; ++k) unit.bath.modes.push_back({1.0, 0.5 * k});
    const Mat omega = symplectic_form(static_cast<int>(unit.n_dof()));
    const Mat a = drift_matrix(unit);
    for (double t : {0.3, 1.3, 5.0}) {
        const Mat s = (a * t).exp();
        CHECK((s * omega * s.transpose() - omega).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("zero-coupling reduction equals bare evolution to 1e-10") {
    const CompositeModel bare = drude_model(0.0, 1.0, 0);
    CompositeModel with_decoupled = bare;  // no modes at all

    const GaussianState sys0 = squeezed_state(0.7, -0.2, 2.0);
    for (double t : {0.5, 2.0}) {
        const GaussianState red = reduce_to_system(evolve(with_decoupled, sys0, t));
        const GaussianState direct = evolve(bare, sys0, t);
        CHECK((red.mean() - direct.mean()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((red.cov() - direct.cov()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("reduction: product state returns the system factor; physicality holds") {
    const CompositeModel m = drude_model(0.1, 1.0, 8);
    const GaussianState sys0 = coherent_state(0.4, 0.1);
    const GaussianState comp = thermal_composite_state(m, sys0);
    const GaussianState red = reduce_to_system(comp);
    CHECK((red.mean() - sys0.mean()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((red.cov() - sys0.cov()).cwiseAbs().maxCoeff() == 0.0);

    // after evolution the reduced state stays physical and loses purity
    const GaussianState later = reduce_to_system(evolve(m, comp, 1.0));
    CHECK(later.is_physical());
    CHECK(later.purity() <= sys0.purity() + 1e-12);
}

TEST_CASE("composite purity is conserved by unitary evolution") {
    const CompositeModel m = drude_model(0.15, 1.0, 6);
    const GaussianState s0 = thermal_composite_state(m, coherent_state(1.0, 0.0));
    const GaussianState s1 = evolve(m, s0, 2.0);
    CHECK(s1.purity() == doctest::Approx(s0.purity()).epsilon(1e-9));
}

TEST_CASE("batched reduced moments match one-shot evolution") {
    const CompositeModel m = drude_model(0.1, 1.0, 24);
    const GaussianState sys0 = coherent_state(1.0, 0.5);
    UniformGrid grid{0.01, 150};
    const BatchResult batch = run_reduced_batch(m, {make_init(m, sys0)}, grid);
    const auto& s = batch.series.front();

    const GaussianState comp0 = thermal_composite_state(m, sys0);
    for (std::size_t k : {std::size_t(37), std::size_t(150)}) {
        const GaussianState red = reduce_to_system(evolve(m, comp0, grid.time(k)));
        CHECK(s.q[k] == doctest::Approx(red.mean_q()).epsilon(1e-9));
        CHECK(s.p[k] == doctest::Approx(red.mean_p()).epsilon(1e-9));
        CHECK(s.vqq[k] == doctest::Approx(red.cov()(0, 0)).epsilon(1e-9));
        CHECK(s.vpp[k] == doctest::Approx(red.cov()(1, 1)).epsilon(1e-9));
        CHECK(s.vqp[k] == doctest::Approx(red.cov()(0, 1)).epsilon(1e-8));
    }
}

TEST_CASE("batched runs refuse to cross the recurrence horizon") {
    const CompositeModel m = drude_model(0.1, 1.0, 16);  // t_rec = 2 pi / (80/16) ~ 1.26
    UniformGrid grid{0.01, 200};                          // t_max = 2.0 > t_rec
    CHECK_THROWS(run_reduced_batch(m, {make_init(m, coherent_state(0.0, 0.0))}, grid));
}

TEST_CASE("Noether drifts: free system conserves G, P_tot, H") {
    const CompositeModel m = drude_model(0.1, 0.0, 32);
    const GaussianState comp0 = thermal_composite_state(m, coherent_state(1.0, 0.5));
    UniformGrid grid{0.005, 400};  // t_max = 2 < t_rec ~ 2.5

    const NoetherSeries g = noether_drift(m, comp0, grid, NoetherQuantity::BoostCharge);
    const NoetherSeries p = noether_drift(m, comp0, grid, NoetherQuantity::TotalMomentum);
    const NoetherSeries e = noether_drift(m, comp0, grid, NoetherQuantity::Energy, 24);
    for (double d : g.drift) CHECK(d < 1e-9);
    for (double d : p.drift) CHECK(d < 1e-9);
    for (double d : e.drift) CHECK(d < 1e-9);
}

TEST_CASE("Noether: boost charge with a trap is rejected with physics") {
    const CompositeModel m = drude_model(0.1, 1.0, 8);
    const GaussianState comp0 = thermal_composite_state(m, coherent_state(1.0, 0.0));
    UniformGrid grid{0.01, 50};
    CHECK_THROWS_WITH_AS(noether_drift(m, comp0, grid, NoetherQuantity::BoostCharge),
                         doctest::Contains("omega_S = 0"), std::invalid_argument);
    // energy is fine for any omega_S
    CHECK_NOTHROW(noether_drift(m, comp0, grid, NoetherQuantity::Energy, 10));
}

TEST_CASE("composite model bookkeeping") {
    const CompositeModel m = drude_model(0.1, 1.0, 16);
    CHECK(m.total_mass() > m.sys.mass);
    CHECK(m.n_dof() == 17);
}
