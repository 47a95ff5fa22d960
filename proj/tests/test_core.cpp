#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "galilab/config.hpp"
#include "galilab/types.hpp"
#include "galilab/units.hpp"

#include <random>

using namespace galilab;

TEST_CASE("symplectic form matches the interleaved ordering") {
    const Mat o1 = symplectic_form(1);
    CHECK(o1(0, 1) == 1.0);
    CHECK(o1(1, 0) == -1.0);
    CHECK(o1(0, 0) == 0.0);

    const Mat o2 = symplectic_form(2);
    CHECK(o2.rows() == 4);
    CHECK(o2(2, 3) == 1.0);
    CHECK(o2(3, 2) == -1.0);
    CHECK(o2(0, 2) == 0.0);

    const Mat o3 = symplectic_form(3);
    CHECK(((o3 * o3) + Mat::Identity(6, 6)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

    for (int d = 1; d <= 8; ++d) {
        const Mat o = symplectic_form(d);
        CHECK((o + o.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK_THROWS(symplectic_form(0));
}

TEST_CASE("GaussianState rejects asymmetric covariance") {
    Vec mean = Vec::Zero(2);
    Mat cov(2, 2);
    cov << 1.0, 0.3, 0.3 + 1e-6, 1.0;
    CHECK_THROWS(GaussianState(mean, cov));
    cov(1, 0) = 0.3;
    CHECK_NOTHROW(GaussianState(mean, cov));
}

TEST_CASE("symplectic eigenvalues and physicality") {
    // vacuum: nu = 1/2
    const GaussianState vac = coherent_state(0.0, 0.0);
    const auto nu = vac.symplectic_eigenvalues();
    REQUIRE(nu.size() >= 1);
    CHECK(nu.front() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(vac.is_physical());
    CHECK(vac.purity() == doctest::Approx(1.0).epsilon(1e-12));

    // squeezing preserves the symplectic eigenvalue
    const GaussianState sq = squeezed_state(0.0, 0.0, 4.0);
    CHECK(sq.symplectic_eigenvalues().front() == doctest::Approx(0.5).epsilon(1e-12));

    // sub-Heisenberg state is unphysical
    Vec mean = Vec::Zero(2);
    Mat cov(2, 2);
    cov << 0.1, 0.0, 0.0, 0.1;
    CHECK_FALSE(GaussianState(mean, cov).is_physical());
}

TEST_CASE("unit round trips are exact to 1e-12") {
    const UnitSystem units(1.4431e-25, 2.0 * M_PI * 1.1e5);  // an atom in a 110 kHz trap
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mag(-8.0, 8.0);
    for (int k = 0; k < 200; ++k) {
        const double v = std::pow(10.0, mag(rng));
        CHECK(units.freq_to_si(units.freq_to_natural(v)) == doctest::Approx(v).epsilon(1e-12));
        CHECK(units.time_to_si(units.time_to_natural(v)) == doctest::Approx(v).epsilon(1e-12));
        CHECK(units.energy_to_si(units.energy_to_natural(v)) == doctest::Approx(v).epsilon(1e-12));
        CHECK(units.temperature_to_si(units.temperature_to_natural(v)) ==
              doctest::Approx(v).epsilon(1e-12));
        CHECK(units.mass_to_si(units.mass_to_natural(v)) == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("config parses sections, rejects unknown keys with line numbers") {
    const std::string text =
        "# a run\n"
        "[system]\n"
        "mass = 1.5\n"
        "omega = 2.0\n"
        "[bath]\n"
        "gamma = 0.05\n"
        "modes = 256\n"
        "gammas = 0.1, 0.2,0.4\n";
    RunConfig cfg = RunConfig::from_string(text, "test.cfg");
    CHECK(cfg.get_double("system", "mass") == 1.5);
    CHECK(cfg.get_double("system", "omega") == 2.0);
    CHECK(cfg.get_int("bath", "modes") == 256);
    CHECK(cfg.get_double("bath", "gamma") == 0.05);
    const auto list = cfg.get_double_list("bath", "gammas");
    REQUIRE(list.size() == 3);
    CHECK(list[1] == 0.2);
    CHECK_NOTHROW(cfg.assert_all_consumed());

    RunConfig cfg2 = RunConfig::from_string(text, "test.cfg");
    cfg2.get_double("system", "mass");
    CHECK_THROWS_WITH_AS(cfg2.assert_all_consumed(),
                         doctest::Contains("unknown keys"), std::runtime_error);

    CHECK_THROWS_WITH_AS(RunConfig::from_string("[s]\nfoo\n", "bad.cfg"),
                         doctest::Contains("bad.cfg:2"), std::runtime_error);
    RunConfig cfg3 = RunConfig::from_string("[s]\nx = abc\n", "bad.cfg");
    CHECK_THROWS_WITH_AS(cfg3.get_double("s", "x"), doctest::Contains("bad.cfg:2"),
                         std::runtime_error);
}

TEST_CASE("config echo is canonical") {
    RunConfig cfg = RunConfig::from_string("[b]\nz = 1\na = 2\n[a]\nk = 3\n");
    const std::string echo = cfg.resolved_echo();
    CHECK(echo.find("[a]") < echo.find("[b]"));
    CHECK(echo.find("a = 2") < echo.find("z = 1"));
}

TEST_CASE("coefficient trace bookkeeping") {
    CoefficientTrace t;
    t.times = {0.0, 0.1, 0.2};
    t.condition = {1.0, 2e8, 3.0};
    CHECK(t.n_flagged() == 1);
    CHECK(t.index_at(0.1) == 1);
    CHECK_THROWS(t.index_at(0.5));
}
