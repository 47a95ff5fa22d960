// symmetry.hpp — Galilean group action on reduced states and covariance
// defects of the reduced dynamics.
//
// Conventions: a Translation(a) sends <R> to <R> - a and the trap anchor
// R0 to R0 - a.  A Boost(u) sends <R> to <R> - u t, <P> to <P> - M_S u,
// and the anchor to R0 - u t (the anchor co-moves with the frame).  The
// initial bath thermal state is never transformed by a boost: it is the
// lab-frame stationary state, which is exactly what singles out the lab
// frame.  Translations act on all coordinates, bath included.
//
// Boost defect.  Let U be the lab run and B(t) the boost image of its
// reduced trajectory.  B is compared against the boosted-frame evolution
// through the same state: at each time t the run A_t of the moving-trap
// model whose reduced state at t equals B(t).  All such runs differ from
// the one-shot boosted run A0 only in initial system means, so their
// momentum derivative follows from A0 and the system mean-response block
// by linear algebra; no per-time re-propagation is needed.  The raw
// difference d<P>_A0/dt - d<P>_B/dt equals the defect only at early times
// (the accumulated A0-B state difference feeds back through the harmonic
// force); the re-anchored form removes that feedback exactly and is the
// quantity the dissipative coefficient controls at all times.

#pragma once

#include "galilab/composite.hpp"
#include "galilab/hpz.hpp"
#include "galilab/types.hpp"

#include <string>
#include <vector>

namespace galilab {

// ------------------------------------------------------------ group action

struct GroupElement {
    enum class Kind { Translation, Boost, TimeShift };
    Kind kind = Kind::Translation;
    double parameter = 0.0;  // a, u, or tau

    static GroupElement translation(double a) { return {Kind::Translation, a}; }
    static GroupElement boost(double u) { return {Kind::Boost, u}; }
    static GroupElement time_shift(double tau) { return {Kind::TimeShift, tau}; }
};

struct TransformedState {
    GaussianState state;
    double r0 = 0.0;
};

// Applies a group element to a reduced (dim-1) state at time t, co-moving
// the trap anchor where required.  Covariances are untouched (c-number
// shifts).  TimeShift is the identity on the state; it shifts the clock.
TransformedState apply_element(const GroupElement& g, const GaussianState& state,
                               const SystemParams& sys, double r0, double t);

// --------------------------------------------------------------- defects

struct DefectSeries {
    std::vector<double> times;
    std::vector<double> defect;
};

// Distance between [full model evolved from the translated configuration
// (system and bath shifted by -a, anchor at r0 - a), reduced] and the
// Translation(a) image of the untranslated reduced evolution.  Distance is
// the max of mean and covariance sup-norm differences (absolute, natural
// units).  Exact covariance: expected < 1e-9 at every time.
DefectSeries translation_defect(const CompositeModel& model, const GaussianState& sys0,
                                double a, const UniformGrid& grid);

// Generator mismatch under a clock shift: at each t the moment flow of the
// extracted law at t is compared with the law at t + tau, evaluated on the
// actual trajectory.  Each component is normalized by its own sup over the
// run, and the series reports the component max.  Nonzero during the bath
// transient, negligible once the coefficients plateau.
DefectSeries time_shift_defect(const CompositeModel& model, const GaussianState& sys0,
                               double tau, const UniformGrid& grid,
                               const CoefficientTrace& trace);

struct BoostDefectReport {
    double u = 0.0;
    std::vector<double> times;
    std::vector<double> measured_defect;    // re-anchored d<P>/dt discrepancy
    std::vector<double> predicted_defect;   // 2 M_S (Gf)(t) u
    std::vector<double> relative_error;     // |measured - predicted| / |predicted|, NaN outside window
    std::vector<char> in_window;            // (Gf)(t) above 10% of its plateau
    std::vector<double> covariance_defect;  // sup-norm covariance difference, boosted vs image
    std::vector<double> oneshot_diff;       // raw d<P>_A0/dt - d<P>_B/dt (defect only at early t)
    double gamma_f_plateau = 0.0;
};

// Measures the boost covariance defect of the reduced dynamics for boost
// velocity u and compares with the dissipative prediction 2 M_S (Gf) u.
// `trace` must cover the same grid (same spacing, same horizon).
BoostDefectReport boost_defect(const CompositeModel& model, const GaussianState& sys0,
                               double u, const CoefficientTrace& trace,
                               const UniformGrid& grid, double plateau_lo, double plateau_hi);

void write_boost_report_csv(const BoostDefectReport& report, const std::string& path);

// ------------------------------------------------------------------ scan

struct ScanScenario {
    SystemParams sys;
    double omega_c = 10.0;
    double temperature = 10.0;  // k_B T, natural units
    std::size_t n_modes = 256;
    double omega_max_factor = 8.0;  // discretization band = factor * omega_c
    UniformGrid grid;
    double plateau_lo = 6.0, plateau_hi = 14.0;
    GaussianState sys0 = coherent_state(1.0, 0.5);
};

struct ScanRow {
    double gamma = 0.0;
    double u = 0.0;
    double avg_defect_over_u = 0.0;     // plateau-window average of measured/u
    double avg_predicted_over_u = 0.0;
    double gamma_f_plateau = 0.0;
};

struct ScanTable {
    std::vector<ScanRow> rows;
    // log-log slope of the plateau defect versus gamma (first u value)
    double gamma_exponent = 0.0;
    // max |defect(2u)/defect(u) - 2| across gammas, from paired u values
    double linearity_error = 0.0;
};

ScanTable defect_vs_damping_scan(const ScanScenario& scenario,
                                 const std::vector<double>& gammas,
                                 const std::vector<double>& u_values);

void write_scan_csv(const ScanTable& table, const std::string& path);

}  // namespace galilab
