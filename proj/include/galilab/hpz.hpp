// hpz.hpp — reduced-dynamics moment equations and exact coefficient
// extraction from composite-oracle trajectories.
//
// The reduced master equation for this model is time-local with four
// time-dependent coefficients.  At the level of the first and second
// moments it closes to (M = system mass, R0 = trap anchor, C = <{R,P}>/2):
//
//   d<R>   =  <P>/M
//   d<P>   = -2 kappa (<R> - R0) - 2 (Gf) <P>
//   d<R^2> =  2 C / M
//   d<P^2> = -4 kappa (C - R0 <P>) + 2 M (Gh) - 4 (Gf) <P^2>
//   dC     =  <P^2>/M - 2 kappa (<R^2> - R0 <R>) + Gamma - 2 (Gf) C
//
// The numerical factors are fixed by the commutator algebra of the four
// generator lines (derivation in docs/moment_equations.md) and validated
// against the oracle by the closure tests.  Coefficients are obtained by
// least squares from finite-differenced oracle moments of several initial
// states; exactness of the master equation makes the system consistent up
// to stencil error, for any number of states.

#pragma once

#include "galilab/composite.hpp"
#include "galilab/types.hpp"

#include <array>
#include <vector>

namespace galilab {

// Raw (non-centered) moments of the reduced system at one time.
struct MomentVector {
    double t = 0.0;
    double r = 0.0;    // <R>
    double p = 0.0;    // <P>
    double rr = 0.0;   // <R^2>
    double pp = 0.0;   // <P^2>
    double rp = 0.0;   // <{R,P}>/2

    std::array<double, 5> as_array() const { return {r, p, rr, pp, rp}; }

    // centered covariances
    double vqq() const { return rr - r * r; }
    double vpp() const { return pp - p * p; }
    double vqp() const { return rp - r * p; }

    static MomentVector from_state(const GaussianState& sys, double t);
    GaussianState to_state() const;
};

struct HpzCoefficients {
    double kappa = 0.0;
    double gamma = 0.0;     // anomalous-diffusion coefficient
    double gamma_h = 0.0;   // normal-diffusion product (Gamma h)
    double gamma_f = 0.0;   // dissipative product (Gamma f)
};

// Moment flow of the master equation at fixed coefficients.
MomentVector moment_rhs(const HpzCoefficients& c, const MomentVector& m, const SystemParams& sys);

// -------------------------------------------------------------- extraction

struct ExtractionOptions {
    // Initial states used for the least-squares fit; defaults are a
    // q-displaced, a p-displaced, a q-squeezed and a broad thermal-like
    // state, which keep the system well conditioned.
    std::vector<GaussianState> states;
    std::vector<GaussianState> default_states(const SystemParams& sys) const;
};

// Runs the composite oracle for every initial state over the grid,
// finite-differences the reduced moments (4th-order stencil; one-sided at
// the ends) and solves the per-time least-squares system for
// (kappa, Gamma, Gh, Gf).  Condition numbers > 1e8 are flagged in the
// trace, never dropped.
CoefficientTrace extract_coefficients(const CompositeModel& model,
                                      const std::vector<GaussianState>& initial_set,
                                      const UniformGrid& grid);

CoefficientTrace extract_coefficients(const CompositeModel& model, const UniformGrid& grid);

// Extraction from precomputed reduced-moment series (shared stencil with
// the symmetry diagnostics).
CoefficientTrace extract_from_series(const std::vector<ReducedMomentSeries>& series,
                                     const SystemParams& sys);

// 4th-order first-derivative stencil on a uniform grid; one-sided at the
// first/last two points.
double stencil_derivative(const std::vector<double>& y, std::size_t k, double dt);

// --------------------------------------------------------- forward use

// RK4 integration of the moment equations with cubic interpolation of the
// coefficient trace.  The grid must be covered by the trace.
std::vector<MomentVector> propagate_reduced(const CoefficientTrace& trace,
                                            const GaussianState& sys0, const SystemParams& sys,
                                            const UniformGrid& grid);

// ------------------------------------------------------------- summaries

struct MarkovianSummary {
    double kappa_inf = 0.0;
    double gamma_inf = 0.0;
    double gamma_h_inf = 0.0;
    double gamma_f_inf = 0.0;
    double plateau_quality = 0.0;  // max relative in-window variation of (Gf) and kappa
    double window_lo = 0.0, window_hi = 0.0;
};

MarkovianSummary markovian_summary(const CoefficientTrace& trace, double window_lo,
                                   double window_hi);

// Derived metadata: the frequency-renormalization bookkeeping
// delta_Omega^2(t) = (2 kappa(t) - 2 Omega~^2)/M - omega_S^2, with
// Omega~^2 the mode sum of m_n w_n^2.  Reported only; kappa itself is the
// fitted quantity.
std::vector<double> delta_omega_sq(const CoefficientTrace& trace, const CompositeModel& model);

// Writes the trace in the documented CSV schema
// (time,kappa,gamma,gamma_h,gamma_f,condition,residual).
void write_trace_csv(const CoefficientTrace& trace, const std::string& path);

}  // namespace galilab
