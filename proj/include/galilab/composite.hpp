// composite.hpp — exact propagation of the (N+1)-oscillator composite model.
//
// The composite Hamiltonian is quadratic, H = 1/2 z^T h z + c . z, with z
// the interleaved canonical vector (q0, p0, q1, p1, ...).  Means follow
// dz/dt = A z + b with A = Omega h, b = Omega c; covariances follow
// sigma(t) = S sigma(0) S^T with S = exp(A t).  Propagation goes through
// the matrix exponential of the constant generator (scaling and squaring),
// computed once per (model, step); an independent RK4 integrator of the
// same ODEs is kept as a cross-check.
//
// Batched runs exploit two structural facts: the system-mean response is
// the same 2x(2n) row block of S(t) for every initial condition, and the
// factorized initial covariance is block-diagonal with a diagonal thermal
// bath block.  A whole family of initial conditions then costs one row
// track instead of one dense covariance propagation each.

#pragma once

#include "galilab/types.hpp"

#include <vector>

namespace galilab {

struct CompositeModel {
    SystemParams sys;
    DiscreteBath bath;

    std::size_t n_dof() const { return bath.size() + 1; }

    double total_mass() const {
        double m = sys.mass;
        for (const auto& mode : bath.modes) m += mode.mass;
        return m;
    }

    void validate() const {
        sys.validate();
        bath.validate();
        if (!(total_mass() > sys.mass) && !bath.modes.empty())
            throw std::invalid_argument("CompositeModel: total mass must exceed system mass");
    }
};

// H = 1/2 z^T h z + c . z (+ irrelevant constant).
struct QuadraticForm {
    Mat h;
    Vec c;
};

QuadraticForm build_quadratic_form(const CompositeModel& model);

// A = Omega h (mean-flow generator).
Mat drift_matrix(const CompositeModel& model);

// Factorized initial condition: system factor `sys0` times independent
// thermal bath modes, <q_n^2> = coth(beta w_n/2)/(2 m_n w_n),
// <p_n^2> = (m_n w_n/2) coth(beta w_n/2), zero means.
GaussianState thermal_composite_state(const CompositeModel& model, const GaussianState& sys0);

// Thermal bath covariance diagonal in the interleaved ordering (length 2N).
std::vector<double> bath_thermal_diagonal(const CompositeModel& model);

// One-shot exact evolution by time t (t >= 0).
GaussianState evolve(const CompositeModel& model, const GaussianState& state, double t);

// Fixed-step RK4 integration of the same moment ODEs; cross-check oracle
// for the matrix-exponential route.
GaussianState evolve_rk4(const CompositeModel& model, const GaussianState& state, double t,
                         int steps);

// Partial trace of a Gaussian state = row/column selection of dof 0.
GaussianState reduce_to_system(const GaussianState& state);

// ------------------------------------------------------------ batched runs

struct UniformGrid {
    double dt = 0.0;
    std::size_t steps = 0;

    std::size_t size() const { return steps + 1; }
    double time(std::size_t k) const { return dt * static_cast<double>(k); }
    double t_max() const { return time(steps); }
    std::vector<double> times() const {
        std::vector<double> t(size());
        for (std::size_t k = 0; k < size(); ++k) t[k] = time(k);
        return t;
    }
    void validate() const {
        if (!(dt > 0.0) || steps == 0)
            throw std::invalid_argument("UniformGrid: need dt > 0 and steps >= 1");
    }
};

// Initial data for one member of a batch: full-length mean vector (system
// dof first) and the 2x2 system covariance block.  The bath covariance is
// always the thermal one of the model.
struct CompositeInit {
    Vec mean;
    Mat sys_cov;
};

struct ReducedMomentSeries {
    std::vector<double> times;
    std::vector<double> q, p;            // first moments
    std::vector<double> vqq, vpp, vqp;   // centered second moments
};

struct BatchResult {
    std::vector<double> times;
    std::vector<ReducedMomentSeries> series;       // one per initial condition
    std::vector<Eigen::Matrix2d> sys_response;     // Bs(t_k), system->system mean response
};

// Evolves every initial condition over the grid and returns the reduced
// moments.  `trap_velocity` moves the trap anchor as r0 + v t during the
// run (used by the boost diagnostics, where the anchor co-moves with the
// transformed frame).
BatchResult run_reduced_batch(const CompositeModel& model,
                              const std::vector<CompositeInit>& inits,
                              const UniformGrid& grid, double trap_velocity = 0.0);

// Convenience: composite init from a system Gaussian state (bath means 0),
// optionally displacing every bath coordinate by `bath_shift` (translations
// act on all coordinates).
CompositeInit make_init(const CompositeModel& model, const GaussianState& sys0,
                        double bath_shift = 0.0);

// --------------------------------------------------------------- Noether

enum class NoetherQuantity { BoostCharge, TotalMomentum, Energy };

struct NoetherSeries {
    std::vector<double> times;
    std::vector<double> value;   // Q(t)
    std::vector<double> drift;   // |Q(t) - Q(0)| / scale
    double scale = 0.0;          // max(|Q(0)|, sup_t |Q(t)|)
};

// Conserved-charge drift along an exact trajectory.  BoostCharge and
// TotalMomentum require omega_S = 0: with a lab-anchored trap the full
// model is not translation or boost invariant (the run works in a single
// frame, so only the free-system case conserves them).  Energy is valid
// for any omega_S.  `energy_samples` bounds the dense covariance samples.
NoetherSeries noether_drift(const CompositeModel& model, const GaussianState& composite0,
                            const UniformGrid& grid, NoetherQuantity quantity,
                            std::size_t energy_samples = 48);

}  // namespace galilab
