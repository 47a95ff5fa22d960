// sln.hpp — stochastic unraveling of the reduced dynamics for arbitrary 1D
// potentials: paired stochastic wavefunctions, ensemble reduction, and the
// anharmonic boost-defect probe.
//
// The reduced state is represented as rho_S(t) = M[ |Psi1(t)><Psi2(t)| ]
// over complex noise pairs (xi, nu) with
//   M[xi(t) xi(t')] = Re L(t-t'),
//   M[xi(t) nu(t')] = 2i Theta(t-t') Im L(t-t'),
//   M[nu(t) nu(t')] = 0,
// where L(s) = (nu_kernel(s) - i eta_kernel(s)) / 2 is the bath force-force
// correlation.  The pair propagates under
//   i dPsi1/dt = [H_s - (xi + nu/2) x] Psi1,
//   i dPsi2/dt = [H_s - (conj(xi) - conj(nu)/2) x] Psi2,
// so the shared xi force enters both branches and the nu term splits in
// sign.  H_s must carry the interaction counterterm (1/2) Omega~^2 x^2 on
// top of the external potential; the counterterm belongs to the bath
// attachment and never co-moves under frame changes.
//
// Noise synthesis: spectral construction on a power-of-two circulant grid
// of at least twice the step count.  Both noises are built from one set of
// iid circular Gaussians with frequency-bin coefficients chosen so the
// prescribed relation (non-conjugate) correlators hold exactly at every
// lag inside the propagation window; the causal cross-correlation enters
// as the transform of the Theta-truncated Im L.  Because only relation
// correlators are prescribed, no positive-definiteness of the embedded
// covariance is required, and the band-limited kernels of a finite mode
// list are admissible as-is.

#pragma once

#include "galilab/bath.hpp"
#include "galilab/types.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace galilab {

using Cplx = std::complex<double>;

struct GridSpec {
    double x_min = -12.0;
    double x_max = 12.0;
    std::size_t n_points = 512;   // power of two
    double dt = 1e-3;
    double t_max = 10.0;

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_max / dt)); }
    double dx() const { return (x_max - x_min) / static_cast<double>(n_points); }
    double x(std::size_t j) const { return x_min + dx() * static_cast<double>(j); }

    void validate() const {
        if (!(x_max > x_min)) throw std::invalid_argument("GridSpec: empty box");
        if (n_points < 8 || (n_points & (n_points - 1)) != 0)
            throw std::invalid_argument("GridSpec: n_points must be a power of two >= 8");
        if (!(dt > 0.0) || !(t_max > dt)) throw std::invalid_argument("GridSpec: bad time grid");
    }
};

// One realization of the correlated noise pair, sampled per step.
struct NoisePair {
    std::vector<Cplx> xi;
    std::vector<Cplx> nu;
    std::uint64_t seed = 0;
};

// Precomputed synthesis coefficients for a (kernels, grid) combination.
class NoiseSynth {
  public:
    // `table` must sample the kernels on the uniform lag grid d*dt,
    // d = 0..steps (see sln_kernel_table).
    NoiseSynth(const KernelTable& table, const GridSpec& grid);
    ~NoiseSynth();

    NoiseSynth(const NoiseSynth&) = delete;
    NoiseSynth& operator=(const NoiseSynth&) = delete;

    // Deterministic for fixed (master_seed, index), independent of threads.
    NoisePair generate(std::uint64_t master_seed, std::uint64_t index) const;

    // targets (for the self-test): Re L, Im L at lag d*dt
    double target_re_l(std::size_t lag) const { return re_l_.at(lag); }
    double target_im_l(std::size_t lag) const { return im_l_.at(lag); }
    std::size_t n_steps() const { return n_steps_; }

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::vector<double> re_l_, im_l_;
    std::size_t n_steps_ = 0;
};

// Kernel table on the lag grid required by NoiseSynth (exact mode sums).
KernelTable sln_kernel_table(const DiscreteBath& bath, const GridSpec& grid);

// ------------------------------------------------------------ propagation

// External potential V(x, t); the counterterm is passed separately.
using Potential = std::function<double(double, double)>;

struct PairResult {
    std::vector<double> sample_times;
    // raw pair observables <Psi2| A |Psi1> per sample; tr = <Psi2|Psi1>
    std::vector<Cplx> tr, x, p, xx, pp, xp;
    bool divergent = false;       // norm explosion
    bool touched_boundary = false;  // absorbed mass beyond the 1e-6 budget
    double mask_loss = 0.0;         // norm fraction absorbed at the boundary

    bool excluded() const { return divergent || touched_boundary; }
};

// Strang split-operator propagation of one pair (second order in dt).
// Noise values are treated as constant over each step; trajectories whose
// norm grows beyond 1e3 of the initial are flagged divergent, and
// trajectories whose absorbed boundary mass exceeds 1e-6 of the running
// norm are flagged touched_boundary; both are excluded upstream with a
// counted statistic, so every trajectory that enters an ensemble holds
// the wavefunction-mass budget at all times.  Pass time_dependent = false
// for a static potential so its phase table is built once.
PairResult propagate_pair(const GridSpec& grid, double mass, const Potential& v_ext,
                          double counterterm, const std::vector<Cplx>& psi1_0,
                          const std::vector<Cplx>& psi2_0, const NoisePair& noise,
                          const std::vector<double>& sample_times,
                          bool time_dependent = true);

// Gaussian packet exp(-(x-q0)^2/(4 sx^2) + i p0 (x - q0)), grid-normalized.
std::vector<Cplx> gaussian_packet(const GridSpec& grid, double q0, double p0, double sx2);

// Momentum boost: psi(x) -> psi(x) e^{-i dp x}.
std::vector<Cplx> shift_momentum(const GridSpec& grid, const std::vector<Cplx>& psi, double dp);

// --------------------------------------------------------------- ensemble

struct EnsembleMoments {
    std::vector<double> times;
    std::vector<double> r, p, vqq, vpp, vqp;
    std::vector<double> se_r, se_p, se_vqq, se_vpp, se_vqp;  // jackknife standard errors
    std::vector<double> trace_re, trace_se;                  // Re of the averaged pair trace
    std::size_t n_total = 0;
    std::size_t n_divergent = 0;   // norm explosions plus boundary contacts
    double max_mask_loss = 0.0;    // over included trajectories
    bool reliable = true;  // excluded fraction <= 5%
};

// Moments of the trace-normalized averaged pair with jackknife errors.
// Deterministic for a fixed seed set: per-seed slots, pairwise reduction.
EnsembleMoments ensemble_reduce(const std::vector<PairResult>& results);

// Threaded ensemble driver: propagates `n_traj` pairs with per-index
// deterministic noise and reduces them.  `make_initial` maps a trajectory
// index to its initial pair (usually index-independent).
EnsembleMoments run_ensemble(const GridSpec& grid, double mass, const Potential& v_ext,
                             double counterterm, const std::vector<Cplx>& psi1_0,
                             const std::vector<Cplx>& psi2_0, const NoiseSynth& synth,
                             std::size_t n_traj, std::uint64_t master_seed,
                             const std::vector<double>& sample_times, int threads,
                             bool time_dependent = false);

// ------------------------------------------------------------------ probe

struct ProbeRow {
    double gamma = 0.0;
    double u = 0.0;
    double defect = 0.0;      // fitted d<P>/dt drift difference over the window
    double defect_se = 0.0;   // jackknife
    double oracle_defect = 0.0;  // same estimator on oracle series (harmonic runs; else NaN)
    std::size_t n_used = 0;
};

struct ProbeTable {
    std::vector<ProbeRow> rows;
    double window_lo = 0.0, window_hi = 0.0;
};

struct ProbeConfig {
    GridSpec grid;
    double mass = 1.0;
    Potential v_ext;                 // lab-frame external potential V(x, t)
    double counterterm = 0.0;
    const NoiseSynth* synth = nullptr;  // null => zero noise (gamma = 0 control)
    std::size_t n_traj = 1000;
    std::uint64_t master_seed = 1;
    int threads = 1;
    double window_lo = 1.0, window_hi = 4.0;
    double q0 = 1.0, p0 = 0.0, sx2 = 0.5;
    double gamma_label = 0.0;        // bookkeeping for the table
};

// Boosted-versus-image drift defect with common random numbers: for each
// u the boosted run uses the same noise seeds as the lab run, the external
// potential co-moves as V(x + u t, t), and the defect is the fitted slope
// of <P>_A(t) - (<P>_lab(t) - M u) over the window.
ProbeTable anharmonic_boost_probe(const ProbeConfig& config, const std::vector<double>& u_values);

void write_probe_csv(const ProbeTable& table, const std::string& path);

}  // namespace galilab
