// bath.hpp — bath kernels, fluctuation-dissipation checks, figure-of-merit
// formulas, and parametric-driving thresholds.
//
// Kernel conventions (fixed here; downstream uses are ratio- or
// convergence-based so the overall normalization cancels):
//   nu(s)  = int dw I(w) coth(beta w / 2) cos(w s)      (noise kernel)
//   eta(s) = int dw I(w) sin(w s)                        (friction kernel)
// For a DiscreteBath both are exact mode sums with I(w) = sum m_n w_n^3
// delta(w - w_n).  For a continuum density the integrals run over the
// discretization band [0, w_max]; the discrete bath realizes the
// band-limited density, and all comparisons are made against that band.

#pragma once

#include "galilab/types.hpp"
#include "galilab/units.hpp"

#include <string>
#include <vector>

namespace galilab {

// ---------------------------------------------------------------- kernels

struct KernelTable {
    std::vector<double> s;      // lag grid, increasing, s >= 0
    std::vector<double> nu;     // noise kernel
    std::vector<double> eta;    // friction kernel
    std::vector<double> err;    // per-point quadrature error estimate (0 for mode sums)
};

// Exact mode sums.
KernelTable kernels(const DiscreteBath& bath, const std::vector<double>& s_grid);

// Adaptive quadrature over [0, omega_max] (the discretization band).
// Reports the worst panel in the error estimates; throws if the quadrature
// fails to converge.
KernelTable kernels(const SpectralDensity& density, double beta,
                    const std::vector<double>& s_grid, double omega_max);

// ---------------------------------------------------- bath discretization

// Equal-spaced midpoint discretization of a continuum density on
// (0, omega_max]: w_n = (n - 1/2) dw with dw = omega_max / n_modes, and
// masses chosen so each mode carries the integral of I over its bin,
//   m_n w_n^3 = int_bin I(w) dw.
// This preserves the kernel integrals sourcing the reduced-dynamics
// coefficients and gives the recurrence horizon t_rec = 2 pi / dw.
// gamma = 0 yields an empty bath (zero coupling).
DiscreteBath discretize_bath(const SpectralDensity& density, std::size_t n_modes,
                             double beta, double omega_max);

// Relative mismatch between sum m_n w_n^2 and the band-limited integral of
// I(w)/w; the discretization invariant requires < 1e-3.
double frequency_renormalization_error(const DiscreteBath& bath,
                                       const SpectralDensity& density,
                                       double omega_max);

// -------------------------------------------------------------- FDT check

// Mode-by-mode fluctuation-dissipation check of a thermal bath covariance:
// for each mode the empirical coth(beta w/2) inferred from <q^2> and <p^2>
// is compared with the thermodynamic value.  `q_cov`/`p_cov` are the
// per-mode position/momentum variances in the same order as bath.modes.
// Returns the maximum relative violation.
double fdt_check(const DiscreteBath& bath, const std::vector<double>& q_cov,
                 const std::vector<double>& p_cov);

// Convenience overload: builds the thermal covariances itself (tests the
// construction path end to end; any drift shows up as a violation).
double fdt_check(const DiscreteBath& bath);

// Frequency-domain check for a kernel table: windowed cosine/sine
// transforms of nu and eta are compared as a ratio against coth(beta w/2)
// on the given grid.  Accuracy is limited by the finite s-window; this
// route is meant for tabulated/continuum inputs, not tight tolerances.
double fdt_check(const KernelTable& table, double beta, const std::vector<double>& omega_grid);

// ------------------------------------------------------- figure of merit

// Dimensionless boost-violation figure of merit hbar*gamma / (k_B T), SI in.
double fom(double gamma_hz, double temperature_k);

struct PlatformEntry {
    std::string name;
    double temperature_k = 0.0;
    double gamma_hz = 0.0;
    double gamma_lo_hz = 0.0;   // range bounds for the bar
    double gamma_hi_hz = 0.0;
    double temp_lo_k = 0.0;
    double temp_hi_k = 0.0;

    double fom_mid() const { return fom(gamma_hz, temperature_k); }
    double fom_lo() const { return fom(gamma_lo_hz, temp_hi_k); }
    double fom_hi() const { return fom(gamma_hi_hz, temp_lo_k); }
};

struct PlatformRow {
    std::string name;
    double fom_low = 0.0, fom_mid = 0.0, fom_high = 0.0;
    bool capped = false;   // bar capped at fom = 1 (leading-order validity edge)
};

// The two platforms with representative numbers quoted in the survey text;
// other platforms need user-supplied ranges.
std::vector<PlatformEntry> default_platforms();

std::vector<PlatformRow> platform_table(const std::vector<PlatformEntry>& entries);

// Writes fom_table.csv and fom_plot.dat (whitespace-separated plot data:
// name fom_low fom_mid fom_high capped_flag).
void write_platform_files(const std::vector<PlatformRow>& rows,
                          const std::string& csv_path, const std::string& dat_path);

// ------------------------------------------------------------- thresholds

struct DrivingThresholds {
    double mu_boost = 0.0;          // squeezing rate suppressing boost breaking over a cycle
    double mu_entanglement = 0.0;   // entanglement-survival threshold
    double ratio = 0.0;             // mu_entanglement / mu_boost
};

// mu_boost = hbar gamma^2 / (k_B T); mu_entanglement = gamma k_B T / (hbar w);
// their ratio equals (k_B T)^2 / (hbar^2 w gamma) identically.
DrivingThresholds driving_thresholds(double gamma_hz, double temperature_k, double omega_hz);

}  // namespace galilab
