#include "galilab/bath.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

namespace galilab {

namespace {

double coth(double x) {
    // coth(x) for x > 0; large-x saturation avoids overflow in exp.
    if (x > 350.0) return 1.0;
    return 1.0 / std::tanh(x);
}

// I(w) coth(beta w / 2) with the w -> 0 limit taken analytically; the raw
// product is 0 * inf at the origin.
double noise_weight(const SpectralDensity& density, double beta, double w) {
    const double x = 0.5 * beta * w;
    if (x < 1e-8) {
        const double w_eff = std::max(w, 1e-12);
        return density.value(w_eff) * (2.0 / (beta * w_eff)) * (1.0 + x * x / 3.0);
    }
    return density.value(w) * coth(x);
}

// Adaptive Simpson on [a,b] with absolute tolerance, recursion-depth cap.
struct SimpsonResult {
    double value = 0.0;
    double error = 0.0;
};

void adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                      double fa, double fm, double fb, double whole, double tol,
                      int depth, SimpsonResult& out) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        out.value += left + right + delta / 15.0;
        out.error += std::abs(delta) / 15.0;
        return;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, out);
    adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out);
}

SimpsonResult integrate(const std::function<double(double)>& f, double a, double b,
                        double tol, int panels) {
    SimpsonResult total;
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const double x0 = a + k * h;
        const double x1 = x0 + h;
        const double xm = 0.5 * (x0 + x1);
        const double f0 = f(x0), f1 = f(x1), fm = f(xm);
        const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        SimpsonResult part;
        adaptive_simpson(f, x0, x1, f0, fm, f1, whole, tol / panels, 28, part);
        total.value += part.value;
        total.error += part.error;
    }
    return total;
}

}  // namespace

// ---------------------------------------------------------------- kernels

KernelTable kernels(const DiscreteBath& bath, const std::vector<double>& s_grid) {
    bath.validate();
    if (bath.modes.empty())
        throw std::invalid_argument("kernels: empty bath has no kernel (zero coupling)");
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
        if (s_grid[k] < 0.0) throw std::invalid_argument("kernels: s_grid must be >= 0");
        if (k > 0 && s_grid[k] <= s_grid[k - 1])
            throw std::invalid_argument("kernels: s_grid must increase");
    }
    KernelTable table;
    table.s = s_grid;
    table.nu.resize(s_grid.size());
    table.eta.resize(s_grid.size());
    table.err.assign(s_grid.size(), 0.0);
    std::vector<double> weight(bath.modes.size()), cth(bath.modes.size());
    for (std::size_t n = 0; n < bath.modes.size(); ++n) {
        const auto& m = bath.modes[n];
        weight[n] = m.mass * m.omega * m.omega * m.omega;
        cth[n] = coth(0.5 * bath.beta * m.omega);
    }
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
        double nu = 0.0, eta = 0.0;
        for (std::size_t n = 0; n < bath.modes.size(); ++n) {
            const double ws = bath.modes[n].omega * s_grid[k];
            nu += weight[n] * cth[n] * std::cos(ws);
            eta += weight[n] * std::sin(ws);
        }
        table.nu[k] = nu;
        table.eta[k] = eta;
    }
    return table;
}

KernelTable kernels(const SpectralDensity& density, double beta,
                    const std::vector<double>& s_grid, double omega_max) {
    density.validate();
    if (!(beta > 0.0)) throw std::invalid_argument("kernels: beta must be > 0");
    if (!(omega_max > 0.0)) throw std::invalid_argument("kernels: omega_max must be > 0");
    KernelTable table;
    table.s = s_grid;
    table.nu.resize(s_grid.size());
    table.eta.resize(s_grid.size());
    table.err.resize(s_grid.size());
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
        const double s = s_grid[k];
        if (s < 0.0) throw std::invalid_argument("kernels: s_grid must be >= 0");
        // panel count tracks the oscillation so each panel sees < ~1 period
        const int panels = std::max(16, static_cast<int>(omega_max * s / 3.0) + 1);
        auto fn = [&](double w) { return noise_weight(density, beta, w) * std::cos(w * s); };
        auto fe = [&](double w) { return density.value(w) * std::sin(w * s); };
        const SimpsonResult rn = integrate(fn, 0.0, omega_max, 1e-11, panels);
        const SimpsonResult re = integrate(fe, 0.0, omega_max, 1e-11, panels);
        const double scale = std::max(1.0, std::abs(rn.value));
        if (rn.error > 1e-6 * scale || re.error > 1e-6 * scale)
            throw std::runtime_error("kernels: quadrature failed to converge at s = " +
                                     std::to_string(s) + " (worst panel error " +
                                     std::to_string(std::max(rn.error, re.error)) + ")");
        table.nu[k] = rn.value;
        table.eta[k] = re.value;
        table.err[k] = std::max(rn.error, re.error);
    }
    return table;
}

// ---------------------------------------------------- bath discretization

DiscreteBath discretize_bath(const SpectralDensity& density, std::size_t n_modes,
                             double beta, double omega_max) {
    density.validate();
    if (!(beta > 0.0)) throw std::invalid_argument("discretize_bath: beta must be > 0");
    DiscreteBath bath;
    bath.beta = beta;
    if (density.family == SpectralDensity::Family::OhmicDrude && density.gamma == 0.0)
        return bath;  // zero coupling: empty bath
    if (n_modes == 0) return bath;
    if (!(omega_max > 0.0)) throw std::invalid_argument("discretize_bath: omega_max must be > 0");
    const double dw = omega_max / static_cast<double>(n_modes);
    bath.modes.reserve(n_modes);
    for (std::size_t n = 0; n < n_modes; ++n) {
        const double lo = n * dw;
        const double hi = lo + dw;
        const double wn = 0.5 * (lo + hi);
        const SimpsonResult bin =
            integrate([&](double w) { return density.value(w); }, lo, hi, 1e-13, 4);
        const double mass = bin.value / (wn * wn * wn);
        if (!(mass > 0.0))
            throw std::runtime_error("discretize_bath: empty spectral bin at w = " +
                                     std::to_string(wn));
        bath.modes.push_back({mass, wn});
    }
    bath.validate();
    return bath;
}

double frequency_renormalization_error(const DiscreteBath& bath,
                                       const SpectralDensity& density,
                                       double omega_max) {
    const SimpsonResult target = integrate(
        [&](double w) { return w > 0.0 ? density.value(w) / w : density.value(1e-14) / 1e-14; },
        0.0, omega_max, 1e-13, 16);
    if (target.value == 0.0) return bath.modes.empty() ? 0.0 : 1.0;
    return std::abs(bath.frequency_renormalization() - target.value) / std::abs(target.value);
}

// -------------------------------------------------------------- FDT check

double fdt_check(const DiscreteBath& bath, const std::vector<double>& q_cov,
                 const std::vector<double>& p_cov) {
    bath.validate();
    if (q_cov.size() != bath.size() || p_cov.size() != bath.size())
        throw std::invalid_argument("fdt_check: covariance lists must match mode count");
    double worst = 0.0;
    for (std::size_t n = 0; n < bath.size(); ++n) {
        const auto& m = bath.modes[n];
        const double target = coth(0.5 * bath.beta * m.omega);
        const double from_q = 2.0 * m.mass * m.omega * q_cov[n];
        const double from_p = 2.0 * p_cov[n] / (m.mass * m.omega);
        worst = std::max(worst, std::abs(from_q / target - 1.0));
        worst = std::max(worst, std::abs(from_p / target - 1.0));
    }
    return worst;
}

double fdt_check(const DiscreteBath& bath) {
    std::vector<double> q(bath.size()), p(bath.size());
    for (std::size_t n = 0; n < bath.size(); ++n) {
        const auto& m = bath.modes[n];
        const double c = coth(0.5 * bath.beta * m.omega);
        q[n] = c / (2.0 * m.mass * m.omega);
        p[n] = 0.5 * m.mass * m.omega * c;
    }
    return fdt_check(bath, q, p);
}

double fdt_check(const KernelTable& table, double beta, const std::vector<double>& omega_grid) {
    if (table.s.size() < 4) throw std::invalid_argument("fdt_check: kernel table too short");
    double worst = 0.0;
    // trapezoid cosine/sine transforms over the finite window
    for (double w : omega_grid) {
        double noise = 0.0, absorb = 0.0;
        for (std::size_t k = 1; k < table.s.size(); ++k) {
            const double ds = table.s[k] - table.s[k - 1];
            noise += 0.5 * ds * (table.nu[k] * std::cos(w * table.s[k]) +
                                 table.nu[k - 1] * std::cos(w * table.s[k - 1]));
            absorb += 0.5 * ds * (table.eta[k] * std::sin(w * table.s[k]) +
                                  table.eta[k - 1] * std::sin(w * table.s[k - 1]));
        }
        if (absorb == 0.0) continue;
        const double target = coth(0.5 * beta * w);
        worst = std::max(worst, std::abs(noise / absorb - target) / target);
    }
    return worst;
}

// ------------------------------------------------------- figure of merit

double fom(double gamma_hz, double temperature_k) {
    if (gamma_hz < 0.0 || !(temperature_k > 0.0))
        throw std::invalid_argument("fom: need gamma >= 0 and T > 0");
    return kHbarSI * gamma_hz / (kBoltzmannSI * temperature_k);
}

std::vector<PlatformEntry> default_platforms() {
    // Representative values quoted in the survey; decade bars around them.
    PlatformEntry nano;
    nano.name = "levitated_nanoparticle";
    nano.temperature_k = 300.0;
    nano.gamma_hz = 1e3;
    nano.gamma_lo_hz = 1e2;
    nano.gamma_hi_hz = 1e4;
    nano.temp_lo_k = 100.0;
    nano.temp_hi_k = 300.0;

    PlatformEntry cold;
    cold.name = "cold_atoms_dissipative_lattice";
    cold.temperature_k = 1e-6;
    cold.gamma_hz = 1e4;
    cold.gamma_lo_hz = 1e3;
    cold.gamma_hi_hz = 1e5;
    cold.temp_lo_k = 1e-6;
    cold.temp_hi_k = 1e-5;
    return {nano, cold};
}

std::vector<PlatformRow> platform_table(const std::vector<PlatformEntry>& entries) {
    std::vector<PlatformRow> rows;
    rows.reserve(entries.size());
    for (const auto& e : entries) {
        PlatformRow r;
        r.name = e.name;
        r.fom_low = e.fom_lo();
        r.fom_mid = e.fom_mid();
        r.fom_high = e.fom_hi();
        // cap at 1: beyond it the leading-order expansion does not apply
        if (r.fom_high > 1.0 || r.fom_mid > 1.0) {
            r.capped = true;
            r.fom_high = std::min(r.fom_high, 1.0);
            r.fom_mid = std::min(r.fom_mid, 1.0);
            r.fom_low = std::min(r.fom_low, 1.0);
        }
        rows.push_back(r);
    }
    return rows;
}

void write_platform_files(const std::vector<PlatformRow>& rows,
                          const std::string& csv_path, const std::string& dat_path) {
    std::FILE* csv = std::fopen(csv_path.c_str(), "w");
    if (!csv) throw std::runtime_error("write_platform_files: cannot open " + csv_path);
    std::fprintf(csv, "# boost-violation figure of merit hbar*gamma/(k_B T), dimensionless\n");
    std::fprintf(csv, "name,fom_low,fom_mid,fom_high,capped_flag\n");
    for (const auto& r : rows)
        std::fprintf(csv, "%s,%.16e,%.16e,%.16e,%d\n", r.name.c_str(), r.fom_low, r.fom_mid,
                     r.fom_high, r.capped ? 1 : 0);
    std::fclose(csv);

    std::FILE* dat = std::fopen(dat_path.c_str(), "w");
    if (!dat) throw std::runtime_error("write_platform_files: cannot open " + dat_path);
    std::fprintf(dat, "# name fom_low fom_mid fom_high capped_flag\n");
    for (const auto& r : rows)
        std::fprintf(dat, "%s %.16e %.16e %.16e %d\n", r.name.c_str(), r.fom_low, r.fom_mid,
                     r.fom_high, r.capped ? 1 : 0);
    std::fclose(dat);
}

// ------------------------------------------------------------- thresholds

DrivingThresholds driving_thresholds(double gamma_hz, double temperature_k, double omega_hz) {
    if (!(gamma_hz > 0.0) || !(temperature_k > 0.0) || !(omega_hz > 0.0))
        throw std::invalid_argument("driving_thresholds: inputs must be > 0");
    DrivingThresholds t;
    const double kbt = kBoltzmannSI * temperature_k;
    t.mu_boost = kHbarSI * gamma_hz * gamma_hz / kbt;
    t.mu_entanglement = gamma_hz * kbt / (kHbarSI * omega_hz);
    t.ratio = t.mu_entanglement / t.mu_boost;
    return t;
}

}  // namespace galilab
