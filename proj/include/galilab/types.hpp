// types.hpp — shared domain types and canonical-coordinate bookkeeping.
//
// Conventions fixed here, once, for the whole library:
//   * natural units hbar = k_B = 1 everywhere inside the library; SI enters
//     only at the figure-of-merit boundary (see bath.hpp / units.hpp).
//   * canonical ordering is (q0, p0, q1, p1, ...), interleaved.
//   * Gaussian covariances are symmetrized second moments,
//     cov_qp = <{q,p}>/2 - <q><p>.
//   * HPZ-style coefficient traces store the products (Gamma*h), (Gamma*f)
//     directly, never h or f alone, so the representation stays finite when
//     Gamma(t) crosses zero.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace galilab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Block-diagonal symplectic form for `dim` degrees of freedom in the
// interleaved (q,p) ordering: 2x2 blocks [[0,1],[-1,0]].
inline Mat symplectic_form(int dim) {
    if (dim < 1) throw std::invalid_argument("symplectic_form: dim must be >= 1");
    Mat omega = Mat::Zero(2 * dim, 2 * dim);
    for (int j = 0; j < dim; ++j) {
        omega(2 * j, 2 * j + 1) = 1.0;
        omega(2 * j + 1, 2 * j) = -1.0;
    }
    return omega;
}

// System particle: mass, trap frequency (0 = free particle), trap anchor R0.
struct SystemParams {
    double mass = 1.0;
    double omega = 1.0;   // trap frequency, >= 0
    double r0 = 0.0;      // trap reference position

    void validate() const {
        if (!(mass > 0.0)) throw std::invalid_argument("SystemParams: mass must be > 0");
        if (!(omega >= 0.0)) throw std::invalid_argument("SystemParams: omega must be >= 0");
    }
};

// Continuum bath description. The Ohmic-Drude family realizes
//   I(w) = (2 M_S gamma / pi) * w * w_c^2 / (w^2 + w_c^2),
// normalized so the Markovian decay rate of <P> is gamma (the friction
// kernel integrates to M_S*gamma). `Tabulated` carries a sampled curve.
struct SpectralDensity {
    enum class Family { OhmicDrude, Tabulated };
    Family family = Family::OhmicDrude;

    double sys_mass = 1.0;  // M_S entering the Ohmic-Drude normalization
    double gamma = 0.0;     // momentum-relaxation rate
    double omega_c = 10.0;  // Drude cutoff

    std::vector<double> tab_omega;  // Tabulated support (strictly increasing)
    std::vector<double> tab_value;  // I(w_k) >= 0

    double value(double omega) const {
        if (omega <= 0.0) return 0.0;
        if (family == Family::OhmicDrude) {
            const double wc2 = omega_c * omega_c;
            return (2.0 * sys_mass * gamma / M_PI) * omega * wc2 / (omega * omega + wc2);
        }
        // linear interpolation, zero outside the table
        if (tab_omega.empty() || omega < tab_omega.front() || omega > tab_omega.back())
            return 0.0;
        auto it = std::upper_bound(tab_omega.begin(), tab_omega.end(), omega);
        std::size_t hi = static_cast<std::size_t>(it - tab_omega.begin());
        if (hi == 0) return tab_value.front();
        if (hi >= tab_omega.size()) return tab_value.back();
        const std::size_t lo = hi - 1;
        const double t = (omega - tab_omega[lo]) / (tab_omega[hi] - tab_omega[lo]);
        return (1.0 - t) * tab_value[lo] + t * tab_value[hi];
    }

    void validate() const {
        if (family == Family::OhmicDrude) {
            if (!(sys_mass > 0.0)) throw std::invalid_argument("SpectralDensity: sys_mass must be > 0");
            if (gamma < 0.0) throw std::invalid_argument("SpectralDensity: gamma must be >= 0");
            if (!(omega_c > 0.0)) throw std::invalid_argument("SpectralDensity: omega_c must be > 0");
            return;
        }
        if (tab_omega.size() != tab_value.size())
            throw std::invalid_argument("SpectralDensity: tabulated arrays differ in length");
        for (std::size_t k = 0; k < tab_omega.size(); ++k) {
            if (k > 0 && tab_omega[k] <= tab_omega[k - 1])
                throw std::invalid_argument("SpectralDensity: tabulated support must increase");
            if (tab_value[k] < 0.0)
                throw std::invalid_argument("SpectralDensity: I(w) must be >= 0");
        }
    }
};

// One bath oscillator.
struct BathMode {
    double mass = 1.0;
    double omega = 1.0;
};

// Finite list of oscillator modes realizing a spectral density, plus the
// inverse temperature of the initial bath thermal state.  The recurrence
// horizon 2*pi/(mode spacing) is recorded; diagnostics must stay below it.
struct DiscreteBath {
    std::vector<BathMode> modes;
    double beta = 1.0;

    std::size_t size() const { return modes.size(); }

    // Sum_n m_n w_n^2; the discrete realization of the frequency
    // renormalization integral of I(w)/w over the discretized band.
    double frequency_renormalization() const {
        double s = 0.0;
        for (const auto& m : modes) s += m.mass * m.omega * m.omega;
        return s;
    }

    double recurrence_time() const {
        if (modes.size() < 2) return std::numeric_limits<double>::infinity();
        double dw = std::numeric_limits<double>::infinity();
        for (std::size_t n = 1; n < modes.size(); ++n)
            dw = std::min(dw, modes[n].omega - modes[n - 1].omega);
        return 2.0 * M_PI / dw;
    }

    void validate() const {
        if (!(beta > 0.0)) throw std::invalid_argument("DiscreteBath: beta must be > 0");
        for (std::size_t n = 0; n < modes.size(); ++n) {
            if (!(modes[n].mass > 0.0) || !(modes[n].omega > 0.0))
                throw std::invalid_argument("DiscreteBath: masses and frequencies must be > 0");
            if (n > 0 && !(modes[n].omega > modes[n - 1].omega))
                throw std::invalid_argument("DiscreteBath: frequencies must strictly increase");
        }
    }
};

// Gaussian state over `dim` canonical degrees of freedom: mean vector of
// length 2*dim and symmetric covariance of symmetrized second moments.
class GaussianState {
  public:
    GaussianState(Vec mean, Mat cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
        if (mean_.size() % 2 != 0 || mean_.size() == 0)
            throw std::invalid_argument("GaussianState: mean length must be 2*dim");
        if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size())
            throw std::invalid_argument("GaussianState: cov shape must match mean");
        const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
        const double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-10 * scale)
            throw std::invalid_argument("GaussianState: covariance is not symmetric (asymmetry " +
                                        std::to_string(asym / scale) + " relative)");
        cov_ = 0.5 * (cov_ + cov_.transpose());  // exact symmetrization of roundoff
    }

    int dim() const { return static_cast<int>(mean_.size()) / 2; }
    const Vec& mean() const { return mean_; }
    const Mat& cov() const { return cov_; }

    double mean_q(int j = 0) const { return mean_(2 * j); }
    double mean_p(int j = 0) const { return mean_(2 * j + 1); }

    // Symplectic eigenvalues: moduli of the eigenvalues of i*Omega*cov,
    // each repeated twice; physical states have all of them >= 1/2.
    std::vector<double> symplectic_eigenvalues() const {
        const Mat omega = symplectic_form(dim());
        Eigen::MatrixXcd m = std::complex<double>(0.0, 1.0) * (omega * cov_);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, /*computeEigenvectors=*/false);
        std::vector<double> nu;
        for (int k = 0; k < es.eigenvalues().size(); ++k) {
            const double v = es.eigenvalues()(k).real();
            if (v > 0.0) nu.push_back(v);
        }
        std::sort(nu.begin(), nu.end());
        return nu;
    }

    bool is_physical(double slack = 1e-9) const {
        for (double v : symplectic_eigenvalues())
            if (v < 0.5 - slack) return false;
        return true;
    }

    // 1/sqrt(det(2*cov)); equals 1 for pure states.
    double purity() const {
        const double d = (2.0 * cov_).determinant();
        return 1.0 / std::sqrt(std::max(d, 1e-300));
    }

  private:
    Vec mean_;
    Mat cov_;
};

// Convenience constructors for single-mode system states (natural units,
// vacuum width 1/2 at unit mass and frequency).
inline GaussianState coherent_state(double q, double p, double mass = 1.0, double omega = 1.0) {
    Vec mean(2);
    mean << q, p;
    Mat cov(2, 2);
    cov << 1.0 / (2.0 * mass * omega), 0.0, 0.0, mass * omega / 2.0;
    return GaussianState(mean, cov);
}

inline GaussianState squeezed_state(double q, double p, double squeeze,
                                    double mass = 1.0, double omega = 1.0) {
    Vec mean(2);
    mean << q, p;
    Mat cov(2, 2);
    cov << 1.0 / (2.0 * mass * omega * squeeze), 0.0, 0.0, mass * omega * squeeze / 2.0;
    return GaussianState(mean, cov);
}

inline GaussianState thermal_like_state(double q, double p, double occupation,
                                        double mass = 1.0, double omega = 1.0) {
    Vec mean(2);
    mean << q, p;
    const double w = 2.0 * occupation + 1.0;
    Mat cov(2, 2);
    cov << w / (2.0 * mass * omega), 0.0, 0.0, w * mass * omega / 2.0;
    return GaussianState(mean, cov);
}

// Time series of extracted reduced-dynamics coefficients.  kappa is the
// fitted harmonic coefficient multiplying (R - R0)^2; gamma the anomalous
// (cross-correlation) coefficient; gamma_h and gamma_f the stored products
// for normal diffusion and dissipation.  `condition` and `residual` record
// the per-time least-squares diagnostics; points with condition > 1e8 are
// flagged unreliable (reported, never dropped).
struct CoefficientTrace {
    std::vector<double> times;
    std::vector<double> kappa;
    std::vector<double> gamma;
    std::vector<double> gamma_h;
    std::vector<double> gamma_f;
    std::vector<double> condition;
    std::vector<double> residual;

    static constexpr double kConditionFlag = 1e8;

    std::size_t size() const { return times.size(); }

    std::size_t index_at(double t) const {
        if (times.empty()) throw std::runtime_error("CoefficientTrace: empty trace");
        if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
            throw std::out_of_range("CoefficientTrace: time outside trace");
        auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12);
        return static_cast<std::size_t>(it - times.begin());
    }

    std::size_t n_flagged() const {
        std::size_t n = 0;
        for (double c : condition)
            if (c > kConditionFlag) ++n;
        return n;
    }
};

}  // namespace galilab
