#include "galilab/composite.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

namespace galilab {

namespace {

double coth(double x) {
    if (x > 350.0) return 1.0;
    return 1.0 / std::tanh(x);
}

// Mass-scaled canonical coordinates q~ = sqrt(m) q, p~ = p / sqrt(m): a
// symplectic scaling that removes the huge 1/m entries the high-frequency
// (light) bath modes would otherwise put into the generator.  All internal
// propagation runs in scaled coordinates; inputs and outputs convert at
// the boundary.
Vec mass_scaling(const CompositeModel& model) {
    const std::size_t n = model.n_dof();
    Vec d(2 * n);
    d(0) = std::sqrt(model.sys.mass);
    d(1) = 1.0 / d(0);
    for (std::size_t j = 0; j < model.bath.size(); ++j) {
        const double s = std::sqrt(model.bath.modes[j].mass);
        d(2 * (j + 1)) = s;
        d(2 * (j + 1) + 1) = 1.0 / s;
    }
    return d;
}

// Scaled quadratic form H~ = D^{-1} H D^{-1} built directly: kinetic block
// is the identity, potential entries carry omega^2 scales only.
Mat scaled_form(const CompositeModel& model) {
    const std::size_t n = model.n_dof();
    Mat h = Mat::Zero(2 * n, 2 * n);
    const double ms = model.sys.mass;
    const double ws = model.sys.omega;
    h(1, 1) = 1.0;
    double dress = ms * ws * ws;
    for (std::size_t j = 0; j < model.bath.size(); ++j) {
        const auto& mode = model.bath.modes[j];
        dress += mode.mass * mode.omega * mode.omega;
        h(2 * (j + 1) + 1, 2 * (j + 1) + 1) = 1.0;
        h(2 * (j + 1), 2 * (j + 1)) = mode.omega * mode.omega;
        const double off = -mode.omega * mode.omega * std::sqrt(mode.mass / ms);
        h(0, 2 * (j + 1)) = off;
        h(2 * (j + 1), 0) = off;
    }
    h(0, 0) = dress / ms;
    return h;
}

// Step operator for the scaled affine flow dz~/dt = A~ z~ + b0~ + b1~ t,
// one exponential of the augmented generator.
struct AffineStepper {
    Mat S;
    Vec wt;
    Vec w0;
    bool homogeneous = true;

    Vec apply(const Vec& z, double t_k) const {
        if (homogeneous) return S * z;
        return S * z + wt * t_k + w0;
    }
};

AffineStepper make_stepper(const Mat& a, const Vec& b0, const Vec& b1, double dt) {
    const Eigen::Index n2 = a.rows();
    AffineStepper st;
    st.homogeneous = (b0.cwiseAbs().maxCoeff() == 0.0) && (b1.cwiseAbs().maxCoeff() == 0.0);
    if (st.homogeneous) {
        st.S = (a * dt).exp();
        st.wt = Vec::Zero(n2);
        st.w0 = Vec::Zero(n2);
        return st;
    }
    Mat aug = Mat::Zero(n2 + 2, n2 + 2);
    aug.topLeftCorner(n2, n2) = a;
    aug.col(n2).head(n2) = b1;
    aug.col(n2 + 1).head(n2) = b0;
    aug(n2, n2 + 1) = 1.0;
    const Mat e = (aug * dt).exp();
    st.S = e.topLeftCorner(n2, n2);
    st.wt = e.col(n2).head(n2);
    st.w0 = e.col(n2 + 1).head(n2);
    return st;
}

// scaled linear forcing: b~(t) = D Omega c(t), split as b0 + b1 t
void scaled_forcing(const CompositeModel& model, double trap_velocity, Vec& b0, Vec& b1) {
    const std::size_t n2 = 2 * model.n_dof();
    b0 = Vec::Zero(n2);
    b1 = Vec::Zero(n2);
    const double ms = model.sys.mass;
    const double k = ms * model.sys.omega * model.sys.omega;
    // c(t) has the single entry -k (r0 + v t) on q0; b = Omega c puts +k(...)
    // on p0; scaled by 1 / sqrt(M_S)
    b0(1) = k * model.sys.r0 / std::sqrt(ms);
    b1(1) = k * trap_velocity / std::sqrt(ms);
}

}  // namespace

QuadraticForm build_quadratic_form(const CompositeModel& model) {
    model.validate();
    const std::size_t n = model.n_dof();
    QuadraticForm f;
    f.h = Mat::Zero(2 * n, 2 * n);
    f.c = Vec::Zero(2 * n);

    const double ms = model.sys.mass;
    const double ws = model.sys.omega;

    // kinetic block
    f.h(1, 1) = 1.0 / ms;
    for (std::size_t j = 0; j < model.bath.size(); ++j)
        f.h(2 * (j + 1) + 1, 2 * (j + 1) + 1) = 1.0 / model.bath.modes[j].mass;

    // potential block: trap + interaction (q0 - qn)^2 carries its own
    // counterterm, so the system diagonal keeps the full dressing even at
    // omega_S = 0.
    double dress = ms * ws * ws;
    for (std::size_t j = 0; j < model.bath.size(); ++j) {
        const auto& mode = model.bath.modes[j];
        const double k = mode.mass * mode.omega * mode.omega;
        dress += k;
        f.h(0, 2 * (j + 1)) = -k;
        f.h(2 * (j + 1), 0) = -k;
        f.h(2 * (j + 1), 2 * (j + 1)) = k;
    }
    f.h(0, 0) = dress;

    // linear term from expanding the trap around R0
    f.c(0) = -ms * ws * ws * model.sys.r0;
    return f;
}

Mat drift_matrix(const CompositeModel& model) {
    const QuadraticForm f = build_quadratic_form(model);
    return symplectic_form(static_cast<int>(model.n_dof())) * f.h;
}

std::vector<double> bath_thermal_diagonal(const CompositeModel& model) {
    std::vector<double> diag(2 * model.bath.size());
    for (std::size_t n = 0; n < model.bath.size(); ++n) {
        const auto& m = model.bath.modes[n];
        const double c = coth(0.5 * model.bath.beta * m.omega);
        diag[2 * n] = c / (2.0 * m.mass * m.omega);
        diag[2 * n + 1] = 0.5 * m.mass * m.omega * c;
    }
    return diag;
}

GaussianState thermal_composite_state(const CompositeModel& model, const GaussianState& sys0) {
    model.validate();
    if (sys0.dim() != 1)
        throw std::invalid_argument("thermal_composite_state: system factor must have dim 1");
    if (!(model.bath.beta > 0.0))
        throw std::invalid_argument("thermal_composite_state: beta must be > 0");
    const std::size_t n = model.n_dof();
    Vec mean = Vec::Zero(2 * n);
    mean.head(2) = sys0.mean();
    Mat cov = Mat::Zero(2 * n, 2 * n);
    cov.topLeftCorner(2, 2) = sys0.cov();
    const std::vector<double> diag = bath_thermal_diagonal(model);
    for (std::size_t k = 0; k < diag.size(); ++k) cov(2 + k, 2 + k) = diag[k];
    return GaussianState(std::move(mean), std::move(cov));
}

GaussianState evolve(const CompositeModel& model, const GaussianState& state, double t) {
    model.validate();
    if (state.dim() != static_cast<int>(model.n_dof()))
        throw std::invalid_argument("evolve: state dimension does not match model");
    if (t < 0.0) throw std::invalid_argument("evolve: t must be >= 0");
    if (t == 0.0) return state;

    const Vec d = mass_scaling(model);
    const Mat omega = symplectic_form(static_cast<int>(model.n_dof()));
    const Mat a = omega * scaled_form(model);
    Vec b0, b1;
    scaled_forcing(model, 0.0, b0, b1);
    const AffineStepper st = make_stepper(a, b0, b1, t);

    const Vec z0 = d.asDiagonal() * state.mean();
    const Mat s0 = d.asDiagonal() * state.cov() * d.asDiagonal();
    Vec z1 = st.apply(z0, 0.0);
    Mat s1 = st.S * s0 * st.S.transpose();
    const Vec dinv = d.cwiseInverse();
    Vec mean = dinv.asDiagonal() * z1;
    Mat cov = dinv.asDiagonal() * s1 * dinv.asDiagonal();
    cov = 0.5 * (cov + cov.transpose());
    return GaussianState(std::move(mean), std::move(cov));
}

GaussianState evolve_rk4(const CompositeModel& model, const GaussianState& state, double t,
                         int steps) {
    // deliberately runs in unscaled physical coordinates with the raw
    // quadratic form: an independent route for cross-checking
    model.validate();
    if (steps < 1) throw std::invalid_argument("evolve_rk4: steps must be >= 1");
    const QuadraticForm f = build_quadratic_form(model);
    const Mat omega = symplectic_form(static_cast<int>(model.n_dof()));
    const Mat a = omega * f.h;
    const Vec b = omega * f.c;
    const double h = t / steps;

    Vec z = state.mean();
    Mat s = state.cov();
    auto fz = [&](const Vec& v) -> Vec { return a * v + b; };
    auto fs = [&](const Mat& m) -> Mat { return a * m + m * a.transpose(); };
    for (int k = 0; k < steps; ++k) {
        const Vec k1 = fz(z);
        const Vec k2 = fz(z + 0.5 * h * k1);
        const Vec k3 = fz(z + 0.5 * h * k2);
        const Vec k4 = fz(z + h * k3);
        z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const Mat m1 = fs(s);
        const Mat m2 = fs(s + 0.5 * h * m1);
        const Mat m3 = fs(s + 0.5 * h * m2);
        const Mat m4 = fs(s + h * m3);
        s += (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
    }
    s = 0.5 * (s + s.transpose());
    return GaussianState(std::move(z), std::move(s));
}

GaussianState reduce_to_system(const GaussianState& state) {
    if (state.dim() < 1) throw std::invalid_argument("reduce_to_system: empty state");
    Vec mean = state.mean().head(2);
    Mat cov = state.cov().topLeftCorner(2, 2);
    return GaussianState(std::move(mean), std::move(cov));
}

CompositeInit make_init(const CompositeModel& model, const GaussianState& sys0,
                        double bath_shift) {
    if (sys0.dim() != 1) throw std::invalid_argument("make_init: sys0 must have dim 1");
    CompositeInit init;
    init.mean = Vec::Zero(2 * model.n_dof());
    init.mean.head(2) = sys0.mean();
    for (std::size_t n = 0; n < model.bath.size(); ++n)
        init.mean(2 * (n + 1)) = bath_shift;
    init.sys_cov = sys0.cov();
    return init;
}

BatchResult run_reduced_batch(const CompositeModel& model,
                              const std::vector<CompositeInit>& inits,
                              const UniformGrid& grid, double trap_velocity) {
    model.validate();
    grid.validate();
    if (inits.empty()) throw std::invalid_argument("run_reduced_batch: no initial conditions");
    const std::size_t n = model.n_dof();
    const Eigen::Index n2 = static_cast<Eigen::Index>(2 * n);
    for (const auto& init : inits) {
        if (init.mean.size() != n2)
            throw std::invalid_argument("run_reduced_batch: mean length mismatch");
        if (init.sys_cov.rows() != 2 || init.sys_cov.cols() != 2)
            throw std::invalid_argument("run_reduced_batch: sys_cov must be 2x2");
    }
    const double t_rec = model.bath.recurrence_time();
    if (grid.t_max() >= t_rec)
        throw std::invalid_argument(
            "run_reduced_batch: grid extends to t = " + std::to_string(grid.t_max()) +
            " beyond the recurrence horizon t_rec = " + std::to_string(t_rec));

    const Vec d = mass_scaling(model);
    const Mat a = symplectic_form(static_cast<int>(n)) * scaled_form(model);
    Vec b0, b1;
    scaled_forcing(model, trap_velocity, b0, b1);
    const AffineStepper st = make_stepper(a, b0, b1, grid.dt);

    // scaled thermal bath diagonal: <q~^2> = coth/(2 w), <p~^2> = w coth / 2
    std::vector<double> bath_diag(2 * model.bath.size());
    for (std::size_t j = 0; j < model.bath.size(); ++j) {
        const auto& mode = model.bath.modes[j];
        const double c = coth(0.5 * model.bath.beta * mode.omega);
        bath_diag[2 * j] = c / (2.0 * mode.omega);
        bath_diag[2 * j + 1] = 0.5 * mode.omega * c;
    }

    // scaled initial means and system covariances
    const double rs = std::sqrt(model.sys.mass);
    Eigen::Matrix2d ds;
    ds << rs, 0.0, 0.0, 1.0 / rs;
    const Eigen::Matrix2d ds_inv = ds.inverse();
    std::vector<Vec> means(inits.size());
    std::vector<Eigen::Matrix2d> sys_covs(inits.size());
    for (std::size_t i = 0; i < inits.size(); ++i) {
        means[i] = d.asDiagonal() * inits[i].mean;
        sys_covs[i] = ds * inits[i].sys_cov * ds;
    }

    BatchResult out;
    out.times = grid.times();
    out.sys_response.resize(grid.size());
    out.series.resize(inits.size());
    for (auto& s : out.series) {
        s.times = out.times;
        s.q.resize(grid.size());
        s.p.resize(grid.size());
        s.vqq.resize(grid.size());
        s.vpp.resize(grid.size());
        s.vqp.resize(grid.size());
    }

    Mat b_rows = Mat::Zero(2, n2);
    b_rows(0, 0) = 1.0;
    b_rows(1, 1) = 1.0;
    Vec z_part = Vec::Zero(n2);

    Mat b_next(2, n2);
    for (std::size_t k = 0; k <= grid.steps; ++k) {
        const Eigen::Matrix2d bs = b_rows.block<2, 2>(0, 0);
        out.sys_response[k] = ds_inv * bs * ds;  // unscaled response block

        Eigen::Matrix2d dcov = Eigen::Matrix2d::Zero();
        for (Eigen::Index j = 2; j < n2; ++j) {
            const double w = bath_diag[static_cast<std::size_t>(j - 2)];
            const double r0j = b_rows(0, j), r1j = b_rows(1, j);
            dcov(0, 0) += w * r0j * r0j;
            dcov(0, 1) += w * r0j * r1j;
            dcov(1, 1) += w * r1j * r1j;
        }
        dcov(1, 0) = dcov(0, 1);

        for (std::size_t i = 0; i < inits.size(); ++i) {
            auto& s = out.series[i];
            const double mq = b_rows.row(0).dot(means[i]) + z_part(0);
            const double mp = b_rows.row(1).dot(means[i]) + z_part(1);
            const Eigen::Matrix2d v =
                ds_inv * (bs * sys_covs[i] * bs.transpose() + dcov) * ds_inv;
            s.q[k] = mq / rs;
            s.p[k] = mp * rs;
            s.vqq[k] = v(0, 0);
            s.vpp[k] = v(1, 1);
            s.vqp[k] = 0.5 * (v(0, 1) + v(1, 0));
        }

        if (k < grid.steps) {
            b_next.noalias() = b_rows * st.S;
            b_rows.swap(b_next);
            if (!st.homogeneous) z_part = st.apply(z_part, grid.time(k));
        }
    }
    return out;
}

NoetherSeries noether_drift(const CompositeModel& model, const GaussianState& composite0,
                            const UniformGrid& grid, NoetherQuantity quantity,
                            std::size_t energy_samples) {
    model.validate();
    grid.validate();
    if (composite0.dim() != static_cast<int>(model.n_dof()))
        throw std::invalid_argument("noether_drift: state dimension does not match model");
    if (quantity != NoetherQuantity::Energy && model.sys.omega != 0.0)
        throw std::invalid_argument(
            "noether_drift: boost-charge and total-momentum conservation hold only for "
            "omega_S = 0; a lab-anchored trap breaks translation and boost symmetry of the "
            "full model unless the anchor co-transforms, and the run works in a single frame");

    const std::size_t n = model.n_dof();
    const Vec d = mass_scaling(model);
    const Mat ht = scaled_form(model);
    const Mat a = symplectic_form(static_cast<int>(n)) * ht;
    Vec b0, b1;
    scaled_forcing(model, 0.0, b0, b1);

    // scaled-coordinate weights: P_tot = sum sqrt(m_j) p~_j,
    // sum m_j q_j = sum sqrt(m_j) q~_j
    std::vector<double> root_m(n);
    root_m[0] = std::sqrt(model.sys.mass);
    for (std::size_t j = 0; j < model.bath.size(); ++j)
        root_m[j + 1] = std::sqrt(model.bath.modes[j].mass);

    const Vec z0 = d.asDiagonal() * composite0.mean();
    const Mat s0 = d.asDiagonal() * composite0.cov() * d.asDiagonal();

    NoetherSeries out;

    if (quantity == NoetherQuantity::Energy) {
        const std::size_t n_samp = std::max<std::size_t>(2, std::min(energy_samples, grid.steps));
        const double stride_t = grid.t_max() / static_cast<double>(n_samp);
        const AffineStepper st = make_stepper(a, b0, b1, stride_t);
        // scaled linear coefficient: c~ = D^{-1} c
        Vec ct = Vec::Zero(2 * n);
        ct(0) = -model.sys.mass * model.sys.omega * model.sys.omega * model.sys.r0 /
                std::sqrt(model.sys.mass);
        Vec z = z0;
        Mat big_s = Mat::Identity(2 * n, 2 * n);
        out.times.resize(n_samp + 1);
        out.value.resize(n_samp + 1);
        for (std::size_t k = 0; k <= n_samp; ++k) {
            out.times[k] = stride_t * static_cast<double>(k);
            const Mat sigma = big_s * s0 * big_s.transpose();
            const double e =
                0.5 * ht.cwiseProduct(sigma).sum() + 0.5 * z.dot(ht * z) + ct.dot(z);
            out.value[k] = e;
            if (k < n_samp) {
                z = st.apply(z, out.times[k]);
                big_s = st.S * big_s;
            }
        }
    } else {
        const AffineStepper st = make_stepper(a, b0, b1, grid.dt);
        Vec z = z0;
        out.times = grid.times();
        out.value.resize(grid.size());
        for (std::size_t k = 0; k <= grid.steps; ++k) {
            double ptot = 0.0;
            for (std::size_t j = 0; j < n; ++j) ptot += root_m[j] * z(2 * j + 1);
            if (quantity == NoetherQuantity::TotalMomentum) {
                out.value[k] = ptot;
            } else {
                double g = -ptot * grid.time(k);
                for (std::size_t j = 0; j < n; ++j) g += root_m[j] * z(2 * j);
                out.value[k] = g;
            }
            if (k < grid.steps) z = st.apply(z, grid.time(k));
        }
    }

    double scale = std::abs(out.value.front());
    for (double v : out.value) scale = std::max(scale, std::abs(v));
    scale = std::max(scale, 1e-300);
    out.scale = scale;
    out.drift.resize(out.value.size());
    for (std::size_t k = 0; k < out.value.size(); ++k)
        out.drift[k] = std::abs(out.value[k] - out.value.front()) / scale;
    return out;
}

}  // namespace galilab
