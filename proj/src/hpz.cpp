#include "galilab/hpz.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace galilab {

MomentVector MomentVector::from_state(const GaussianState& sys, double t) {
    if (sys.dim() != 1) throw std::invalid_argument("MomentVector: need a dim-1 state");
    MomentVector m;
    m.t = t;
    m.r = sys.mean_q();
    m.p = sys.mean_p();
    m.rr = sys.cov()(0, 0) + m.r * m.r;
    m.pp = sys.cov()(1, 1) + m.p * m.p;
    m.rp = sys.cov()(0, 1) + m.r * m.p;
    return m;
}

GaussianState MomentVector::to_state() const {
    Vec mean(2);
    mean << r, p;
    Mat cov(2, 2);
    cov << vqq(), vqp(), vqp(), vpp();
    return GaussianState(mean, cov);
}

MomentVector moment_rhs(const HpzCoefficients& c, const MomentVector& m,
                        const SystemParams& sys) {
    const double ms = sys.mass;
    const double r0 = sys.r0;
    MomentVector d;
    d.t = m.t;
    d.r = m.p / ms;
    d.p = -2.0 * c.kappa * (m.r - r0) - 2.0 * c.gamma_f * m.p;
    d.rr = 2.0 * m.rp / ms;
    d.pp = -4.0 * c.kappa * (m.rp - r0 * m.p) + 2.0 * ms * c.gamma_h - 4.0 * c.gamma_f * m.pp;
    d.rp = m.pp / ms - 2.0 * c.kappa * (m.rr - r0 * m.r) + c.gamma - 2.0 * c.gamma_f * m.rp;
    return d;
}

// ------------------------------------------------------------- stencils

double stencil_derivative(const std::vector<double>& y, std::size_t k, double dt) {
    const std::size_t n = y.size();
    if (n < 5) throw std::invalid_argument("stencil_derivative: need at least 5 points");
    if (k >= 2 && k + 2 < n)
        return (-y[k + 2] + 8.0 * y[k + 1] - 8.0 * y[k - 1] + y[k - 2]) / (12.0 * dt);
    if (k < 2)  // forward 5-point, 4th order
        return (-25.0 * y[k] + 48.0 * y[k + 1] - 36.0 * y[k + 2] + 16.0 * y[k + 3] -
                3.0 * y[k + 4]) /
               (12.0 * dt);
    // backward 5-point
    return (25.0 * y[k] - 48.0 * y[k - 1] + 36.0 * y[k - 2] - 16.0 * y[k - 3] +
            3.0 * y[k - 4]) /
           (12.0 * dt);
}

// ------------------------------------------------------------ extraction

std::vector<GaussianState> ExtractionOptions::default_states(const SystemParams& sys) const {
    const double w = sys.omega > 0.0 ? sys.omega : 1.0;
    return {
        coherent_state(2.0, 0.0, sys.mass, w),
        coherent_state(0.0, 2.0 * sys.mass * w, sys.mass, w),
        squeezed_state(0.0, 0.0, 4.0, sys.mass, w),
        thermal_like_state(0.0, 0.0, 2.5, sys.mass, w),
    };
}

CoefficientTrace extract_from_series(const std::vector<ReducedMomentSeries>& series,
                                     const SystemParams& sys) {
    if (series.empty()) throw std::invalid_argument("extract_from_series: no series");
    const std::size_t nt = series.front().times.size();
    if (nt < 5) throw std::invalid_argument("extract_from_series: grid too short");
    const double dt = series.front().times[1] - series.front().times[0];
    const double ms = sys.mass;
    const double r0 = sys.r0;

    // raw moments per state
    struct Raw {
        std::vector<double> r, p, rr, pp, rp;
    };
    std::vector<Raw> raw(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        if (s.times.size() != nt)
            throw std::invalid_argument("extract_from_series: grids differ between states");
        raw[i].r = s.q;
        raw[i].p = s.p;
        raw[i].rr.resize(nt);
        raw[i].pp.resize(nt);
        raw[i].rp.resize(nt);
        for (std::size_t k = 0; k < nt; ++k) {
            raw[i].rr[k] = s.vqq[k] + s.q[k] * s.q[k];
            raw[i].pp[k] = s.vpp[k] + s.p[k] * s.p[k];
            raw[i].rp[k] = s.vqp[k] + s.q[k] * s.p[k];
        }
    }

    CoefficientTrace trace;
    trace.times = series.front().times;
    trace.kappa.resize(nt);
    trace.gamma.resize(nt);
    trace.gamma_h.resize(nt);
    trace.gamma_f.resize(nt);
    trace.condition.resize(nt);
    trace.residual.resize(nt);

    const std::size_t rows = 3 * series.size();
    Mat a(rows, 4);
    Vec b(rows);
    for (std::size_t k = 0; k < nt; ++k) {
        std::size_t row = 0;
        for (std::size_t i = 0; i < series.size(); ++i) {
            const Raw& m = raw[i];
            const double dp = stencil_derivative(m.p, k, dt);
            const double dpp = stencil_derivative(m.pp, k, dt);
            const double drp = stencil_derivative(m.rp, k, dt);
            // d<P> row: -2(r - r0) kappa - 2 p (Gf)
            a(row, 0) = -2.0 * (m.r[k] - r0);
            a(row, 1) = 0.0;
            a(row, 2) = 0.0;
            a(row, 3) = -2.0 * m.p[k];
            b(row) = dp;
            ++row;
            // d<P^2> row: -4(rp - r0 p) kappa + 2 M (Gh) - 4 pp (Gf)
            a(row, 0) = -4.0 * (m.rp[k] - r0 * m.p[k]);
            a(row, 1) = 0.0;
            a(row, 2) = 2.0 * ms;
            a(row, 3) = -4.0 * m.pp[k];
            b(row) = dpp;
            ++row;
            // dC row: -2(rr - r0 r) kappa + Gamma - 2 rp (Gf); <P^2>/M moves left
            a(row, 0) = -2.0 * (m.rr[k] - r0 * m.r[k]);
            a(row, 1) = 1.0;
            a(row, 2) = 0.0;
            a(row, 3) = -2.0 * m.rp[k];
            b(row) = drp - m.pp[k] / ms;
            ++row;
        }
        // column equilibration for a meaningful condition number
        Eigen::Vector4d scale;
        for (int j = 0; j < 4; ++j) {
            const double s = a.col(j).cwiseAbs().maxCoeff();
            scale(j) = s > 0.0 ? s : 1.0;
        }
        Mat a_scaled = a;
        for (int j = 0; j < 4; ++j) a_scaled.col(j) /= scale(j);
        Eigen::JacobiSVD<Mat> svd(a_scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vec sv = svd.singularValues();
        const double cond = sv(0) / std::max(sv(sv.size() - 1), 1e-300);
        const Vec theta = svd.solve(b).cwiseQuotient(scale);
        const double bn = b.norm();
        const double res = (a * theta - b).norm() / (bn > 0.0 ? bn : 1.0);

        trace.kappa[k] = theta(0);
        trace.gamma[k] = theta(1);
        trace.gamma_h[k] = theta(2);
        trace.gamma_f[k] = theta(3);
        trace.condition[k] = cond;
        trace.residual[k] = res;
    }
    return trace;
}

CoefficientTrace extract_coefficients(const CompositeModel& model,
                                      const std::vector<GaussianState>& initial_set,
                                      const UniformGrid& grid) {
    if (initial_set.size() < 2)
        throw std::invalid_argument(
            "extract_coefficients: need >= 2 initial states with independent moments");
    std::vector<CompositeInit> inits;
    inits.reserve(initial_set.size());
    for (const auto& s : initial_set) inits.push_back(make_init(model, s));
    const BatchResult batch = run_reduced_batch(model, inits, grid);
    return extract_from_series(batch.series, model.sys);
}

CoefficientTrace extract_coefficients(const CompositeModel& model, const UniformGrid& grid) {
    ExtractionOptions opt;
    return extract_coefficients(model, opt.default_states(model.sys), grid);
}

// ----------------------------------------------------------- forward use

namespace {

// Catmull-Rom interpolation of a trace column at arbitrary time.
double interp_column(const std::vector<double>& t, const std::vector<double>& y, double x) {
    const std::size_t n = t.size();
    if (x <= t.front()) return y.front();
    if (x >= t.back()) return y.back();
    const double dt = t[1] - t[0];
    const std::size_t k = std::min(
        static_cast<std::size_t>((x - t.front()) / dt), n - 2);
    const double u = (x - t[k]) / dt;
    const double y0 = k > 0 ? y[k - 1] : 2.0 * y[0] - y[1];
    const double y1 = y[k];
    const double y2 = y[k + 1];
    const double y3 = (k + 2 < n) ? y[k + 2] : 2.0 * y[n - 1] - y[n - 2];
    const double a0 = -0.5 * y0 + 1.5 * y1 - 1.5 * y2 + 0.5 * y3;
    const double a1 = y0 - 2.5 * y1 + 2.0 * y2 - 0.5 * y3;
    const double a2 = -0.5 * y0 + 0.5 * y2;
    return ((a0 * u + a1) * u + a2) * u + y1;
}

HpzCoefficients coeffs_at(const CoefficientTrace& trace, double t) {
    HpzCoefficients c;
    c.kappa = interp_column(trace.times, trace.kappa, t);
    c.gamma = interp_column(trace.times, trace.gamma, t);
    c.gamma_h = interp_column(trace.times, trace.gamma_h, t);
    c.gamma_f = interp_column(trace.times, trace.gamma_f, t);
    return c;
}

MomentVector axpy(const MomentVector& m, const MomentVector& d, double h) {
    MomentVector out = m;
    out.r += h * d.r;
    out.p += h * d.p;
    out.rr += h * d.rr;
    out.pp += h * d.pp;
    out.rp += h * d.rp;
    return out;
}

}  // namespace

std::vector<MomentVector> propagate_reduced(const CoefficientTrace& trace,
                                            const GaussianState& sys0, const SystemParams& sys,
                                            const UniformGrid& grid) {
    if (trace.times.empty() || grid.t_max() > trace.times.back() + 1e-12)
        throw std::invalid_argument("propagate_reduced: grid is not covered by the trace");
    std::vector<MomentVector> out(grid.size());
    MomentVector m = MomentVector::from_state(sys0, 0.0);
    out[0] = m;
    const double h = grid.dt;
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double t = grid.time(k);
        const HpzCoefficients c0 = coeffs_at(trace, t);
        const HpzCoefficients ch = coeffs_at(trace, t + 0.5 * h);
        const HpzCoefficients c1 = coeffs_at(trace, t + h);
        const MomentVector k1 = moment_rhs(c0, m, sys);
        const MomentVector k2 = moment_rhs(ch, axpy(m, k1, 0.5 * h), sys);
        const MomentVector k3 = moment_rhs(ch, axpy(m, k2, 0.5 * h), sys);
        const MomentVector k4 = moment_rhs(c1, axpy(m, k3, h), sys);
        MomentVector next = m;
        next.r += (h / 6.0) * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
        next.p += (h / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
        next.rr += (h / 6.0) * (k1.rr + 2.0 * k2.rr + 2.0 * k3.rr + k4.rr);
        next.pp += (h / 6.0) * (k1.pp + 2.0 * k2.pp + 2.0 * k3.pp + k4.pp);
        next.rp += (h / 6.0) * (k1.rp + 2.0 * k2.rp + 2.0 * k3.rp + k4.rp);
        next.t = grid.time(k + 1);
        m = next;
        out[k + 1] = m;
    }
    return out;
}

// ------------------------------------------------------------- summaries

MarkovianSummary markovian_summary(const CoefficientTrace& trace, double window_lo,
                                   double window_hi) {
    if (!(window_lo < window_hi))
        throw std::invalid_argument("markovian_summary: empty window");
    if (window_lo < trace.times.front() || window_hi > trace.times.back())
        throw std::invalid_argument("markovian_summary: window outside trace");
    MarkovianSummary s;
    s.window_lo = window_lo;
    s.window_hi = window_hi;
    double n = 0.0;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (trace.times[k] < window_lo || trace.times[k] > window_hi) continue;
        s.kappa_inf += trace.kappa[k];
        s.gamma_inf += trace.gamma[k];
        s.gamma_h_inf += trace.gamma_h[k];
        s.gamma_f_inf += trace.gamma_f[k];
        n += 1.0;
    }
    if (n == 0.0) throw std::invalid_argument("markovian_summary: no samples in window");
    s.kappa_inf /= n;
    s.gamma_inf /= n;
    s.gamma_h_inf /= n;
    s.gamma_f_inf /= n;

    // plateau quality from the headline coefficients (Gf, kappa); gamma and
    // gamma_h can sit near zero where a relative measure is meaningless
    double q = 0.0;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (trace.times[k] < window_lo || trace.times[k] > window_hi) continue;
        if (s.gamma_f_inf != 0.0)
            q = std::max(q, std::abs(trace.gamma_f[k] - s.gamma_f_inf) / std::abs(s.gamma_f_inf));
        if (s.kappa_inf != 0.0)
            q = std::max(q, std::abs(trace.kappa[k] - s.kappa_inf) / std::abs(s.kappa_inf));
    }
    s.plateau_quality = q;
    return s;
}

std::vector<double> delta_omega_sq(const CoefficientTrace& trace, const CompositeModel& model) {
    const double renorm = model.bath.frequency_renormalization();
    const double ms = model.sys.mass;
    const double ws = model.sys.omega;
    std::vector<double> out(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k)
        out[k] = (2.0 * trace.kappa[k] - 2.0 * renorm) / ms - ws * ws;
    return out;
}

void write_trace_csv(const CoefficientTrace& trace, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("write_trace_csv: cannot open " + path);
    std::fprintf(f, "# reduced-dynamics coefficients, natural units (hbar = k_B = 1)\n");
    std::fprintf(f, "# kappa: harmonic coefficient of (R - R0)^2; gamma: anomalous diffusion;\n");
    std::fprintf(f, "# gamma_h, gamma_f: stored products (Gamma*h), (Gamma*f)\n");
    std::fprintf(f, "# points with condition > %.1e are unreliable (flagged, not dropped)\n",
                 CoefficientTrace::kConditionFlag);
    std::fprintf(f, "time,kappa,gamma,gamma_h,gamma_f,condition,residual\n");
    for (std::size_t k = 0; k < trace.size(); ++k)
        std::fprintf(f, "%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e\n", trace.times[k],
                     trace.kappa[k], trace.gamma[k], trace.gamma_h[k], trace.gamma_f[k],
                     trace.condition[k], trace.residual[k]);
    std::fclose(f);
}

}  // namespace galilab
