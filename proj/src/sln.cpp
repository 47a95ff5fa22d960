#include "galilab/sln.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace galilab {

namespace {

std::mutex g_fftw_plan_mutex;  // FFTW plan creation is not thread-safe

// fftw_malloc-backed complex array: keeps SIMD alignment for aligned plans
class AlignedArray {
  public:
    explicit AlignedArray(std::size_t n)
        : n_(n), data_(static_cast<Cplx*>(fftw_malloc(sizeof(Cplx) * n))) {
        if (!data_) throw std::bad_alloc();
        std::fill(data_, data_ + n_, Cplx(0.0, 0.0));
    }
    ~AlignedArray() { fftw_free(data_); }
    AlignedArray(const AlignedArray& o) : AlignedArray(o.n_) {
        std::copy(o.data_, o.data_ + n_, data_);
    }
    AlignedArray& operator=(const AlignedArray&) = delete;
    Cplx* data() { return data_; }
    const Cplx* data() const { return data_; }
    Cplx& operator[](std::size_t i) { return data_[i]; }
    const Cplx& operator[](std::size_t i) const { return data_[i]; }
    std::size_t size() const { return n_; }
    void assign(const std::vector<Cplx>& v) { std::copy(v.begin(), v.end(), data_); }
    void assign(const AlignedArray& v) { std::copy(v.data_, v.data_ + n_, data_); }

  private:
    std::size_t n_;
    Cplx* data_;
};

// In-place complex FFT of fixed size; execution on distinct buffers is
// thread-safe.  Buffers must come from AlignedArray.
class Fft {
  public:
    explicit Fft(std::size_t n) : n_(n) {
        AlignedArray tmp(n);
        auto* p = reinterpret_cast<fftw_complex*>(tmp.data());
        std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
        fwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("Fft: plan creation failed");
    }
    ~Fft() {
        std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    void forward(Cplx* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(fwd_, p, p);
    }
    void backward(Cplx* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(bwd_, p, p);
    }
    std::size_t size() const { return n_; }

  private:
    std::size_t n_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

std::size_t next_pow2(std::size_t n) {
    std::size_t g = 1;
    while (g < n) g <<= 1;
    return g;
}

// deterministic pairwise reduction, independent of thread count
Cplx pairwise_sum(const std::vector<Cplx>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        Cplx s = 0.0;
        for (std::size_t k = lo; k < hi; ++k) s += v[k];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

void parallel_for_indexed(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const int nt = std::max(1, threads);
    if (nt == 1) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= n) return;
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

// -------------------------------------------------------- noise synthesis

struct NoiseSynth::Impl {
    std::size_t big_n = 0;                       // circulant length
    std::vector<double> alpha;                   // per-bin z coefficient of xi (real)
    std::vector<double> bcoef;                   // per-bin conj-z coefficient (real, symmetric)
    std::vector<Cplx> delta;                     // per-bin z coefficient of nu
    std::unique_ptr<Fft> fft;
};

KernelTable sln_kernel_table(const DiscreteBath& bath, const GridSpec& grid) {
    grid.validate();
    std::vector<double> lags(grid.steps() + 1);
    for (std::size_t d = 0; d < lags.size(); ++d) lags[d] = grid.dt * static_cast<double>(d);
    return kernels(bath, lags);
}

NoiseSynth::NoiseSynth(const KernelTable& table, const GridSpec& grid)
    : impl_(new Impl) {
    grid.validate();
    const std::size_t steps = grid.steps();
    n_steps_ = steps;
    if (table.s.size() < steps + 1)
        throw std::invalid_argument("NoiseSynth: kernel table must cover all lags 0..steps");
    for (std::size_t d = 0; d + 1 < table.s.size(); ++d) {
        const double ds = table.s[d + 1] - table.s[d];
        if (std::abs(ds - grid.dt) > 1e-9 * grid.dt)
            throw std::invalid_argument("NoiseSynth: kernel lag grid must match dt");
    }
    if (std::abs(table.s.front()) > 1e-12)
        throw std::invalid_argument("NoiseSynth: kernel table must start at lag 0");

    // L(s) = (nu(s) - i eta(s)) / 2
    re_l_.resize(steps + 1);
    im_l_.resize(steps + 1);
    for (std::size_t d = 0; d <= steps; ++d) {
        re_l_[d] = 0.5 * table.nu[d];
        im_l_[d] = -0.5 * table.eta[d];
    }

    const std::size_t big_n = next_pow2(2 * (steps + 1));
    impl_->big_n = big_n;
    impl_->fft.reset(new Fft(big_n));

    // relation targets on the circulant grid; lags beyond the window are
    // free and set to zero (they never enter the used correlators)
    AlignedArray r_wrap(big_n);
    AlignedArray c_causal(big_n);
    r_wrap[0] = re_l_[0];
    for (std::size_t d = 1; d <= steps; ++d) {
        r_wrap[d] = re_l_[d];
        r_wrap[big_n - d] = re_l_[d];
        c_causal[d] = Cplx(0.0, 2.0 * im_l_[d]);
    }

    impl_->fft->forward(r_wrap.data());   // S_hat
    impl_->fft->forward(c_causal.data()); // X

    double worst_imag = 0.0, scale = 0.0;
    for (std::size_t m = 0; m < big_n; ++m) {
        worst_imag = std::max(worst_imag, std::abs(r_wrap[m].imag()));
        scale = std::max(scale, std::abs(r_wrap[m].real()) + std::abs(c_causal[m]));
    }
    if (scale > 0.0 && worst_imag > 1e-8 * scale)
        throw std::runtime_error("NoiseSynth: relation spectrum has a non-real part");

    impl_->alpha.resize(big_n);
    impl_->bcoef.resize(big_n);
    impl_->delta.resize(big_n);
    const double g = static_cast<double>(big_n);
    const double eps = g * (1e-14 * scale + 1e-300);
    for (std::size_t m = 0; m < big_n; ++m) {
        const std::size_t mneg = (big_n - m) % big_n;
        const double s_m = r_wrap[m].real();
        const double budget =
            std::abs(s_m) + 0.5 * (std::abs(c_causal[m]) + std::abs(c_causal[mneg]));
        const double b = std::sqrt(0.5 * g * budget + eps);
        impl_->bcoef[m] = b;
        impl_->alpha[m] = g * s_m / (2.0 * b);
        impl_->delta[m] = g * c_causal[mneg] / b;
    }
    // enforce the symmetry b_{-m} = b_m used by the relation algebra
    for (std::size_t m = 1; m < big_n / 2; ++m) {
        const double b = 0.5 * (impl_->bcoef[m] + impl_->bcoef[big_n - m]);
        impl_->bcoef[m] = impl_->bcoef[big_n - m] = b;
    }
}

NoiseSynth::~NoiseSynth() = default;

NoisePair NoiseSynth::generate(std::uint64_t master_seed, std::uint64_t index) const {
    const std::size_t big_n = impl_->big_n;
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index & 0xffffffffu),
                      static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));

    std::vector<Cplx> z(big_n);
    for (std::size_t m = 0; m < big_n; ++m) z[m] = Cplx(normal(rng), normal(rng));

    AlignedArray xi_hat(big_n), nu_hat(big_n);
    for (std::size_t m = 0; m < big_n; ++m) {
        const std::size_t mneg = (big_n - m) % big_n;
        xi_hat[m] = impl_->alpha[m] * z[m] + impl_->bcoef[m] * std::conj(z[mneg]);
        nu_hat[m] = impl_->delta[m] * z[m];
    }
    impl_->fft->backward(xi_hat.data());
    impl_->fft->backward(nu_hat.data());

    NoisePair pair;
    pair.seed = master_seed ^ index;
    pair.xi.resize(n_steps_);
    pair.nu.resize(n_steps_);
    const double inv = 1.0 / static_cast<double>(big_n);
    for (std::size_t j = 0; j < n_steps_; ++j) {
        pair.xi[j] = xi_hat[j] * inv;
        pair.nu[j] = nu_hat[j] * inv;
    }
    return pair;
}

// ------------------------------------------------------------ propagation

std::vector<Cplx> gaussian_packet(const GridSpec& grid, double q0, double p0, double sx2) {
    grid.validate();
    std::vector<Cplx> psi(grid.n_points);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < grid.n_points; ++j) {
        const double x = grid.x(j);
        const double d = x - q0;
        const Cplx val = std::exp(Cplx(-d * d / (4.0 * sx2), p0 * d));
        psi[j] = val;
        norm2 += std::norm(val);
    }
    norm2 *= grid.dx();
    const double s = 1.0 / std::sqrt(norm2);
    for (auto& v : psi) v *= s;
    return psi;
}

std::vector<Cplx> shift_momentum(const GridSpec& grid, const std::vector<Cplx>& psi, double dp) {
    std::vector<Cplx> out(psi.size());
    for (std::size_t j = 0; j < psi.size(); ++j)
        out[j] = psi[j] * std::exp(Cplx(0.0, -dp * grid.x(j)));
    return out;
}

namespace {

struct Workspace {
    explicit Workspace(std::size_t n) : psi1(n), psi2(n), scratch1(n), scratch2(n) {}
    AlignedArray psi1, psi2, scratch1, scratch2;
    std::vector<double> kvec, khalf_re, khalf_im, kfull_re, kfull_im, mask, xs;
};

void build_workspace(const GridSpec& grid, double mass, Workspace& w) {
    const std::size_t n = grid.n_points;
    const double dx = grid.dx();
    w.kvec.resize(n);
    w.khalf_re.resize(n);
    w.khalf_im.resize(n);
    w.kfull_re.resize(n);
    w.kfull_im.resize(n);
    w.mask.resize(n);
    w.xs.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double m = (j < n / 2) ? static_cast<double>(j)
                                     : static_cast<double>(j) - static_cast<double>(n);
        w.kvec[j] = 2.0 * M_PI * m / (static_cast<double>(n) * dx);
        const double phase_half = -grid.dt * w.kvec[j] * w.kvec[j] / (4.0 * mass);
        const double phase_full = 2.0 * phase_half;
        const double inv = 1.0 / static_cast<double>(n);
        w.khalf_re[j] = std::cos(phase_half) * inv;
        w.khalf_im[j] = std::sin(phase_half) * inv;
        w.kfull_re[j] = std::cos(phase_full) * inv;
        w.kfull_im[j] = std::sin(phase_full) * inv;
        w.xs[j] = grid.x(j);
        // absorbing edges over 10% of the box on each side
        const double width = 0.1 * (grid.x_max - grid.x_min);
        const double d_edge = std::min(w.xs[j] - grid.x_min, grid.x_max - w.xs[j]);
        w.mask[j] = d_edge >= width ? 1.0 : std::pow(std::sin(0.5 * M_PI * d_edge / width), 2);
    }
}

void kinetic_apply(const Fft& fft, AlignedArray& psi, const std::vector<double>& pre,
                   const std::vector<double>& pim) {
    const std::size_t n = psi.size();
    fft.forward(psi.data());
    for (std::size_t j = 0; j < n; ++j) psi[j] *= Cplx(pre[j], pim[j]);
    fft.backward(psi.data());
}

}  // namespace

PairResult propagate_pair(const GridSpec& grid, double mass, const Potential& v_ext,
                          double counterterm, const std::vector<Cplx>& psi1_0,
                          const std::vector<Cplx>& psi2_0, const NoisePair& noise,
                          const std::vector<double>& sample_times, bool time_dependent) {
    grid.validate();
    const std::size_t n = grid.n_points;
    const std::size_t steps = grid.steps();
    if (psi1_0.size() != n || psi2_0.size() != n)
        throw std::invalid_argument("propagate_pair: wavefunction length mismatch");
    if (!noise.xi.empty() && noise.xi.size() < steps)
        throw std::invalid_argument("propagate_pair: noise shorter than the run");

    // map sample times to step indices
    std::vector<std::size_t> sample_steps(sample_times.size());
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        const double k = sample_times[i] / grid.dt;
        const auto ki = static_cast<std::size_t>(std::llround(k));
        if (std::abs(k - static_cast<double>(ki)) > 1e-6 || ki > steps)
            throw std::invalid_argument("propagate_pair: sample times must sit on the step grid");
        sample_steps[i] = ki;
        if (i > 0 && sample_steps[i] <= sample_steps[i - 1])
            throw std::invalid_argument("propagate_pair: sample times must increase");
    }

    Fft fft(n);
    Workspace w(n);
    build_workspace(grid, mass, w);
    w.psi1.assign(psi1_0);
    w.psi2.assign(psi2_0);

    PairResult out;
    out.sample_times = sample_times;
    out.tr.resize(sample_times.size());
    out.x.resize(sample_times.size());
    out.p.resize(sample_times.size());
    out.xx.resize(sample_times.size());
    out.pp.resize(sample_times.size());
    out.xp.resize(sample_times.size());

    const double dx = grid.dx();
    const double norm_cap = 1e6;  // squared-norm explosion threshold (1e3 in amplitude)
    double peak_norm = 1.0;

    auto sample_observables = [&](std::size_t slot) {
        // position-space pieces
        Cplx tr = 0.0, xm = 0.0, xxm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const Cplx w2 = std::conj(w.psi2[j]);
            const Cplx prod = w2 * w.psi1[j];
            tr += prod;
            xm += w.xs[j] * prod;
            xxm += w.xs[j] * w.xs[j] * prod;
        }
        // momentum pieces via spectral derivatives
        w.scratch1.assign(w.psi1);
        fft.forward(w.scratch1.data());
        w.scratch2.assign(w.scratch1);
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            w.scratch1[j] *= w.kvec[j] * inv;                 // p psi1
            w.scratch2[j] *= w.kvec[j] * w.kvec[j] * inv;     // p^2 psi1
        }
        fft.backward(w.scratch1.data());
        fft.backward(w.scratch2.data());
        Cplx pm = 0.0, ppm = 0.0, xp_a = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const Cplx w2 = std::conj(w.psi2[j]);
            pm += w2 * w.scratch1[j];
            ppm += w2 * w.scratch2[j];
            xp_a += w2 * (w.xs[j] * w.scratch1[j]);           // <psi2| x p |psi1>
        }
        // <psi2| p x |psi1> = <p psi2 | x psi1>
        AlignedArray& ppsi2 = w.scratch1;
        ppsi2.assign(w.psi2);
        fft.forward(ppsi2.data());
        for (std::size_t j = 0; j < n; ++j) ppsi2[j] *= w.kvec[j] * inv;
        fft.backward(ppsi2.data());
        Cplx xp_b = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            xp_b += std::conj(ppsi2[j]) * (w.xs[j] * w.psi1[j]);

        out.tr[slot] = tr * dx;
        out.x[slot] = xm * dx;
        out.p[slot] = pm * dx;
        out.xx[slot] = xxm * dx;
        out.pp[slot] = ppm * dx;
        out.xp[slot] = 0.5 * (xp_a + xp_b) * dx;
    };

    std::size_t next_sample = 0;
    while (next_sample < sample_steps.size() && sample_steps[next_sample] == 0) {
        sample_observables(next_sample);
        ++next_sample;
    }

    // potential phase exp(-i dt (V + counterterm)); built once when static
    std::vector<Cplx> vphase(n);
    auto fill_vphase = [&](double t_mid) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = w.xs[i];
            vphase[i] = std::polar(1.0, -grid.dt * (v_ext(x, t_mid) +
                                                    0.5 * counterterm * x * x));
        }
    };
    if (!time_dependent) fill_vphase(0.0);

    std::size_t step = 0;
    while (step < steps && next_sample < sample_steps.size()) {
        const std::size_t seg_end = sample_steps[next_sample];
        // segment [step, seg_end): Strang with merged interior kinetics
        kinetic_apply(fft, w.psi1, w.khalf_re, w.khalf_im);
        kinetic_apply(fft, w.psi2, w.khalf_re, w.khalf_im);
        for (std::size_t j = step; j < seg_end; ++j) {
            const double t_mid = (static_cast<double>(j) + 0.5) * grid.dt;
            if (time_dependent) fill_vphase(t_mid);
            const Cplx xi = noise.xi.empty() ? Cplx(0.0, 0.0) : noise.xi[j];
            const Cplx nu = noise.nu.empty() ? Cplx(0.0, 0.0) : noise.nu[j];
            const Cplx mu1 = xi + 0.5 * nu;
            const Cplx mu2 = std::conj(xi) - 0.5 * std::conj(nu);
            // exp(+i dt mu x_i) along the grid as a geometric recurrence
            const Cplx idt(0.0, grid.dt);
            const Cplx r1 = std::exp(idt * mu1 * dx);
            const Cplx r2 = std::exp(idt * mu2 * dx);
            Cplx f1 = std::exp(idt * mu1 * grid.x_min);
            Cplx f2 = std::exp(idt * mu2 * grid.x_min);
            double n1 = 0.0, n2 = 0.0, n1m = 0.0, n2m = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                w.psi1[i] *= vphase[i] * f1;
                w.psi2[i] *= vphase[i] * f2;
                f1 *= r1;
                f2 *= r2;
                n1 += std::norm(w.psi1[i]);
                n2 += std::norm(w.psi2[i]);
                w.psi1[i] *= w.mask[i];
                w.psi2[i] *= w.mask[i];
                n1m += std::norm(w.psi1[i]);
                n2m += std::norm(w.psi2[i]);
            }
            out.mask_loss += (std::max(n1 - n1m, 0.0) + std::max(n2 - n2m, 0.0)) * dx;
            if (!(n1 * dx < norm_cap) || !(n2 * dx < norm_cap) || !std::isfinite(n1 + n2)) {
                out.divergent = true;
                return out;
            }
            peak_norm = std::max(peak_norm, std::max(n1, n2) * dx);
            if (out.mask_loss > 1e-6 * std::max(1.0, peak_norm)) {
                out.touched_boundary = true;
                return out;
            }
            if (j + 1 < seg_end)
                for (auto* psi : {&w.psi1, &w.psi2})
                    kinetic_apply(fft, *psi, w.kfull_re, w.kfull_im);
        }
        kinetic_apply(fft, w.psi1, w.khalf_re, w.khalf_im);
        kinetic_apply(fft, w.psi2, w.khalf_re, w.khalf_im);
        step = seg_end;
        while (next_sample < sample_steps.size() && sample_steps[next_sample] == step) {
            sample_observables(next_sample);
            ++next_sample;
        }
    }
    return out;
}

// ---------------------------------------------------------------- ensemble

EnsembleMoments ensemble_reduce(const std::vector<PairResult>& results) {
    if (results.size() < 1) throw std::invalid_argument("ensemble_reduce: empty ensemble");
    const std::size_t nt = results.front().sample_times.size();

    EnsembleMoments out;
    out.times = results.front().sample_times;
    out.n_total = results.size();

    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < results.size(); ++k) {
        if (results[k].sample_times.size() != nt)
            throw std::invalid_argument("ensemble_reduce: inconsistent sample grids");
        if (results[k].excluded()) {
            ++out.n_divergent;
            continue;
        }
        out.max_mask_loss = std::max(out.max_mask_loss, results[k].mask_loss);
        keep.push_back(k);
    }
    out.reliable =
        static_cast<double>(out.n_divergent) <= 0.05 * static_cast<double>(out.n_total);
    if (keep.empty()) throw std::runtime_error("ensemble_reduce: all trajectories divergent");
    const std::size_t m = keep.size();

    auto resize_all = [&](auto&... vecs) { (vecs.resize(nt), ...); };
    resize_all(out.r, out.p, out.vqq, out.vpp, out.vqp, out.se_r, out.se_p, out.se_vqq,
               out.se_vpp, out.se_vqp, out.trace_re, out.trace_se);

    std::vector<Cplx> col(m);
    for (std::size_t s = 0; s < nt; ++s) {
        Cplx t_tr, t_x, t_p, t_xx, t_pp, t_xp;
        auto total = [&](auto getter) {
            for (std::size_t i = 0; i < m; ++i) col[i] = getter(results[keep[i]]);
            return pairwise_sum(col, 0, m);
        };
        t_tr = total([s](const PairResult& r) { return r.tr[s]; });
        t_x = total([s](const PairResult& r) { return r.x[s]; });
        t_p = total([s](const PairResult& r) { return r.p[s]; });
        t_xx = total([s](const PairResult& r) { return r.xx[s]; });
        t_pp = total([s](const PairResult& r) { return r.pp[s]; });
        t_xp = total([s](const PairResult& r) { return r.xp[s]; });

        auto derive = [](Cplx tr, Cplx x, Cplx p, Cplx xx, Cplx pp, Cplx xp,
                         std::array<double, 6>& q) {
            const double r = (x / tr).real();
            const double pm = (p / tr).real();
            q = {r,
                 pm,
                 (xx / tr).real() - r * r,
                 (pp / tr).real() - pm * pm,
                 (xp / tr).real() - r * pm,
                 tr.real()};
        };

        std::array<double, 6> full{};
        derive(t_tr, t_x, t_p, t_xx, t_pp, t_xp, full);

        // jackknife over trajectories
        std::array<double, 6> mean{};
        std::vector<std::array<double, 6>> reps(m);
        const double inv_m1 = 1.0 / static_cast<double>(m - 1 > 0 ? m - 1 : 1);
        (void)inv_m1;
        for (std::size_t i = 0; i < m; ++i) {
            const PairResult& r = results[keep[i]];
            derive(t_tr - r.tr[s], t_x - r.x[s], t_p - r.p[s], t_xx - r.xx[s], t_pp - r.pp[s],
                   t_xp - r.xp[s], reps[i]);
            for (int q = 0; q < 6; ++q) mean[q] += reps[i][q];
        }
        for (int q = 0; q < 6; ++q) mean[q] /= static_cast<double>(m);
        std::array<double, 6> var{};
        for (std::size_t i = 0; i < m; ++i)
            for (int q = 0; q < 6; ++q) {
                const double d = reps[i][q] - mean[q];
                var[q] += d * d;
            }
        const double jk = (static_cast<double>(m) - 1.0) / static_cast<double>(m);
        for (int q = 0; q < 6; ++q) var[q] *= jk;

        out.r[s] = full[0];
        out.p[s] = full[1];
        out.vqq[s] = full[2];
        out.vpp[s] = full[3];
        out.vqp[s] = full[4];
        out.trace_re[s] = full[5] / static_cast<double>(m);
        out.se_r[s] = std::sqrt(var[0]);
        out.se_p[s] = std::sqrt(var[1]);
        out.se_vqq[s] = std::sqrt(var[2]);
        out.se_vpp[s] = std::sqrt(var[3]);
        out.se_vqp[s] = std::sqrt(var[4]);
        out.trace_se[s] = std::sqrt(var[5]) / static_cast<double>(m);
    }
    return out;
}

EnsembleMoments run_ensemble(const GridSpec& grid, double mass, const Potential& v_ext,
                             double counterterm, const std::vector<Cplx>& psi1_0,
                             const std::vector<Cplx>& psi2_0, const NoiseSynth& synth,
                             std::size_t n_traj, std::uint64_t master_seed,
                             const std::vector<double>& sample_times, int threads,
                             bool time_dependent) {
    std::vector<PairResult> results(n_traj);
    parallel_for_indexed(n_traj, threads, [&](std::size_t k) {
        const NoisePair noise = synth.generate(master_seed, k);
        results[k] = propagate_pair(grid, mass, v_ext, counterterm, psi1_0, psi2_0, noise,
                                    sample_times, time_dependent);
    });
    return ensemble_reduce(results);
}

// ------------------------------------------------------------------ probe

namespace {

// least-squares slope of y(t) over the samples inside [lo, hi]
double window_slope(const std::vector<double>& t, const std::vector<double>& y, double lo,
                    double hi, std::size_t* n_used = nullptr) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < lo || t[k] > hi) continue;
        sx += t[k];
        sy += y[k];
        sxx += t[k] * t[k];
        sxy += t[k] * y[k];
        n += 1.0;
    }
    if (n_used) *n_used = static_cast<std::size_t>(n);
    if (n < 2.0) throw std::runtime_error("window_slope: fewer than two samples in window");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

ProbeTable anharmonic_boost_probe(const ProbeConfig& config, const std::vector<double>& u_values) {
    config.grid.validate();
    if (u_values.empty()) throw std::invalid_argument("probe: need at least one u");

    // sample grid for the drift fit
    std::vector<double> sample_times;
    const double t_end = std::min(config.grid.t_max, config.window_hi + 1.0);
    const double step = config.grid.dt * std::max<std::size_t>(
                            1, static_cast<std::size_t>(std::llround(
                                   (t_end / 40.0) / config.grid.dt)));
    for (double t = step; t <= t_end + 1e-9; t += step) sample_times.push_back(t);

    const std::vector<Cplx> psi0 =
        gaussian_packet(config.grid, config.q0, config.p0, config.sx2);

    const bool stochastic = config.synth != nullptr;
    const std::size_t n_traj = stochastic ? config.n_traj : 1;

    auto run = [&](const Potential& v, const std::vector<Cplx>& init, bool time_dep) {
        std::vector<PairResult> results(n_traj);
        parallel_for_indexed(n_traj, config.threads, [&](std::size_t k) {
            NoisePair noise;
            if (stochastic) noise = config.synth->generate(config.master_seed, k);
            results[k] = propagate_pair(config.grid, config.mass, v, config.counterterm, init,
                                        init, noise, sample_times, time_dep);
        });
        return results;
    };

    // lab run, shared across u rows (common random numbers)
    const std::vector<PairResult> lab = run(config.v_ext, psi0, false);

    ProbeTable table;
    table.window_lo = config.window_lo;
    table.window_hi = config.window_hi;

    for (double u : u_values) {
        const std::vector<Cplx> boosted = shift_momentum(config.grid, psi0, config.mass * u);
        Potential v_moving = [&config, u](double x, double t) {
            return config.v_ext(x + u * t, t);
        };
        const std::vector<PairResult> frame = run(v_moving, boosted, true);

        // paired exclusion: a seed counts only if both runs stayed clean
        std::vector<std::size_t> keep;
        for (std::size_t k = 0; k < n_traj; ++k)
            if (!lab[k].excluded() && !frame[k].excluded()) keep.push_back(k);
        if (keep.size() < (stochastic ? 2u : 1u))
            throw std::runtime_error("probe: too many divergent trajectories");
        const std::size_t m = keep.size();
        const std::size_t nt = sample_times.size();

        // totals per sample for both runs
        std::vector<Cplx> col(m);
        std::vector<Cplx> t_tr_a(nt), t_p_a(nt), t_tr_b(nt), t_p_b(nt);
        for (std::size_t s = 0; s < nt; ++s) {
            for (std::size_t i = 0; i < m; ++i) col[i] = frame[keep[i]].tr[s];
            t_tr_a[s] = pairwise_sum(col, 0, m);
            for (std::size_t i = 0; i < m; ++i) col[i] = frame[keep[i]].p[s];
            t_p_a[s] = pairwise_sum(col, 0, m);
            for (std::size_t i = 0; i < m; ++i) col[i] = lab[keep[i]].tr[s];
            t_tr_b[s] = pairwise_sum(col, 0, m);
            for (std::size_t i = 0; i < m; ++i) col[i] = lab[keep[i]].p[s];
            t_p_b[s] = pairwise_sum(col, 0, m);
        }

        auto drift_series = [&](const std::vector<Cplx>& tra, const std::vector<Cplx>& pa,
                                const std::vector<Cplx>& trb, const std::vector<Cplx>& pb,
                                std::vector<double>& d) {
            d.resize(nt);
            for (std::size_t s = 0; s < nt; ++s)
                d[s] = (pa[s] / tra[s]).real() -
                       ((pb[s] / trb[s]).real() - config.mass * u);
        };

        std::vector<double> d_full;
        drift_series(t_tr_a, t_p_a, t_tr_b, t_p_b, d_full);
        ProbeRow row;
        row.gamma = config.gamma_label;
        row.u = u;
        row.defect = window_slope(sample_times, d_full, config.window_lo, config.window_hi,
                                  &row.n_used);
        row.oracle_defect = std::numeric_limits<double>::quiet_NaN();

        if (stochastic && m > 1) {
            // jackknife the fitted slope
            std::vector<double> d_rep;
            std::vector<double> slopes(m);
            std::vector<Cplx> tra(nt), pa(nt), trb(nt), pb(nt);
            for (std::size_t i = 0; i < m; ++i) {
                const PairResult& fa = frame[keep[i]];
                const PairResult& fb = lab[keep[i]];
                for (std::size_t s = 0; s < nt; ++s) {
                    tra[s] = t_tr_a[s] - fa.tr[s];
                    pa[s] = t_p_a[s] - fa.p[s];
                    trb[s] = t_tr_b[s] - fb.tr[s];
                    pb[s] = t_p_b[s] - fb.p[s];
                }
                drift_series(tra, pa, trb, pb, d_rep);
                slopes[i] =
                    window_slope(sample_times, d_rep, config.window_lo, config.window_hi);
            }
            double mean = 0.0;
            for (double v : slopes) mean += v;
            mean /= static_cast<double>(m);
            double var = 0.0;
            for (double v : slopes) var += (v - mean) * (v - mean);
            var *= (static_cast<double>(m) - 1.0) / static_cast<double>(m);
            row.defect_se = std::sqrt(var);
        } else {
            row.defect_se = 0.0;
        }
        table.rows.push_back(row);
    }
    return table;
}

void write_probe_csv(const ProbeTable& table, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("write_probe_csv: cannot open " + path);
    std::fprintf(f, "# boost-defect probe: fitted d<P>/dt drift of boosted-minus-image,\n");
    std::fprintf(f, "# window [%.6g, %.6g], jackknife errors, common random numbers\n",
                 table.window_lo, table.window_hi);
    std::fprintf(f, "gamma,u,defect,defect_se,oracle_defect,n_used\n");
    for (const auto& r : table.rows)
        std::fprintf(f, "%.16e,%.16e,%.16e,%.16e,%.16e,%zu\n", r.gamma, r.u, r.defect,
                     r.defect_se, r.oracle_defect, r.n_used);
    std::fclose(f);
}

}  // namespace galilab
