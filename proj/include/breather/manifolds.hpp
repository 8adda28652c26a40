#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flow.hpp"
#include "normal_form.hpp"

namespace breather {

struct ManifoldConfig {
    double eta = 0.25;
    double rho = 0;       // trajectory-ball radius, 0 = 2r
    double r = 0;         // graph domain radius, 0 = cutoff_r / 2
    double cutoff_r = 0;  // 0 = K/2, shrunk until the margin holds
    double T_inf = 60;
    double dense_T = 10;    // uniform part of the grid
    double dense_dt = 1e-2;
    int period_nodes = 16;  // nodes per fast period when the elliptic part is present
    double growth = 1.1;    // geometric coarsening beyond dense_T
    bool richardson = true; // combine grid and midpoint-refined grid
    double fixpt_tol = 1e-10;
    int max_iters = 100;
    int sigma_probes = 40;
    bool shrink_cutoff = true;
    unsigned seed = 1;

    void validate() const {
        if (!(eta > 0 && eta < 0.5)) fail(ErrorKind::InvalidConfig, "eta must lie in (0, 1/2)");
        if (T_inf * (1 - 2 * eta) < 30) fail(ErrorKind::InvalidConfig, "T_inf (1 - 2 eta) must be at least 30");
        if (!(dense_dt > 0) || !(dense_T > 0) || dense_T > T_inf) fail(ErrorKind::InvalidConfig, "bad dense grid");
        if (!(growth > 1)) fail(ErrorKind::InvalidConfig, "growth must exceed 1");
        if (!(fixpt_tol > 0) || max_iters < 1) fail(ErrorKind::InvalidConfig, "bad fixed-point controls");
        if (cutoff_r < 0 || r < 0 || rho < 0) fail(ErrorKind::InvalidConfig, "radii must be non-negative");
    }
};

enum class ManifoldKind { cs, cu, s, u, star_s, star_u };

inline const char* to_string(ManifoldKind k) {
    switch (k) {
        case ManifoldKind::cs: return "cs";
        case ManifoldKind::cu: return "cu";
        case ManifoldKind::s: return "s";
        case ManifoldKind::u: return "u";
        case ManifoldKind::star_s: return "star_s";
        case ManifoldKind::star_u: return "star_u";
    }
    return "?";
}

struct GraphMapEval {
    ManifoldKind kind = ManifoldKind::cs;
    std::vector<double> base, value;
    double fixpoint_residual = 0;
    double tail_bound = 0;  // truncation bound for the improper integrals
    double contraction = 0; // last ratio of successive updates
    double weighted_sup = 0; // sup e^{-eta t} |Z(t)|
    int iterations = 0;
};

struct LPResult {
    Trajectory<double> traj;  // in physical time (negative for u, cu, star_u)
    GraphMapEval eval;
};

// C^2 cut-off: 1 on [0,1], 0 on [2,inf), quintic smoothstep between
inline double cutoff_chi(double x) {
    if (x <= 1) return 1;
    if (x >= 2) return 0;
    double t = x - 1;
    return 1 - t * t * t * (10 - 15 * t + 6 * t * t);
}

// Weights of int_0^h e^{k (h - s)} [g0 (1 - s/h) + g1 s/h] ds, plus e^{k h}
struct FilonWeights {
    std::complex<double> E, w0, w1;
};

inline FilonWeights filon(std::complex<double> k, double h) {
    std::complex<double> z = k * h, E = std::exp(z), ei, w1;
    if (std::abs(z) < 0.5) {
        // h sum z^n/(n+1)!, h sum z^n/(n+2)!
        std::complex<double> t = 1.0, s1 = 0, s2 = 0;
        double f1 = 1, f2 = 2;
        for (int n = 0; n < 25; ++n) {
            s1 += t / f1;
            s2 += t / f2;
            t *= z;
            f1 *= n + 2;
            f2 *= n + 3;
        }
        ei = h * s1;
        w1 = h * s2;
    } else {
        ei = (E - 1.0) / k;
        w1 = ei - E / k + ei / z;
    }
    return {E, ei - w1, w1};
}

// Lyapunov-Perron construction of the invariant manifolds of the transformed system.
// Hyperbolic coordinates u = (w + w1)/sqrt2, s = (w - w1)/sqrt2 with rates +-lambda,
// lambda = 1/omega; elliptic coordinates c_k = a_k - i b_k rotating at i L_k / eps.
class ManifoldSystem {
public:
    ManifoldSystem(const NormalFormChain& ch, ManifoldConfig cfg = {}) : ch_(&ch), cfg_(cfg) {
        cfg_.validate();
        n_ = ch.model().n_modes();
        lambda_ = 1.0 / ch.model().spec.omega;
        eps_ = ch.eps();
        rc_ = cfg_.cutoff_r > 0 ? cfg_.cutoff_r : ch.K() / 2;
        sigma_ = probe_sigma(rc_);
        while (cfg_.shrink_cutoff && margin(sigma_) <= 0.5) {
            rc_ *= 0.7;
            sigma_ = probe_sigma(rc_);
            if (rc_ < 1e-6) fail(ErrorKind::NoContraction, "no cut-off radius satisfies the contraction margin");
        }
        r_ = cfg_.r > 0 ? cfg_.r : rc_ / 2;
        rho_ = cfg_.rho > 0 ? cfg_.rho : 2 * r_;
    }

    const NormalFormChain& chain() const { return *ch_; }
    const ManifoldConfig& config() const { return cfg_; }
    double cutoff_r() const { return rc_; }
    double sigma() const { return sigma_; }
    double r() const { return r_; }
    double rho() const { return rho_; }
    double lambda() const { return lambda_; }
    int n_modes() const { return n_; }
    int ell_dim() const { return 2 * (n_ - 1); }

    // worst case over eta' in [eta, 2 eta] of 1 - sigma/eta' - sigma/(1 - eta')
    double margin(double sigma) const {
        double m = 1;
        for (int i = 0; i <= 20; ++i) {
            double e = cfg_.eta * (1 + i / 20.0);
            m = std::min(m, 1 - sigma / e - sigma / (1 - e));
        }
        return m;
    }
    double margin() const { return margin(sigma_); }

    // transformed field minus its linear part (A z^h, J z^c / eps), optionally cut off
    FullState<double> nonlinearity(const FullState<double>& z, bool cut) const {
        double chi = cut ? cutoff_chi(state_norm(z) / rc_) : 1.0;
        FullState<double> v(n_);
        if (chi == 0) return v;
        v = ch_->transformed_field(z, -1, false);
        v.hyp.w -= lambda_ * z.hyp.w1;
        v.hyp.w1 -= lambda_ * z.hyp.w;
        for (int k = 2; k <= n_; ++k) {
            double l = std::sqrt(k * k - 1.0);
            v.ell.wc[k] -= l * z.ell.w1c[k] / eps_;
            v.ell.w1c[k] += l * z.ell.wc[k] / eps_;
        }
        if (chi != 1) v *= chi;
        return v;
    }

    // replace the regular field used by the star kinds (e.g. by the Duffing limit)
    void set_star_field(std::function<HypState<double>(const HypState<double>&)> f) { star_field_ = std::move(f); }

    HypState<double> star_nonlinearity(const HypState<double>& W) const {
        auto f = star_field_ ? star_field_(W) : ch_->regular_field(W);
        return {f.w - lambda_ * W.w1, f.w1 - lambda_ * W.w};
    }

    // Lipschitz constant of the cut-off nonlinearity by probing local difference quotients
    double probe_sigma(double rc) const {
        std::mt19937 rng(cfg_.seed);
        std::uniform_real_distribution<double> U(-1, 1);
        double save = rc_;
        rc_ = rc;
        double sig = 0;
        for (int p = 0; p < cfg_.sigma_probes; ++p) {
            FullState<double> z(n_), d(n_);
            auto rnd = [&](FullState<double>& x) {
                x.hyp = {U(rng), U(rng)};
                for (int k = 2; k <= n_; ++k) {
                    x.ell.wc[k] = U(rng) / k;
                    x.ell.w1c[k] = U(rng) / k;
                }
            };
            rnd(z);
            rnd(d);
            double rad = 2.2 * rc * (p + 1.0) / cfg_.sigma_probes;
            z *= rad / state_norm(z);
            d *= 1e-6 * rc / state_norm(d);
            auto zp = z, zm = z;
            zp.axpy(1.0, d);
            zm.axpy(-1.0, d);
            auto dn = nonlinearity(zp, true) - nonlinearity(zm, true);
            sig = std::max(sig, state_norm(dn) / (2 * state_norm(d)));
        }
        rc_ = save;
        return sig;
    }

    static bool uses_cutoff(ManifoldKind k) { return k == ManifoldKind::cs || k == ManifoldKind::cu; }
    static bool is_star(ManifoldKind k) { return k == ManifoldKind::star_s || k == ManifoldKind::star_u; }
    static bool forward_time(ManifoldKind k) {
        return k == ManifoldKind::cs || k == ManifoldKind::s || k == ManifoldKind::star_s;
    }
    int base_dim(ManifoldKind k) const { return uses_cutoff(k) ? 1 + ell_dim() : 1; }
    int value_dim(ManifoldKind k) const { return (k == ManifoldKind::s || k == ManifoldKind::u) ? 1 + ell_dim() : 1; }

    std::vector<double> grid(ManifoldKind k) const {
        double h = cfg_.dense_dt;
        if (!is_star(k)) h = std::min(h, 2 * M_PI * eps_ / (cfg_.period_nodes * std::sqrt(n_ * n_ - 1.0)));
        std::vector<double> t{0.0};
        long nd = static_cast<long>(std::ceil(cfg_.dense_T / h));
        double hd = cfg_.dense_T / nd;
        for (long j = 1; j <= nd; ++j) t.push_back(j * hd);
        double step = hd;
        while (t.back() < cfg_.T_inf - 1e-12) {
            step *= cfg_.growth;
            t.push_back(std::min(t.back() + step, cfg_.T_inf));
        }
        return t;
    }

    // base layout: [decaying hyperbolic coordinate, then (a_2, b_2, ...) for cs/cu];
    // value layout: growing coordinate, then the elliptic part at 0 for s/u
    LPResult lp_fixpoint(ManifoldKind kind, const std::vector<double>& base, double init_perturb = 0) const {
        check_base(kind, base);
        auto t = grid(kind);
        if (!cfg_.richardson) return solve(kind, base, t, init_perturb);
        LPResult coarse = solve(kind, base, t, init_perturb);
        LPResult fine = solve(kind, base, refine(t), init_perturb);
        for (size_t i = 0; i < fine.eval.value.size(); ++i)
            fine.eval.value[i] = (4 * fine.eval.value[i] - coarse.eval.value[i]) / 3;
        fine.eval.iterations += coarse.eval.iterations;
        return fine;
    }

    GraphMapEval graph(ManifoldKind kind, const std::vector<double>& base) const {
        return lp_fixpoint(kind, base).eval;
    }

    // d value / d base[i] for every i at once (grad[i]), from the linearized
    // iteration about the converged path; cheaper than graph_derivative by a
    // factor of about the base dimension
    std::vector<std::vector<double>> graph_gradient(ManifoldKind kind, const std::vector<double>& base) const {
        check_base(kind, base);
        auto t = grid(kind);
        if (!cfg_.richardson) return tangent_solve(kind, base, t);
        auto coarse = tangent_solve(kind, base, t), fine = tangent_solve(kind, base, refine(t));
        for (size_t i = 0; i < fine.size(); ++i)
            for (size_t k = 0; k < fine[i].size(); ++k) fine[i][k] = (4 * fine[i][k] - coarse[i][k]) / 3;
        return fine;
    }

    // d value / d base[i] by 4th-order central differences with step 1e-4 r
    std::vector<double> graph_derivative(ManifoldKind kind, const std::vector<double>& base, int i) const {
        double h = 1e-4 * r_;
        auto at = [&](double s) {
            auto b = base;
            b[i] += s;
            return graph(kind, b).value;
        };
        auto p1 = at(h), m1 = at(-h), p2 = at(2 * h), m2 = at(-2 * h);
        std::vector<double> d(p1.size());
        for (size_t j = 0; j < d.size(); ++j) d[j] = (8 * (p1[j] - m1[j]) - (p2[j] - m2[j])) / (12 * h);
        return d;
    }

    struct CenterPoint {
        double Ws = 0, Wu = 0;
        int iterations = 0;
        double residual = 0;
    };

    // Psi(W_c): solve W_s = h_s(W_u, W_c), W_u = h_u(W_s, W_c)
    CenterPoint center_psi(const std::vector<double>& Wc, int max_iters = 50) const {
        CenterPoint p;
        auto with = [&](double x) {
            std::vector<double> b{x};
            b.insert(b.end(), Wc.begin(), Wc.end());
            return b;
        };
        double prev = INFINITY;
        for (int it = 1; it <= max_iters; ++it) {
            double Wu = graph(ManifoldKind::cs, with(p.Ws)).value[0];
            double Ws = graph(ManifoldKind::cu, with(Wu)).value[0];
            double d = std::abs(Wu - p.Wu) + std::abs(Ws - p.Ws);
            p.Wu = Wu;
            p.Ws = Ws;
            p.iterations = it;
            p.residual = d;
            if (d <= 10 * cfg_.fixpt_tol) return p;
            if (it > 3 && d > prev) fail(ErrorKind::NoContraction, "center manifold iteration diverges");
            prev = d;
        }
        fail(ErrorKind::MaxIters, "center manifold iteration did not converge");
    }

    // full state from hyperbolic coordinates (u, s) and an elliptic part
    FullState<double> state(double u, double s, const std::vector<double>& ell = {}) const {
        FullState<double> z(n_);
        z.hyp = {(u + s) / M_SQRT2, (u - s) / M_SQRT2};
        for (int k = 2; k <= n_ && !ell.empty(); ++k) {
            z.ell.wc[k] = ell[2 * (k - 2)];
            z.ell.w1c[k] = ell[2 * (k - 2) + 1];
        }
        return z;
    }
    static double coord_u(const FullState<double>& z) { return (z.hyp.w + z.hyp.w1) / M_SQRT2; }
    static double coord_s(const FullState<double>& z) { return (z.hyp.w - z.hyp.w1) / M_SQRT2; }

private:
    using cd = std::complex<double>;

    void check_base(ManifoldKind kind, const std::vector<double>& base) const {
        if (static_cast<int>(base.size()) != base_dim(kind))
            fail(ErrorKind::InvalidConfig, std::string("wrong base dimension for kind ") + to_string(kind));
        double bn = std::abs(base[0]);
        if (uses_cutoff(kind)) {
            EllState<double> e(n_);
            for (int k = 2; k <= n_; ++k) {
                e.wc[k] = base[1 + 2 * (k - 2)];
                e.w1c[k] = base[2 + 2 * (k - 2)];
            }
            bn += y1_norm(e);
        }
        if (bn >= r_) fail(ErrorKind::DomainExceeded, "manifold base point outside the graph domain");
    }

    // midpoint-refined grid for the Richardson step
    static std::vector<double> refine(const std::vector<double>& t) {
        std::vector<double> tf;
        for (size_t j = 0; j + 1 < t.size(); ++j) {
            tf.push_back(t[j]);
            tf.push_back(0.5 * (t[j] + t[j + 1]));
        }
        tf.push_back(t.back());
        return tf;
    }

    struct Sweep {
        bool fwd = true, star = false, center = false;
        double sgn = 1;
        int ne = 0;
        std::vector<double> t;
        std::vector<FilonWeights> Wd, Wg;
        std::vector<std::vector<FilonWeights>> We;
        std::vector<cd> kap;
    };

    // per-interval weights: decaying forward (rate -lambda), growing backward, elliptic
    Sweep make_sweep(ManifoldKind kind, const std::vector<double>& t) const {
        Sweep S;
        S.fwd = forward_time(kind);
        S.star = is_star(kind);
        S.center = uses_cutoff(kind);  // elliptic part starts from the base data
        S.sgn = S.fwd ? 1.0 : -1.0;
        S.ne = S.star ? 0 : n_ - 1;
        S.t = t;
        const size_t nt = t.size();
        S.Wd.resize(nt - 1);
        S.Wg.resize(nt - 1);
        S.We.assign(S.ne, std::vector<FilonWeights>(nt - 1));
        S.kap.resize(S.ne);
        for (int e = 0; e < S.ne; ++e) S.kap[e] = cd(0, S.sgn * std::sqrt((e + 2.0) * (e + 2.0) - 1) / eps_);
        for (size_t j = 0; j + 1 < nt; ++j) {
            double h = t[j + 1] - t[j];
            S.Wd[j] = filon(-lambda_, h);
            S.Wg[j] = filon(-lambda_, h);
            for (int e = 0; e < S.ne; ++e) S.We[e][j] = filon(S.center ? S.kap[e] : -S.kap[e], h);
        }
        return S;
    }

    // Lyapunov-Perron coordinates: d decays, g grows, c elliptic (a - i b)
    struct Path {
        std::vector<double> d, g;
        std::vector<std::vector<cd>> c;
        Path(size_t nt, int ne) : d(nt, 0.0), g(nt, 0.0), c(ne, std::vector<cd>(nt, 0.0)) {}
    };

    FullState<double> node_state(const Sweep& S, const Path& P, size_t j) const {
        double u = S.fwd ? P.g[j] : P.d[j], s = S.fwd ? P.d[j] : P.g[j];
        FullState<double> z(n_);
        z.hyp = {(u + s) / M_SQRT2, (u - s) / M_SQRT2};
        for (int e = 0; e < S.ne; ++e) {
            z.ell.wc[e + 2] = P.c[e][j].real();
            z.ell.w1c[e + 2] = -P.c[e][j].imag();
        }
        return z;
    }

    // forcing at node j in path coordinates
    void set_forcing(const Sweep& S, const FullState<double>& n, size_t j, Path& F) const {
        double Nu = (n.hyp.w + n.hyp.w1) / M_SQRT2, Ns = (n.hyp.w - n.hyp.w1) / M_SQRT2;
        F.d[j] = S.sgn * (S.fwd ? Ns : Nu);
        F.g[j] = S.sgn * (S.fwd ? Nu : Ns);
        for (int e = 0; e < S.ne; ++e) F.c[e][j] = S.sgn * cd(n.ell.wc[e + 2], -n.ell.w1c[e + 2]);
    }

    // one application of the integral operator to the forcing F
    Path apply_operator(const Sweep& S, double d0, const std::vector<cd>& c0, const Path& F) const {
        const size_t nt = S.t.size();
        Path P(nt, S.ne);
        P.d[0] = d0;
        for (size_t j = 0; j + 1 < nt; ++j)
            P.d[j + 1] = (S.Wd[j].E * P.d[j] + S.Wd[j].w0 * F.d[j] + S.Wd[j].w1 * F.d[j + 1]).real();
        for (size_t j = nt - 1; j-- > 0;)
            P.g[j] = (S.Wg[j].E * P.g[j + 1] - (S.Wg[j].w0 * F.g[j + 1] + S.Wg[j].w1 * F.g[j])).real();
        for (int e = 0; e < S.ne; ++e) {
            auto& c = P.c[e];
            const auto& W = S.We[e];
            if (S.center) {
                c[0] = c0[e];
                for (size_t j = 0; j + 1 < nt; ++j) c[j + 1] = W[j].E * c[j] + W[j].w0 * F.c[e][j] + W[j].w1 * F.c[e][j + 1];
            } else {
                for (size_t j = nt - 1; j-- > 0;) c[j] = W[j].E * c[j + 1] - (W[j].w0 * F.c[e][j + 1] + W[j].w1 * F.c[e][j]);
            }
        }
        return P;
    }

    // eta-weighted distance and size in the trajectory norm
    std::pair<double, double> weighted(const Sweep& S, const Path& a, const Path& b) const {
        double upd = 0, sup = 0;
        for (size_t j = 0; j < S.t.size(); ++j) {
            double wt = std::exp(-cfg_.eta * S.t[j]);
            double du = std::hypot(a.d[j] - b.d[j], a.g[j] - b.g[j]), sz = std::hypot(a.d[j], a.g[j]);
            double de = 0, se = 0;
            for (int e = 0; e < S.ne; ++e) {
                double l2 = (e + 2.0) * (e + 2.0);
                de += l2 * std::norm(a.c[e][j] - b.c[e][j]);
                se += l2 * std::norm(a.c[e][j]);
            }
            upd = std::max(upd, wt * (du + std::sqrt(de)));
            sup = std::max(sup, wt * (sz + std::sqrt(se)));
        }
        return {upd, sup};
    }

    std::vector<double> path_value(ManifoldKind kind, const Sweep& S, const Path& P) const {
        std::vector<double> v{P.g[0]};
        if (kind == ManifoldKind::s || kind == ManifoldKind::u)
            for (int e = 0; e < S.ne; ++e) {
                v.push_back(P.c[e][0].real());
                v.push_back(-P.c[e][0].imag());
            }
        return v;
    }

    FullState<double> node_nonlinearity(const Sweep& S, const FullState<double>& z) const {
        if (!S.star) return nonlinearity(z, true);
        FullState<double> r(n_);
        r.hyp = star_nonlinearity(z.hyp);
        return r;
    }

    LPResult solve(ManifoldKind kind, const std::vector<double>& base, const std::vector<double>& t,
                   double init_perturb, Path* out = nullptr) const {
        const Sweep S = make_sweep(kind, t);
        const size_t nt = t.size();
        const int ne = S.ne;
        Path P(nt, ne);
        std::vector<cd> c0(ne, 0.0);
        if (S.center)
            for (int e = 0; e < ne; ++e) c0[e] = cd(base[1 + 2 * e], -base[2 + 2 * e]);
        // linear part as the first iterate
        for (size_t j = 0; j < nt; ++j) {
            P.d[j] = base[0] * std::exp(-lambda_ * t[j]);
            for (int e = 0; e < ne; ++e) P.c[e][j] = c0[e] * std::exp(S.kap[e] * t[j]);
        }
        if (init_perturb != 0) {
            std::mt19937 rng(cfg_.seed + 7);
            std::uniform_real_distribution<double> U(-1, 1);
            for (size_t j = 0; j < nt; ++j) {
                double damp = init_perturb * std::exp(-lambda_ * t[j]);
                P.d[j] += damp * U(rng);
                P.g[j] += damp * U(rng);
                for (int e = 0; e < ne; ++e) P.c[e][j] += damp * cd(U(rng), U(rng));
            }
        }
        Path F(nt, ne);
        GraphMapEval ev;
        ev.kind = kind;
        ev.base = base;
        double prev = INFINITY, nsup = 0;
        for (int it = 1;; ++it) {
            nsup = 0;
            for (size_t j = 0; j < nt; ++j) {
                auto n = node_nonlinearity(S, node_state(S, P, j));
                set_forcing(S, n, j, F);
                nsup = std::max(nsup, std::exp(-cfg_.eta * t[j]) * state_norm(n));
            }
            Path Pn = apply_operator(S, base[0], c0, F);
            auto [upd, wsup] = weighted(S, Pn, P);
            P = std::move(Pn);
            ev.iterations = it;
            ev.fixpoint_residual = upd;
            ev.contraction = std::isfinite(prev) && prev > 0 ? upd / prev : 0;
            ev.weighted_sup = wsup;
            if (!std::isfinite(upd)) fail(ErrorKind::NoContraction, "Lyapunov-Perron iteration overflowed");
            if (upd <= cfg_.fixpt_tol) break;
            if (it >= 4 && upd > prev && upd > 1e3 * cfg_.fixpt_tol)
                fail(ErrorKind::NoContraction, std::string("Lyapunov-Perron iteration not contracting for kind ") +
                                                   to_string(kind));
            if (it >= cfg_.max_iters) fail(ErrorKind::MaxIters, "Lyapunov-Perron iteration limit reached");
            prev = upd;
        }
        ev.tail_bound = std::exp(-(1 - 2 * cfg_.eta) * cfg_.T_inf) * nsup;
        ev.value = path_value(kind, S, P);
        LPResult res;
        res.traj.system = S.star ? SystemTag::regular : SystemTag::transformed;
        res.traj.eps = eps_;
        for (size_t j = 0; j < nt; ++j) res.traj.push(S.sgn * t[j], node_state(S, P, j));
        res.eval = ev;
        if (out) *out = std::move(P);
        return res;
    }

    // Linearized iteration about the converged path, one tangent per base coordinate
    std::vector<std::vector<double>> tangent_solve(ManifoldKind kind, const std::vector<double>& base,
                                                   const std::vector<double>& t) const {
        const Sweep S = make_sweep(kind, t);
        const size_t nt = t.size();
        const int ne = S.ne, nb = static_cast<int>(base.size());
        Path P(nt, ne);
        solve(kind, base, t, 0, &P);
        // node Jacobians of the nonlinearity in the flat layout
        const int dim = S.star ? 2 : 2 * n_;
        std::vector<Eigen::MatrixXd> Jn(nt, Eigen::MatrixXd(dim, dim));
        for (size_t j = 0; j < nt; ++j) {
            auto f = node_state(S, P, j).flat();
            for (int c = 0; c < dim; ++c) {
                double h = 1e-6 * std::max(1.0, std::abs(f[c]));
                auto fp = f, fm = f;
                fp[c] += h;
                fm[c] -= h;
                auto np = node_nonlinearity(S, FullState<double>::from_flat(fp)).flat();
                auto nm = node_nonlinearity(S, FullState<double>::from_flat(fm)).flat();
                for (int r = 0; r < dim; ++r) Jn[j](r, c) = (np[r] - nm[r]) / (2 * h);
            }
        }
        std::vector<std::vector<double>> grad;
        for (int i = 0; i < nb; ++i) {
            double d0 = i == 0 ? 1.0 : 0.0;
            std::vector<cd> c0(ne, 0.0);
            if (S.center && i > 0) c0[(i - 1) / 2] = (i - 1) % 2 == 0 ? cd(1, 0) : cd(0, -1);
            Path T(nt, ne), F(nt, ne);
            for (size_t j = 0; j < nt; ++j) {
                T.d[j] = d0 * std::exp(-lambda_ * t[j]);
                for (int e = 0; e < ne; ++e) T.c[e][j] = c0[e] * std::exp(S.kap[e] * t[j]);
            }
            for (int it = 1;; ++it) {
                for (size_t j = 0; j < nt; ++j) {
                    auto v = node_state(S, T, j).flat();
                    Eigen::VectorXd dn = Jn[j] * Eigen::Map<Eigen::VectorXd>(v.data(), dim);
                    std::vector<double> full(2 * n_, 0.0);
                    std::copy(dn.data(), dn.data() + dim, full.begin());
                    set_forcing(S, FullState<double>::from_flat(full), j, F);
                }
                Path Tn = apply_operator(S, d0, c0, F);
                double upd = weighted(S, Tn, T).first;
                T = std::move(Tn);
                if (upd <= cfg_.fixpt_tol) break;
                if (!std::isfinite(upd) || it >= cfg_.max_iters)
                    fail(ErrorKind::NoContraction, "linearized Lyapunov-Perron iteration failed");
            }
            grad.push_back(path_value(kind, S, T));
        }
        return grad;
    }

    const NormalFormChain* ch_;
    ManifoldConfig cfg_;
    std::function<HypState<double>(const HypState<double>&)> star_field_;
    int n_ = 0;
    double lambda_ = 1, eps_ = 0;
    mutable double rc_ = 0;
    double sigma_ = 0, r_ = 0, rho_ = 0;
};

}  // namespace breather
