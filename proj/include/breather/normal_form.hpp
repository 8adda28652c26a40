#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "chebyshev.hpp"
#include "duffing.hpp"
#include "model.hpp"

namespace breather {

struct NormalFormConfig {
    double c = 1.0;        // step budget floor(c/eps)
    int hard_cap = 12;
    int degree = 32;       // Chebyshev degree of the residual surrogates
    double box_scale = 1.5;  // surrogate box half-width in units of K
    double K1 = 0.0;       // per-step shrink rate, 0 = K/(2c)
    int newton_max = 40;
    double newton_tol = 1e-15;
    bool early_stop = true;
    double mode_floor = 1e-15;  // relative size below which a mode is treated as inactive
    double noise_floor = 1e-13; // modes below this fraction of the initial residual are roundoff
};

// One near-identity canonical map. The residual rho of the elliptic field
// on {z^c = 0} is stored as a Chebyshev surrogate over the hyperbolic plane;
// the map is generated by S = sum_k A_k P_k + B_k q_k with
//   a' = a - eps L^{-1} R_b(w, w1'),  b' = b + eps L^{-1} R_a(w, w1'),
//   w' = w - omega (<d_{w1} R_b, b'> + <d_{w1} R_a, a>),
//   w1' = w1 + omega (<d_w R_b, b'> + <d_w R_a, a>).
struct NormalFormStep {
    int k = 2;                // index of the system this step produces
    std::vector<int> modes;   // active elliptic modes; output 2i is R_a, 2i+1 is R_b of modes[i]
    Cheb2D R;
    double residual_in = 0;   // sup of the residual it removes
    double surrogate_tail = 0;
    double radius = 0;        // radius of the nested domain it is applied on
};

struct StepJet {
    double x = 0, y = 0;  // w before, w1 after
    std::vector<Cheb2D::Jet> J;
    std::vector<double> a_old, b_new;
    int iters = 0;  // Newton iterations of the forward solve
};

struct AuditEntry {
    int m = 0;
    double norm_G = 0;       // |eps G_m| as an operator on Y1
    double norm_Gtilde = 0;  // C^2 size of eps^m Gtilde_m
    double sup_Gtilde = 0;   // C^0 size of eps^m Gtilde_m
    double ratio = 0;        // next C^0 residual / this one
    double radius = 0;
    bool G_ok = true, Gtilde_ok = true;
};

struct AuditReport {
    double eps = 0;
    std::vector<AuditEntry> entries;
    int first_violation = -1;  // m of the first violated step, -1 if none
    bool ok() const { return first_violation < 0; }
};

class NormalFormChain {
public:
    static NormalFormChain build(const Model<double>& m, const NormalFormConfig& cfg = {}) {
        NormalFormChain ch;
        ch.m_ = m;
        ch.cfg_ = cfg;
        ch.K_ = homoclinic_sup(m.nl.f3()) + 1.0;
        ch.box_ = cfg.box_scale * ch.K_;
        ch.K1_ = cfg.K1 > 0 ? cfg.K1 : ch.K_ / (2.0 * cfg.c);
        double eps = m.eps_d();
        int kmax = std::min(static_cast<int>(std::floor(cfg.c / eps)), cfg.hard_cap);
        ch.k_max_ = std::max(kmax, 0);

        auto nw = Cheb2D::nodes(cfg.degree, ch.box_);
        std::vector<std::vector<FullState<double>>> rho;
        double sup = ch.sample_residual(nw, rho, ch.hyp_);
        ch.residuals_.push_back(sup);
        for (int j = 0; j < ch.k_max_; ++j) {
            NormalFormStep st = ch.make_step(j + 2, rho, nw, sup);
            if (st.modes.empty()) break;
            ch.steps_.push_back(std::move(st));
            std::vector<std::vector<FullState<double>>> rho_next;
            Cheb2D hyp_next;
            double sup_next;
            try {
                sup_next = ch.sample_residual(nw, rho_next, hyp_next);
            } catch (const Error& e) {
                // an under-resolved late step can make the corner solves fail; treat as a stall
                if (e.kind() != ErrorKind::NewtonDiverged) throw;
                sup_next = std::numeric_limits<double>::infinity();
            }
            if (!std::isfinite(sup_next) || (cfg.early_stop && !(sup_next < sup))) {
                ch.steps_.pop_back();
                ch.stalled_ = true;
                break;
            }
            rho.swap(rho_next);
            ch.hyp_ = std::move(hyp_next);
            sup = sup_next;
            ch.residuals_.push_back(sup);
        }
        ch.fit_regular();
        return ch;
    }

    const Model<double>& model() const { return m_; }
    const NormalFormConfig& config() const { return cfg_; }
    int size() const { return static_cast<int>(steps_.size()); }
    const std::vector<NormalFormStep>& steps() const { return steps_; }
    double K() const { return K_; }
    double K1() const { return K1_; }
    double box() const { return box_; }
    int k_max() const { return k_max_; }
    bool stalled() const { return stalled_; }
    double eps() const { return m_.eps_d(); }

    // sup over |z^h| <= K of the elliptic residual after j steps, j = 0..size()
    const std::vector<double>& residual_history() const { return residuals_; }
    double residual() const { return residuals_.back(); }
    // measured exponent: e^{alpha_hat} is the final residual
    double alpha_hat() const { return std::log(residuals_.back()); }

    // radius of the nested domain Omega_m
    double domain_radius(int m) const { return 2 * K_ - (m - 1) * K1_ * eps(); }

    FullState<double> forward(FullState<double> x, int upto = -1, bool check = true) const {
        int n = upto < 0 ? size() : upto;
        for (int j = 0; j < n; ++j) x = forward_step(steps_[j], x, nullptr, check);
        return x;
    }

    FullState<double> inverse(FullState<double> z, int upto = -1, bool check = true) const {
        int n = upto < 0 ? size() : upto;
        for (int j = n - 1; j >= 0; --j) z = inverse_step(steps_[j], z, check);
        return z;
    }

    // Derivative of the forward map at x applied to tangents dx (in place)
    FullState<double> forward_jvp(const FullState<double>& x, std::vector<FullState<double>>& dx, int upto = -1,
                                  bool check = true) const {
        int n = upto < 0 ? size() : upto;
        FullState<double> z = x;
        StepJet jet;
        for (int j = 0; j < n; ++j) {
            z = forward_step(steps_[j], z, &jet, check);
            for (auto& d : dx) d = jvp_step(steps_[j], jet, d);
        }
        return z;
    }

    // Conjugated vector field Dforward(x) X(x) at x = inverse(z)
    FullState<double> transformed_field(const FullState<double>& z, int upto = -1, bool check = true) const {
        auto x = inverse(z, upto, check);
        std::vector<FullState<double>> v{vector_field(m_, x)};
        forward_jvp(x, v, upto, check);
        return v[0];
    }

    // Nonlinear remainder: transformed field minus (A z^h, J z^c / eps)
    FullState<double> transformed_nonlinearity(const FullState<double>& z, int upto = -1, bool check = true) const {
        auto v = transformed_field(z, upto, check);
        v.hyp.w -= z.hyp.w1;
        v.hyp.w1 -= z.hyp.w;
        double e = eps();
        for (int k = 2; k <= m_.n_modes(); ++k) {
            double l = std::sqrt(k * k - 1.0);
            v.ell.wc[k] -= l * z.ell.w1c[k] / e;
            v.ell.w1c[k] += l * z.ell.wc[k] / e;
        }
        return v;
    }

    // Elliptic residual rho(z^h) = P_ell transformed_field(z^h, 0)
    EllState<double> residual_at(double w, double w1, int upto = -1) const {
        FullState<double> z(m_.n_modes());
        z.hyp = {w, w1};
        return transformed_field(z, upto, false).ell;
    }

    // Regular planar field A W + Ftilde(W, 0) from the surrogate
    HypState<double> regular_field(const HypState<double>& W) const {
        std::vector<Cheb2D::Jet> J;
        hyp_.jets(W.w, W.w1, J);
        return {J[0].v, J[1].v};
    }
    // Jacobian rows (d/dw, d/dw1) of the regular field
    std::array<std::array<double, 2>, 2> regular_jacobian(const HypState<double>& W) const {
        std::vector<Cheb2D::Jet> J;
        hyp_.jets(W.w, W.w1, J);
        return {{{J[0].w, J[0].w1}, {J[1].w, J[1].w1}}};
    }

    // Operator Gbar(W^h) = D_{z^c} (elliptic field - J z^c / eps) at (W^h, 0), flat (a_2, b_2, ...) layout
    std::vector<std::vector<double>> gbar_matrix(const HypState<double>& W, double h = 1e-6) const {
        int n = m_.n_modes(), d = 2 * (n - 1);
        std::vector<std::vector<double>> G(d, std::vector<double>(d, 0.0));
        for (int c = 0; c < d; ++c) {
            FullState<double> zp(n), zm(n);
            zp.hyp = zm.hyp = W;
            int k = 2 + c / 2;
            if (c % 2 == 0) {
                zp.ell.wc[k] = h;
                zm.ell.wc[k] = -h;
            } else {
                zp.ell.w1c[k] = h;
                zm.ell.w1c[k] = -h;
            }
            auto fp = transformed_nonlinearity(zp), fm = transformed_nonlinearity(zm);
            for (int r = 0; r < d; ++r) {
                int kr = 2 + r / 2;
                double a = r % 2 == 0 ? fp.ell.wc[kr] - fm.ell.wc[kr] : fp.ell.w1c[kr] - fm.ell.w1c[kr];
                G[r][c] = a / (2 * h);
            }
        }
        return G;
    }

    AuditReport audit(int sample_count, unsigned seed = 1, double radius_scale = 1.0) const;

    // Single-step maps, exposed for tests
    FullState<double> forward_step(const NormalFormStep& st, const FullState<double>& in, StepJet* jet,
                                   bool check = true) const;
    FullState<double> inverse_step(const NormalFormStep& st, const FullState<double>& out, bool check = true) const;
    FullState<double> jvp_step(const NormalFormStep& st, const StepJet& jet, const FullState<double>& d) const;

private:
    double sample_residual(const std::vector<double>& nw, std::vector<std::vector<FullState<double>>>& rho,
                           Cheb2D& hyp) const;
    NormalFormStep make_step(int k, const std::vector<std::vector<FullState<double>>>& rho,
                             const std::vector<double>& nw, double sup) const;
    // Hyperbolic part of the final transformed field on {z^c = 0}, refitted on the
    // smaller square [-K, K]^2 where the composed maps are well resolved
    void fit_regular() {
        auto nw = Cheb2D::nodes(cfg_.degree, K_);
        int n = static_cast<int>(nw.size());
        std::vector<std::vector<std::vector<double>>> hv(2, std::vector<std::vector<double>>(n, std::vector<double>(n)));
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) {
                FullState<double> z(m_.n_modes());
                z.hyp = {nw[p], nw[q]};
                auto v = transformed_field(z, -1, false);
                hv[0][p][q] = v.hyp.w;
                hv[1][p][q] = v.hyp.w1;
            }
        hyp_ = Cheb2D(n - 1, K_, K_, 2);
        hyp_.fit(hv);
        hyp_.trim(1e-17);
    }
    void check_domain(const NormalFormStep& st, const FullState<double>& z) const {
        if (state_norm(z) > st.radius * (1 + 1e-12))
            fail(ErrorKind::DomainExceeded, "state outside the nested domain of step " + std::to_string(st.k));
    }

    Model<double> m_;
    NormalFormConfig cfg_;
    double K_ = 0, K1_ = 0, box_ = 0;
    int k_max_ = 0;
    mutable double scale0_ = 0;
    bool stalled_ = false;
    std::vector<NormalFormStep> steps_;
    std::vector<double> residuals_;
    Cheb2D hyp_;
};

inline double NormalFormChain::sample_residual(const std::vector<double>& nw,
                                               std::vector<std::vector<FullState<double>>>& rho,
                                               Cheb2D& hyp) const {
    int n = static_cast<int>(nw.size());
    rho.assign(n, std::vector<FullState<double>>(n));
    hyp = Cheb2D(n - 1, box_, box_, 2);
    std::vector<std::vector<std::vector<double>>> hv(2, std::vector<std::vector<double>>(n, std::vector<double>(n)));
    double sup = 0;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            FullState<double> z(m_.n_modes());
            z.hyp = {nw[p], nw[q]};
            auto v = transformed_field(z, -1, false);
            hv[0][p][q] = v.hyp.w;
            hv[1][p][q] = v.hyp.w1;
            rho[p][q] = v;
            if (nw[p] * nw[p] + nw[q] * nw[q] <= K_ * K_) sup = std::max(sup, y1_norm(v.ell));
        }
    hyp.fit(hv);
    hyp.trim(1e-17);
    return sup;
}

inline NormalFormStep NormalFormChain::make_step(int k, const std::vector<std::vector<FullState<double>>>& rho,
                                                 const std::vector<double>& nw, double sup) const {
    NormalFormStep st;
    st.k = k;
    st.residual_in = sup;
    st.radius = domain_radius(k - 1);
    int n = static_cast<int>(nw.size()), nm = m_.n_modes();
    double mx = 0;
    std::vector<double> mode_max(nm + 1, 0.0);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int kk = 2; kk <= nm; ++kk) {
                double a = std::max(std::abs(rho[p][q].ell.wc[kk]), std::abs(rho[p][q].ell.w1c[kk]));
                mode_max[kk] = std::max(mode_max[kk], a);
                mx = std::max(mx, a);
            }
    if (!(mx > 0)) return st;
    if (k == 2) scale0_ = mx;
    double floor = std::max(cfg_.mode_floor * mx, cfg_.noise_floor * scale0_);
    for (int kk = 2; kk <= nm; ++kk)
        if (mode_max[kk] > floor) st.modes.push_back(kk);
    int no = 2 * static_cast<int>(st.modes.size());
    std::vector<std::vector<std::vector<double>>> vals(no, std::vector<std::vector<double>>(n, std::vector<double>(n)));
    for (size_t i = 0; i < st.modes.size(); ++i)
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) {
                vals[2 * i][p][q] = rho[p][q].ell.wc[st.modes[i]];
                vals[2 * i + 1][p][q] = rho[p][q].ell.w1c[st.modes[i]];
            }
    st.R = Cheb2D(n - 1, box_, box_, no);
    st.R.fit(vals);
    st.surrogate_tail = st.R.tail_ratio();
    st.R.trim(1e-17);
    return st;
}

inline FullState<double> NormalFormChain::forward_step(const NormalFormStep& st, const FullState<double>& in,
                                                       StepJet* jet, bool check) const {
    if (check) check_domain(st, in);
    const double eps = m_.eps_d(), om = m_.spec.omega;
    const int nm = static_cast<int>(st.modes.size());
    std::vector<double> a_old(nm), b_old(nm), b_new(nm), linv(nm);
    for (int i = 0; i < nm; ++i) {
        int k = st.modes[i];
        a_old[i] = in.ell.wc[k];
        b_old[i] = in.ell.w1c[k];
        linv[i] = eps / std::sqrt(k * k - 1.0);
    }
    const double x = in.hyp.w, w1_old = in.hyp.w1;
    std::vector<double> s0, s1, v0, d0, v1, d1;
    st.R.contract_w(x, s0, s1);
    double y = w1_old;
    int it = 0;
    for (;; ++it) {
        st.R.eval_1d(s0, true, y, v0, d0);
        st.R.eval_1d(s1, true, y, v1, d1);
        double g = y - w1_old, gp = 1;
        double acc = 0, accp = 0;
        for (int i = 0; i < nm; ++i) {
            b_new[i] = b_old[i] + linv[i] * v0[2 * i];
            acc += v1[2 * i + 1] * b_new[i] + v1[2 * i] * a_old[i];
            accp += d1[2 * i + 1] * b_new[i] + v1[2 * i + 1] * linv[i] * d0[2 * i] + d1[2 * i] * a_old[i];
        }
        g -= om * acc;
        gp -= om * accp;
        double dy = g / gp;
        if (!std::isfinite(dy)) fail(ErrorKind::NewtonDiverged, "forward step Newton produced a non-finite update");
        y -= dy;
        if (std::abs(dy) <= cfg_.newton_tol * (1 + std::abs(y))) break;
        if (it >= cfg_.newton_max) fail(ErrorKind::NewtonDiverged, "forward step Newton did not converge");
    }
    st.R.eval_1d(s0, true, y, v0, d0);
    FullState<double> out = in;
    double acc = 0;
    for (int i = 0; i < nm; ++i) {
        int k = st.modes[i];
        b_new[i] = b_old[i] + linv[i] * v0[2 * i];
        out.ell.wc[k] = a_old[i] - linv[i] * v0[2 * i + 1];
        out.ell.w1c[k] = b_new[i];
        acc += d0[2 * i + 1] * b_new[i] + d0[2 * i] * a_old[i];
    }
    out.hyp.w = x - om * acc;
    out.hyp.w1 = y;
    if (jet) {
        jet->x = x;
        jet->y = y;
        st.R.jets(x, y, jet->J);
        jet->a_old = a_old;
        jet->b_new = b_new;
        jet->iters = it + 1;
    }
    return out;
}

inline FullState<double> NormalFormChain::inverse_step(const NormalFormStep& st, const FullState<double>& out,
                                                       bool check) const {
    const double eps = m_.eps_d(), om = m_.spec.omega;
    const int nm = static_cast<int>(st.modes.size());
    std::vector<double> a_new(nm), b_new(nm), a_old(nm), linv(nm);
    for (int i = 0; i < nm; ++i) {
        int k = st.modes[i];
        a_new[i] = out.ell.wc[k];
        b_new[i] = out.ell.w1c[k];
        linv[i] = eps / std::sqrt(k * k - 1.0);
    }
    const double X = out.hyp.w, y = out.hyp.w1;
    std::vector<double> t0, t1, u0, e0, u1, e1;
    st.R.contract_w1(y, t0, t1);
    double x = X;
    for (int it = 0;; ++it) {
        st.R.eval_1d(t0, false, x, u0, e0);
        st.R.eval_1d(t1, false, x, u1, e1);
        double acc = 0, accp = 0;
        for (int i = 0; i < nm; ++i) {
            a_old[i] = a_new[i] + linv[i] * u0[2 * i + 1];
            acc += u1[2 * i + 1] * b_new[i] + u1[2 * i] * a_old[i];
            accp += e1[2 * i + 1] * b_new[i] + e1[2 * i] * a_old[i] + u1[2 * i] * linv[i] * e0[2 * i + 1];
        }
        double h = x - X - om * acc, hp = 1 - om * accp;
        double dx = h / hp;
        if (!std::isfinite(dx)) fail(ErrorKind::NewtonDiverged, "inverse step Newton produced a non-finite update");
        x -= dx;
        if (std::abs(dx) <= cfg_.newton_tol * (1 + std::abs(x))) break;
        if (it >= cfg_.newton_max) fail(ErrorKind::NewtonDiverged, "inverse step Newton did not converge");
    }
    st.R.eval_1d(t0, false, x, u0, e0);
    FullState<double> in = out;
    double acc = 0;
    for (int i = 0; i < nm; ++i) {
        int k = st.modes[i];
        a_old[i] = a_new[i] + linv[i] * u0[2 * i + 1];
        in.ell.wc[k] = a_old[i];
        in.ell.w1c[k] = b_new[i] - linv[i] * u0[2 * i];
        acc += e0[2 * i + 1] * b_new[i] + e0[2 * i] * a_old[i];
    }
    in.hyp.w = x;
    in.hyp.w1 = y - om * acc;
    if (check) check_domain(st, in);
    return in;
}

inline FullState<double> NormalFormChain::jvp_step(const NormalFormStep& st, const StepJet& jet,
                                                   const FullState<double>& d) const {
    const double eps = m_.eps_d(), om = m_.spec.omega;
    const int nm = static_cast<int>(st.modes.size());
    const auto& J = jet.J;
    const double dx = d.hyp.w, dw1 = d.hyp.w1;
    std::vector<double> beta0(nm), beta1(nm), da(nm), linv(nm);
    double num = dw1, den = 1;
    for (int i = 0; i < nm; ++i) {
        int k = st.modes[i];
        linv[i] = eps / std::sqrt(k * k - 1.0);
        da[i] = d.ell.wc[k];
        const auto &Ra = J[2 * i], &Rb = J[2 * i + 1];
        beta0[i] = d.ell.w1c[k] + linv[i] * Ra.w * dx;
        beta1[i] = linv[i] * Ra.w1;
        num += om * (Rb.ww * jet.b_new[i] * dx + Rb.w * beta0[i] + Ra.ww * jet.a_old[i] * dx + Ra.w * da[i]);
        den -= om * (Rb.ww1 * jet.b_new[i] + Rb.w * beta1[i] + Ra.ww1 * jet.a_old[i]);
    }
    const double dy = num / den;
    FullState<double> r = d;
    double acc = 0;
    for (int i = 0; i < nm; ++i) {
        int k = st.modes[i];
        const auto &Ra = J[2 * i], &Rb = J[2 * i + 1];
        double db_new = beta0[i] + beta1[i] * dy;
        r.ell.w1c[k] = db_new;
        r.ell.wc[k] = da[i] - linv[i] * (Rb.w * dx + Rb.w1 * dy);
        acc += (Rb.ww1 * dx + Rb.w1w1 * dy) * jet.b_new[i] + Rb.w1 * db_new + (Ra.ww1 * dx + Ra.w1w1 * dy) * jet.a_old[i] +
               Ra.w1 * da[i];
    }
    r.hyp.w = dx - om * acc;
    r.hyp.w1 = dy;
    return r;
}

// Probes the nested-domain bounds |eps G_m| <= 1 - 2^{-m}, |eps^m Gtilde_m|_{C^2} <= eps/2^m
// for the systems m = 2 .. size()+1 (m-1 steps applied).
inline AuditReport NormalFormChain::audit(int sample_count, unsigned seed, double radius_scale) const {
    AuditReport rep;
    rep.eps = eps();
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    const int n = m_.n_modes();
    // one set of unit-disc points and unit directions shared by every m,
    // so that step-to-step ratios compare like with like
    std::vector<std::array<double, 2>> pts;
    std::vector<FullState<double>> dirs;
    for (int s = 0; s < sample_count; ++s) {
        double r = s == 0 ? 1.0 : std::sqrt(0.5 * (U(rng) + 1)), th = M_PI * U(rng);
        pts.push_back({r * std::cos(th), r * std::sin(th)});
        FullState<double> dz(n);
        for (int k = 2; k <= n; ++k) {
            dz.ell.wc[k] = U(rng) / k;
            dz.ell.w1c[k] = U(rng) / k;
        }
        dz *= 1.0 / y1_norm(dz.ell);
        dirs.push_back(dz);
    }
    std::vector<double> gt;
    for (int m = 2; m <= size() + 1; ++m) {
        AuditEntry e;
        e.m = m;
        e.radius = std::min(radius_scale * domain_radius(m), box_);
        const int upto = m - 1;
        double g_max = 0, gt_max = 0, sup_max = 0;
        for (int s = 0; s < sample_count; ++s) {
            FullState<double> z(n);
            z.hyp = {e.radius * pts[s][0], e.radius * pts[s][1]};
            // value, first and second derivatives of the residual along each hyperbolic axis
            const double h = 1e-3;
            auto f0 = residual_at(z.hyp.w, z.hyp.w1, upto);
            double c2 = y1_norm(f0);
            sup_max = std::max(sup_max, c2);
            for (int dir = 0; dir < 2; ++dir) {
                double dw = dir == 0 ? h : 0, dw1 = dir == 1 ? h : 0;
                auto fp = residual_at(z.hyp.w + dw, z.hyp.w1 + dw1, upto);
                auto fm = residual_at(z.hyp.w - dw, z.hyp.w1 - dw1, upto);
                EllState<double> d1(n), d2(n);
                for (int k = 2; k <= n; ++k) {
                    d1.wc[k] = (fp.wc[k] - fm.wc[k]) / (2 * h);
                    d1.w1c[k] = (fp.w1c[k] - fm.w1c[k]) / (2 * h);
                    d2.wc[k] = (fp.wc[k] - 2 * f0.wc[k] + fm.wc[k]) / (h * h);
                    d2.w1c[k] = (fp.w1c[k] - 2 * f0.w1c[k] + fm.w1c[k]) / (h * h);
                }
                c2 = std::max({c2, y1_norm(d1), y1_norm(d2)});
            }
            gt_max = std::max(gt_max, c2);
            // D_{z^c} of the elliptic nonlinearity along a unit Y1 direction
            const double hh = 1e-6;
            auto zp = z, zm = z;
            zp.axpy(hh, dirs[s]);
            zm.axpy(-hh, dirs[s]);
            auto np = transformed_nonlinearity(zp, upto, false), nmm = transformed_nonlinearity(zm, upto, false);
            EllState<double> dG(n);
            for (int k = 2; k <= n; ++k) {
                dG.wc[k] = (np.ell.wc[k] - nmm.ell.wc[k]) / (2 * hh);
                dG.w1c[k] = (np.ell.w1c[k] - nmm.ell.w1c[k]) / (2 * hh);
            }
            g_max = std::max(g_max, y1_norm(dG));
        }
        e.norm_G = g_max;
        e.norm_Gtilde = gt_max;
        e.sup_Gtilde = sup_max;
        e.G_ok = g_max <= 1 - std::ldexp(1.0, -m);
        e.Gtilde_ok = gt_max <= eps() * std::ldexp(1.0, -m);
        gt.push_back(sup_max);
        rep.entries.push_back(e);
        if (rep.first_violation < 0 && !(e.G_ok && e.Gtilde_ok)) rep.first_violation = m;
    }
    for (size_t i = 0; i + 1 < rep.entries.size(); ++i) rep.entries[i].ratio = gt[i + 1] / gt[i];
    if (!rep.entries.empty()) rep.entries.back().ratio = std::nan("");
    return rep;
}

}  // namespace breather
