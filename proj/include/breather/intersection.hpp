#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "manifolds.hpp"
#include "transformed_flow.hpp"

namespace breather {

// Three times the time the Duffing homoclinic needs to decay to 1e-3 of its peak
inline double default_T_tail() { return 3 * std::acosh(1e3); }

struct IntersectionConfig {
    int order = 4;             // raw float128 integrator
    double dt = 1e-3;
    double delta = 1e-12;      // start on the linear (un)stable direction; f odd makes the error O(delta^3)
    double t_max = 60;         // horizon of the section search
    int interp_nodes = 14;     // step nodes of the Lagrange interpolant at a crossing
    double T_tail = 0;         // 0 picks default_T_tail()
    double tail_window = 5;
    double root_tol = 1e-12;
    int max_bisect = 50;
    double b = 1.0;            // section graph radius after rescaling
    double node_dt = 0.05;     // spacing of stored orbit nodes
    double tangent_dt = 1e-3;  // double precision variational runs
    int n_time = 64;           // samples per period of the physical field
    int defect_samples = 24;   // node intervals re-integrated at dt/2
    double integrator_tol = 1e-10;  // bound on the defect of one node interval
    bool check_upsilon = true;      // the Upsilon comparison costs one tangent per mode

    double tail_start() const { return T_tail > 0 ? T_tail : default_T_tail(); }
    double t_end() const { return tail_start() + tail_window; }
    int stride() const { return std::max(1, static_cast<int>(std::lround(node_dt / dt))); }

    void validate() const {
        if (order != 2 && order != 4 && order != 6 && order != 8) fail(ErrorKind::InvalidConfig, "order must be 2, 4, 6 or 8");
        if (!(dt > 0) || !(tangent_dt > 0) || !(node_dt >= dt)) fail(ErrorKind::InvalidConfig, "bad step sizes");
        if (!(delta > 0 && delta < 1e-3)) fail(ErrorKind::InvalidConfig, "delta must lie in (0, 1e-3)");
        if (interp_nodes < 4) fail(ErrorKind::InvalidConfig, "interp_nodes must be at least 4");
        if (!(tail_window > 0) || T_tail < 0) fail(ErrorKind::InvalidConfig, "bad tail window");
        if (!(root_tol > 0) || max_bisect < 1) fail(ErrorKind::InvalidConfig, "bad root finding settings");
        if (!(integrator_tol > 0)) fail(ErrorKind::InvalidConfig, "integrator_tol must be positive");
        if (!(b > 0)) fail(ErrorKind::InvalidConfig, "b must be positive");
        if (!(t_max > 0)) fail(ErrorKind::InvalidConfig, "t_max must be positive");
    }
};

// Coordinates around x0 on the Duffing homoclinic
struct SectionFrame {
    HypState<double> x0, v, d;  // v the Duffing field at x0, d = DH0(x0)

    double pv(const FullState<double>& z) const { return dot(z.hyp, v) / std::hypot(v.w, v.w1); }
    double pd(const FullState<double>& z) const { return dot(z.hyp, d) / std::hypot(d.w, d.w1); }
    const EllState<double>& py1(const FullState<double>& z) const { return z.ell; }

private:
    double dot(const HypState<double>& a, const HypState<double>& b) const {
        return (a.w - x0.w) * b.w + (a.w1 - x0.w1) * b.w1;
    }
};

// x0 = homoclinic(0): there d = DH0(x0) = (4/sqrt f3, 0) and v = (0, -4/sqrt f3)
inline SectionFrame make_section_frame(double f3) {
    SectionFrame F;
    F.x0 = homoclinic(0.0, f3);
    F.v = duffing_field(F.x0, f3);
    F.d = {-F.x0.w + f3 * F.x0.w * F.x0.w * F.x0.w / 8, F.x0.w1};
    return F;
}

// Lagrange interpolation through nodes at local positions 0..P-1
template <class R>
FullState<R> lagrange(const std::deque<FullState<R>>& nodes, const R& s) {
    const int P = static_cast<int>(nodes.size());
    FullState<R> r(nodes.front().n_modes());
    for (int p = 0; p < P; ++p) {
        R l(1);
        for (int q = 0; q < P; ++q)
            if (q != p) l *= (s - R(q)) / R(p - q);
        r.axpy(l, nodes[p]);
    }
    return r;
}

template <class R>
struct Crossing {
    double tau = 0;
    FullState<R> state;
};

// Integrates the raw system until each event changes sign and places the zeros
// on a Lagrange interpolant through the surrounding step nodes. A fractional
// integrator step would add an O(dt^(p+1)) local error that swamps the
// exponentially small elliptic splitting read off at the crossing.
template <class R>
std::vector<Crossing<R>> integrate_to_crossings(const Model<R>& m, FullState<R> z, double dir,
                                                const IntersectionConfig& cfg, Trajectory<R>* path,
                                                const std::vector<std::function<R(const FullState<R>&)>>& events) {
    RawFlow<R> flow(m, cfg.order);
    auto f = flow.force(z);
    const int P = cfg.interp_nodes;
    const size_t ne = events.size();
    std::vector<int> sign0(ne);
    std::vector<long> nc(ne, -1);
    std::vector<std::optional<Crossing<R>>> out(ne);
    for (size_t e = 0; e < ne; ++e) sign0[e] = events[e](z) > 0 ? 1 : -1;
    std::deque<FullState<R>> buf{z};
    const long nmax = static_cast<long>(cfg.t_max / cfg.dt);
    const int stride = cfg.stride();
    if (path) {
        path->eps = m.eps_d();
        path->push(0, z);
    }
    long n = 0;
    size_t done = 0;
    while (done < ne) {
        flow.step(z, f, R(dir * cfg.dt));
        ++n;
        buf.push_back(z);
        if (static_cast<int>(buf.size()) > P) buf.pop_front();
        if (path && n % stride == 0) path->push(dir * n * cfg.dt, z);
        if (!finite(z.hyp.w)) fail(ErrorKind::Overflow, "manifold orbit blew up");
        for (size_t e = 0; e < ne; ++e) {
            if (nc[e] < 0 && (events[e](z) > 0 ? 1 : -1) != sign0[e]) nc[e] = n;
            if (nc[e] >= 0 && !out[e] && n >= nc[e] + P / 2 - 1 && static_cast<int>(buf.size()) == P) {
                long first = n - P + 1;
                R lo(nc[e] - 1 - first), hi = lo + R(1);
                for (int it = 0; it < 120; ++it) {
                    R mid = (lo + hi) / R(2);
                    ((events[e](lagrange(buf, mid)) > 0 ? 1 : -1) == sign0[e] ? lo : hi) = mid;
                }
                Crossing<R> c;
                c.state = lagrange(buf, lo);
                c.tau = dir * (static_cast<double>(first) + to_d(lo)) * cfg.dt;
                out[e] = c;
                ++done;
            }
        }
        if (n > nmax) fail(ErrorKind::NoCrossing, "manifold orbit misses the section within the horizon");
    }
    std::vector<Crossing<R>> r;
    for (auto& c : out) r.push_back(*c);
    return r;
}

struct SectionHit {
    double tau = 0;                  // flight time from the local manifold start
    FullState<double> transformed;   // crossing of Sigma in transformed coordinates
    FullState<quad> raw;             // its raw preimage
    FullState<quad> raw_turn;        // crossing of the raw reversibility section w1 = 0
    double tau_turn = 0;
};

struct TailResponse {
    double energy = 0;    // elliptic energy of the tail per unit perturbation squared
    double sup_y1 = 0;    // sup over the tail window of the Y1 norm
    double slope = 0;     // multiple of the w direction that removes the growing mode
    double dgrow_w = 0;   // growing coordinate at the end per unit w perturbation
};

struct BreatherResult {
    double eps = 0;
    double s0 = 0.5, h0 = 0, h1 = 0, h_s0 = 0;
    int bisect_steps = 0;
    int shoot_iterations = 0;
    double splitting = 0;            // Y1 norm of the manifold splitting on the reversibility section
    double Q_plus = 0, Q_minus = 0;  // tail energies per unit splitting squared
    double energy_on_center = 0;     // Htilde(p(s0))
    double energy_on_manifolds = 0;  // max |H| at the two manifold crossings
    double T_tail = 0;
    double tail_amp = 0;             // sup_{|tau| >= T_tail} |W^c|_{Y1} on the assembled orbit
    double tail_linear = 0;          // same from the variational equation
    double defect = 0, integrator_tol = 0;
    double symmetry_defect = 0;
    double hyp_end = 0;              // |W^h| at the ends of the orbit
    double upsilon_gap = 0;          // |Upsilon^d - Upsilon^d_1| at q(s0)
    Trajectory<double> orbit;        // transformed coordinates
    Trajectory<double> raw_orbit;
    PhysicalField physical;
};

class IntersectionProblem {
public:
    IntersectionProblem(const NormalFormChain& ch, IntersectionConfig cfg = {})
        : ch_(&ch), cfg_(cfg), frame_(make_section_frame(ch.model().nl.f3())) {
        cfg_.validate();
        mq_ = make_model<quad>(quad(ch.eps()), ch.model().nl, ch.model().n_modes(), ch.model().spec.collocation_size);
    }

    const NormalFormChain& chain() const { return *ch_; }
    const IntersectionConfig& config() const { return cfg_; }
    const SectionFrame& frame() const { return frame_; }
    const Model<quad>& model_q() const { return mq_; }
    double alpha_hat() const { return ch_->alpha_hat(); }

    // Crossing of the manifold orbit with Sigma. cu: forward from the unstable
    // side of the origin; cs: backward from the stable side.
    const SectionHit& section_hit(ManifoldKind kind) const {
        auto& slot = kind == ManifoldKind::cu ? hit_u_ : hit_s_;
        if (kind != ManifoldKind::cu && kind != ManifoldKind::cs) fail(ErrorKind::InvalidConfig, "section_hit needs cs or cu");
        if (slot) return *slot;
        double dir = kind == ManifoldKind::cu ? 1 : -1;
        FullState<quad> z(mq_.n_modes());
        quad s = quad(cfg_.delta) / sqrt(quad(2));
        z.hyp = {s, quad(dir) * s};
        std::vector<std::function<quad(const FullState<quad>&)>> ev{
            [](const FullState<quad>& x) { return x.hyp.w1; },
            [this](const FullState<quad>& x) {
                return quad(frame_.pv(ch_->forward(state_cast<double>(x), -1, false)));
            }};
        auto c = integrate_to_crossings<quad>(mq_, z, dir, cfg_, nullptr, ev);
        SectionHit h;
        h.raw_turn = c[0].state;
        h.tau_turn = c[0].tau;
        h.raw = c[1].state;
        h.tau = c[1].tau;
        h.transformed = ch_->forward(state_cast<double>(h.raw), -1, false);
        slot = h;
        return *slot;
    }

    // Elliptic parts of the M_s and M_u crossings scaled by e^{-alpha_hat}: (Y_tilde, Y1_tilde)
    std::pair<EllState<double>, EllState<double>> endpoints() const {
        double sc = std::exp(-alpha_hat());
        auto Y = section_hit(ManifoldKind::cs).transformed.ell;
        auto Y1 = section_hit(ManifoldKind::cu).transformed.ell;
        for (int k = 2; k <= Y.n_modes(); ++k) {
            Y.wc[k] *= sc;
            Y.w1c[k] *= sc;
            Y1.wc[k] *= sc;
            Y1.w1c[k] *= sc;
        }
        return {Y, Y1};
    }

    // d-coordinate of the point of M_cs (M_cu) on Sigma with rescaled elliptic part Y_tilde.
    // One Newton step on the linearization at the manifold crossing; the tangent
    // space is the span of directions without growth along the orbit.
    double upsilon(ManifoldKind kind, const EllState<double>& Y_tilde, int* iterations = nullptr) const {
        const auto& U = slopes(kind);
        const auto& h = section_hit(kind);
        if (y1_norm(Y_tilde) > cfg_.b) fail(ErrorKind::DomainExceeded, "Y_tilde outside the section graph domain");
        double sc = std::exp(alpha_hat()), r = frame_.pd(h.transformed);
        int i = 0;
        for (int k = 2; k <= Y_tilde.n_modes(); ++k) {
            r += U.g[i++] * (sc * Y_tilde.wc[k] - h.transformed.ell.wc[k]);
            r += U.g[i++] * (sc * Y_tilde.w1c[k] - h.transformed.ell.w1c[k]);
        }
        if (iterations) *iterations = 1;
        return r;
    }

    // h(s) = Htilde(p(s)) - Htilde(p1(s)) on the segment q(s) = (1 - s) Y1_tilde + s Y_tilde.
    // Both energies are tail energies of the linear response to the splitting.
    double energy_gap(double s) const {
        const auto& G = gap();
        return G.d2 * ((1 - s) * (1 - s) * G.Qp - s * s * G.Qm);
    }

    BreatherResult find_breather() const {
        const auto& G = gap();
        BreatherResult res;
        res.eps = ch_->eps();
        res.T_tail = cfg_.tail_start();
        res.splitting = G.norm;
        res.Q_plus = G.Qp;
        res.Q_minus = G.Qm;
        res.h0 = energy_gap(0);
        res.h1 = energy_gap(1);
        if (!(res.h0 >= 0 && res.h1 <= 0))
            fail(ErrorKind::NoSignChange, "h(0) = " + std::to_string(res.h0) + ", h(1) = " + std::to_string(res.h1));
        double lo = 0, hi = 1;
        int n = 0;
        while (n < cfg_.max_bisect && hi - lo > 1e-15) {
            double mid = (lo + hi) / 2;
            (energy_gap(mid) >= 0 ? lo : hi) = mid;
            ++n;
        }
        res.s0 = (lo + hi) / 2;
        res.bisect_steps = n;
        res.h_s0 = energy_gap(res.s0);
        if (std::abs(res.h_s0) > cfg_.root_tol) fail(ErrorKind::NoSignChange, "bisection did not reach root_tol");
        res.energy_on_center = G.d2 * (1 - res.s0) * (1 - res.s0) * G.Qp;

        const auto& hu = section_hit(ManifoldKind::cu);
        const auto& hs = section_hit(ManifoldKind::cs);
        res.energy_on_manifolds =
            std::max(std::abs(to_d(hamiltonian(mq_, hu.raw_turn))), std::abs(to_d(hamiltonian(mq_, hs.raw_turn))));

        // p(s0) in raw coordinates. The w shift is the multiple of e_w that keeps the
        // forward response to the elliptic displacement from growing; matching the
        // exact H instead would be off by the O(dt^p) energy drift of the scheme.
        FullState<quad> X = hs.raw_turn;
        X.axpy(quad(1 - res.s0), G.delta);
        X.hyp.w += quad((1 - res.s0) * G.norm * G.slope_p);
        // secant on the unstable coordinate at t_end removes the second order growth;
        // the double tangent only seeds the first step
        Trajectory<quad> fwd;
        auto shoot = [&] {
            fwd = integrate_raw(mq_, X, 0, cfg_.t_end(), cfg_.dt, cfg_.stride(), cfg_.order);
            return fwd.back().hyp.w + fwd.back().hyp.w1;
        };
        quad g = shoot(), w_prev = X.hyp.w, g_prev = g;
        quad dw = g / quad(G.dgrow_w);
        for (res.shoot_iterations = 0; res.shoot_iterations < 12 && abs(dw) > quad(1e-31); ++res.shoot_iterations) {
            X.hyp.w -= dw;
            g = shoot();
            quad slope = (g - g_prev) / (X.hyp.w - w_prev);
            w_prev = X.hyp.w;
            g_prev = g;
            dw = g / slope;
        }
        Trajectory<quad> bwd = integrate_raw(mq_, X, 0, -cfg_.t_end(), cfg_.dt, cfg_.stride(), cfg_.order);
        Trajectory<quad> all;
        all.eps = res.eps;
        for (size_t i = bwd.size(); i-- > 1;) all.push(bwd.tau[i], bwd.states[i]);
        for (size_t i = 0; i < fwd.size(); ++i) all.push(fwd.tau[i], fwd.states[i]);

        for (size_t i = 0; i < all.size(); ++i) {
            if (std::abs(all.tau[i]) >= res.T_tail - 1e-9)
                res.tail_amp = std::max(res.tail_amp, to_d(y1_norm(all.states[i].ell)));
        }
        res.tail_linear = G.norm * std::max((1 - res.s0) * G.sup_p, res.s0 * G.sup_m);
        for (size_t i = 1; i < std::min(fwd.size(), bwd.size()); ++i) {
            double e = std::abs(to_d(fwd.states[i].hyp.w - bwd.states[i].hyp.w)) +
                       std::abs(to_d(fwd.states[i].hyp.w1 + bwd.states[i].hyp.w1));
            res.symmetry_defect = std::max(res.symmetry_defect, e);
        }
        res.hyp_end = std::max(to_d(x_norm(fwd.back().hyp)), to_d(x_norm(bwd.back().hyp)));
        measure_defect(all, res);

        res.raw_orbit.system = SystemTag::raw;
        res.raw_orbit.eps = res.eps;
        res.orbit.system = SystemTag::transformed;
        res.orbit.eps = res.eps;
        for (size_t i = 0; i < all.size(); ++i) {
            auto zd = state_cast<double>(all.states[i]);
            res.raw_orbit.push(all.tau[i], zd);
            res.orbit.push(all.tau[i], ch_->forward(zd, -1, false));
        }
        res.physical = reconstruct_physical(res.raw_orbit, cfg_.n_time);

        // the open equivalence h(s0) = 0 <=> Upsilon^d = Upsilon^d_1, checked at first order
        auto [Y, Y1] = endpoints();
        EllState<double> q(Y.n_modes());
        for (int k = 2; k <= Y.n_modes(); ++k) {
            q.wc[k] = (1 - res.s0) * Y1.wc[k] + res.s0 * Y.wc[k];
            q.w1c[k] = (1 - res.s0) * Y1.w1c[k] + res.s0 * Y.w1c[k];
        }
        if (cfg_.check_upsilon && y1_norm(q) <= cfg_.b)
            res.upsilon_gap = std::abs(upsilon(ManifoldKind::cs, q) - upsilon(ManifoldKind::cu, q));
        else
            res.upsilon_gap = std::numeric_limits<double>::quiet_NaN();
        return res;
    }

    // Linear response of the elliptic tail to a perturbation dz of the orbit through base,
    // with the growing hyperbolic mode removed by a multiple of the w direction
    TailResponse tail_response(const FullState<double>& base, const FullState<double>& dz, double dir) const {
        FullState<double> ew(base.n_modes());
        ew.hyp.w = 1;
        double T = cfg_.t_end();
        int stride = std::max(1, static_cast<int>(std::lround(cfg_.node_dt / cfg_.tangent_dt)));
        auto run = integrate_raw_tangent(ch_->model(), base, {dz, ew}, 0, dir * T, cfg_.tangent_dt, stride);
        auto grow = [dir](const FullState<double>& t) { return (t.hyp.w + dir * t.hyp.w1) / std::sqrt(2.0); };
        TailResponse r;
        r.dgrow_w = grow(run.tangents[1].back()) * std::sqrt(2.0);
        r.slope = -grow(run.tangents[0].back()) / grow(run.tangents[1].back());
        int cnt = 0;
        for (size_t i = 0; i < run.base.size(); ++i) {
            if (std::abs(run.base.tau[i]) < cfg_.tail_start() - 1e-9) continue;
            auto e = run.tangents[0].states[i];
            e.axpy(r.slope, run.tangents[1].states[i]);
            r.energy += elliptic_energy(ch_->model(), e.ell);
            r.sup_y1 = std::max(r.sup_y1, y1_norm(e.ell));
            ++cnt;
        }
        if (cnt == 0) fail(ErrorKind::SpanError, "empty tail window");
        r.energy /= cnt;
        return r;
    }

private:
    struct Gap {
        FullState<quad> delta;  // p_u - p_s on the reversibility section
        double norm = 0, d2 = 0;
        double Qp = 0, Qm = 0, sup_p = 0, sup_m = 0, slope_p = 0;
        double dgrow_w = 0;  // d(w + w1)(t_end) / dw along the forward run
    };
    struct Slopes {
        std::vector<double> g;  // d Upsilon^d / dY in the flat elliptic layout
    };

    const Gap& gap() const {
        if (gap_) return *gap_;
        const auto& hu = section_hit(ManifoldKind::cu);
        const auto& hs = section_hit(ManifoldKind::cs);
        Gap G;
        G.delta = hu.raw_turn;
        G.delta -= hs.raw_turn;
        G.norm = to_d(y1_norm(G.delta.ell));
        G.d2 = G.norm * G.norm;
        if (!(G.norm > 0)) fail(ErrorKind::NoSignChange, "manifold splitting vanished to working precision");
        FullState<quad> unit = G.delta;
        unit *= quad(1) / quad(G.norm);
        FullState<quad> mid = hs.raw_turn;
        mid.axpy(quad(0.5), G.delta);
        auto base = state_cast<double>(mid);
        auto du = state_cast<double>(unit);
        auto tp = tail_response(base, du, 1);
        du *= -1.0;
        auto tm = tail_response(base, du, -1);
        G.Qp = tp.energy;
        G.Qm = tm.energy;
        G.sup_p = tp.sup_y1;
        G.sup_m = tm.sup_y1;
        G.slope_p = tp.slope;
        G.dgrow_w = tp.dgrow_w;
        gap_ = G;
        return *gap_;
    }

    const Slopes& slopes(ManifoldKind kind) const {
        auto& slot = kind == ManifoldKind::cu ? slopes_u_ : slopes_s_;
        if (slot) return *slot;
        const auto& h = section_hit(kind);
        auto xraw = state_cast<double>(h.raw);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(forward_jacobian(*ch_, xraw));
        const int n = ch_->model().n_modes(), dim = 2 * n;
        auto pull = [&](const std::vector<double>& e) {
            Eigen::VectorXd v = lu.solve(Eigen::Map<const Eigen::VectorXd>(e.data(), dim));
            return FullState<double>::from_flat(std::vector<double>(v.data(), v.data() + dim));
        };
        double dn = std::hypot(frame_.d.w, frame_.d.w1);
        std::vector<double> ed(dim, 0.0);
        ed[0] = frame_.d.w / dn;
        ed[1] = frame_.d.w1 / dn;
        std::vector<FullState<double>> dirs{pull(ed)};
        for (int i = 2; i < dim; ++i) {
            std::vector<double> e(dim, 0.0);
            e[i] = 1;
            dirs.push_back(pull(e));
        }
        double dir = kind == ManifoldKind::cs ? 1 : -1;
        auto run = integrate_raw_tangent(ch_->model(), xraw, dirs, 0, dir * cfg_.t_end(), cfg_.tangent_dt,
                                         static_cast<int>(cfg_.t_end() / cfg_.tangent_dt));
        auto grow = [dir](const FullState<double>& t) { return t.hyp.w + dir * t.hyp.w1; };
        Slopes S;
        double gd = grow(run.tangents[0].back());
        for (int i = 1; i < dim - 1; ++i) S.g.push_back(-grow(run.tangents[i].back()) / gd);
        slot = S;
        return *slot;
    }

    // Re-integrate sampled node intervals at dt/2 and compare with the stored nodes
    void measure_defect(const Trajectory<quad>& all, BreatherResult& res) const {
        res.integrator_tol = cfg_.integrator_tol;
        size_t m = all.size() - 1;
        int ns = std::max(1, std::min<int>(cfg_.defect_samples, static_cast<int>(m)));
        for (int j = 0; j < ns; ++j) {
            size_t i = (m - 1) * j / std::max(1, ns - 1);
            auto half = integrate_raw(mq_, all.states[i], all.tau[i], all.tau[i + 1], cfg_.dt / 2, 1 << 30, cfg_.order);
            auto a = all.states[i + 1].flat(), b = half.back().flat();
            for (size_t k = 0; k < a.size(); ++k) res.defect = std::max(res.defect, to_d(abs(a[k] - b[k])));
        }
    }

    const NormalFormChain* ch_;
    IntersectionConfig cfg_;
    SectionFrame frame_;
    Model<quad> mq_;
    mutable std::optional<SectionHit> hit_u_, hit_s_;
    mutable std::optional<Gap> gap_;
    mutable std::optional<Slopes> slopes_u_, slopes_s_;
};

struct ExpFit {
    double c_fit = 0, intercept = 0, r_squared = 0;
    int used = 0;
    std::vector<double> excluded;  // eps values with tails at or below the noise floor
};

// Least squares of log(tail) against 1/eps; slope = -c_fit
inline ExpFit fit_exponential(const std::vector<std::pair<double, double>>& sweep, double noise_floor = 1e-30) {
    ExpFit F;
    std::vector<double> x, y;
    for (auto [eps, tail] : sweep) {
        if (!(eps > 0)) fail(ErrorKind::InvalidConfig, "eps must be positive");
        if (!(tail > noise_floor)) {
            F.excluded.push_back(eps);
            continue;
        }
        x.push_back(1 / eps);
        y.push_back(std::log(tail));
    }
    F.used = static_cast<int>(x.size());
    if (F.used < 4) fail(ErrorKind::DegenerateFit, "fewer than 4 sweep points above the noise floor");
    double n = F.used, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < F.used; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double den = n * sxx - sx * sx;
    if (!(std::abs(den) > 0)) fail(ErrorKind::DegenerateFit, "all sweep points share one eps");
    double slope = (n * sxy - sx * sy) / den;
    F.intercept = (sy - slope * sx) / n;
    F.c_fit = -slope;
    double my = sy / n, ss_tot = 0, ss_res = 0;
    for (int i = 0; i < F.used; ++i) {
        double r = y[i] - (F.intercept + slope * x[i]);
        ss_res += r * r;
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    F.r_squared = ss_tot > 0 ? 1 - ss_res / ss_tot : 1.0;
    return F;
}

}  // namespace breather
