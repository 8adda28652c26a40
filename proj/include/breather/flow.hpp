#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "duffing.hpp"
#include "model.hpp"

namespace breather {

enum class SystemTag { raw, transformed, regular, duffing };

inline const char* to_string(SystemTag s) {
    switch (s) {
        case SystemTag::raw: return "raw";
        case SystemTag::transformed: return "transformed";
        case SystemTag::regular: return "regular";
        case SystemTag::duffing: return "duffing";
    }
    return "?";
}

template <class R>
struct Trajectory {
    SystemTag system = SystemTag::raw;
    double eps = 0;
    std::vector<double> tau;
    std::vector<FullState<R>> states;
    std::vector<FullState<R>> derivs;  // optional, enables Hermite output

    bool empty() const { return tau.empty(); }
    size_t size() const { return tau.size(); }
    const FullState<R>& back() const { return states.back(); }

    void push(double t, const FullState<R>& z) {
        tau.push_back(t);
        states.push_back(z);
    }

    // Dense output: cubic Hermite with stored derivatives, else cubic Lagrange
    FullState<R> at(double t) const {
        if (tau.empty()) fail(ErrorKind::EmptyOrbit, "empty trajectory");
        bool inc = tau.back() >= tau.front();
        double lo = inc ? tau.front() : tau.back(), hi = inc ? tau.back() : tau.front();
        if (t < lo - 1e-12 || t > hi + 1e-12) fail(ErrorKind::SpanError, "time outside trajectory span");
        if (tau.size() == 1) return states[0];
        size_t i = locate(t, inc);
        if (!derivs.empty()) {
            double h = tau[i + 1] - tau[i], s = (t - tau[i]) / h;
            double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
            double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
            FullState<R> r = R(h00) * states[i];
            r.axpy(R(h10 * h), derivs[i]).axpy(R(h01), states[i + 1]).axpy(R(h11 * h), derivs[i + 1]);
            return r;
        }
        size_t a = i > 0 ? i - 1 : 0;
        size_t b = std::min(a + 3, tau.size() - 1);
        if (b - a < 3 && a > 0) a = b >= 3 ? b - 3 : 0;
        FullState<R> r(states[0].n_modes());
        for (size_t p = a; p <= b; ++p) {
            double l = 1;
            for (size_t q = a; q <= b; ++q)
                if (q != p) l *= (t - tau[q]) / (tau[p] - tau[q]);
            r.axpy(R(l), states[p]);
        }
        return r;
    }

private:
    size_t locate(double t, bool inc) const {
        size_t lo = 0, hi = tau.size() - 1;
        while (hi - lo > 1) {
            size_t mid = (lo + hi) / 2;
            if ((tau[mid] <= t) == inc) lo = mid;
            else hi = mid;
        }
        return lo;
    }
};

// Splitting integrator for the raw system: H = T + H_rot + V with
// T = pi w1^2/2 (drift), H_rot the harmonic part of the elliptic energy
// (exact rotation) and V depending on positions only (kick).
// kick(h/2) o [drift + rotation](h) o kick(h/2) is symplectic and
// reversible under (w, w1, a, b) -> (w, -w1, a, -b).
template <class R>
class RawFlow {
public:
    struct Force {
        OddField<R> PN;
        std::vector<R> nprime;  // only filled when tangents are propagated
    };

    // order 2: one splitting step; orders 4, 6, 8: recursive symmetric triple-jump compositions
    explicit RawFlow(const Model<R>& m, int order = 4) : m_(&m), order_(order) {
        if (order != 2 && order != 4 && order != 6 && order != 8)
            fail(ErrorKind::InvalidConfig, "integrator order must be 2, 4, 6 or 8");
        using std::pow;
        gamma_ = {R(1)};
        for (int p = 2; p < order; p += 2) {
            R c = pow(R(2), R(1) / R(p + 1));
            R g1 = R(1) / (R(2) - c), g0 = R(1) - R(2) * g1;
            std::vector<R> next;
            for (R g : {g1, g0, g1})
                for (const R& x : gamma_) next.push_back(g * x);
            gamma_ = std::move(next);
        }
    }

    const Model<R>& model() const { return *m_; }
    int order() const { return order_; }
    int stages() const { return static_cast<int>(gamma_.size()); }

    Force force(const FullState<R>& z, bool with_prime = false) const {
        auto v = m_->grid.synth(full_field(z));
        Force f;
        if (with_prime) f.nprime = N_prime(*m_, v);
        apply_N(*m_, v);
        f.PN = m_->grid.analyze(v);
        return f;
    }

    void step(FullState<R>& z, Force& f, const R& h) const {
        for (const R& g : gamma_) base_step(z, f, g * h);
    }

    // Step the state and a set of tangent vectors
    void step(FullState<R>& z, Force& f, const R& h, std::vector<FullState<R>>& dz) const {
        for (const R& g : gamma_) base_step(z, f, g * h, dz);
    }

private:
    struct Rot {
        R h;
        std::vector<R> c, s;
    };

    void base_step(FullState<R>& z, Force& f, const R& h) const {
        const Rot& r = rotation(h);
        R hh = h / R(2);
        kick(z, f.PN, hh);
        drift(z, h, r);
        f = force(z);
        kick(z, f.PN, hh);
    }

    void base_step(FullState<R>& z, Force& f, const R& h, std::vector<FullState<R>>& dz) const {
        const Rot& r = rotation(h);
        R hh = h / R(2);
        if (f.nprime.empty()) f = force(z, true);
        for (auto& d : dz) kick_tangent(d, f.nprime, hh);
        kick(z, f.PN, hh);
        drift(z, h, r);
        for (auto& d : dz) drift(d, h, r);
        f = force(z, true);
        for (auto& d : dz) kick_tangent(d, f.nprime, hh);
        kick(z, f.PN, hh);
    }

    const Rot& rotation(const R& h) const {
        for (const auto& r : rot_)
            if (r.h == h) return r;
        using std::cos;
        using std::sin;
        if (rot_.size() >= 32) rot_.erase(rot_.begin());
        Rot r{h, std::vector<R>(m_->n_modes() + 1, R(0)), std::vector<R>(m_->n_modes() + 1, R(0))};
        for (int k = 2; k <= m_->n_modes(); ++k) {
            R th = mode_L<R>(k) * h / m_->eps;
            r.c[k] = cos(th);
            r.s[k] = sin(th);
        }
        rot_.push_back(std::move(r));
        return rot_.back();
    }

    void kick(FullState<R>& z, const OddField<R>& PN, const R& h) const {
        const auto& m = *m_;
        z.hyp.w1 += h * (z.hyp.w - PN[1]) / m.omega;
        R c = h * m.eps / (m.omega * m.omega);
        for (int k = 2; k <= m.n_modes(); ++k) z.ell.w1c[k] += c * (z.ell.wc[k] - PN[k]) / mode_L<R>(k);
    }

    void kick_tangent(FullState<R>& d, const std::vector<R>& np, const R& h) const {
        kick(d, nonlinear_jvp(*m_, np, d), h);
    }

    void drift(FullState<R>& z, const R& h, const Rot& r) const {
        z.hyp.w += h * z.hyp.w1 / m_->omega;
        for (int k = 2; k <= m_->n_modes(); ++k) {
            R a = z.ell.wc[k], b = z.ell.w1c[k];
            z.ell.wc[k] = r.c[k] * a + r.s[k] * b;
            z.ell.w1c[k] = -r.s[k] * a + r.c[k] * b;
        }
    }

    const Model<R>* m_;
    int order_;
    std::vector<R> gamma_;
    mutable std::vector<Rot> rot_;
};

// Integrate the raw system from t0 to t1 with nominal step dt; the last
// step is shortened to land on t1. Stores every `stride`-th state.
template <class R>
Trajectory<R> integrate_raw(const Model<R>& m, const FullState<R>& z0, double t0, double t1, double dt,
                            int stride = 1, int order = 4) {
    if (!(dt > 0)) fail(ErrorKind::InvalidConfig, "dt must be positive");
    RawFlow<R> flow(m, order);
    Trajectory<R> traj;
    traj.eps = to_d(m.eps);
    FullState<R> z = z0;
    auto f = flow.force(z);
    double dir = t1 >= t0 ? 1.0 : -1.0;
    long n = static_cast<long>(std::floor(std::abs(t1 - t0) / dt + 1e-9));
    traj.push(t0, z);
    R h = R(dir * dt);
    for (long i = 1; i <= n; ++i) {
        flow.step(z, f, h);
        if (i % stride == 0 || (i == n && std::abs(t0 + dir * n * dt - t1) < 1e-12)) traj.push(t0 + dir * i * dt, z);
    }
    double rest = t1 - (t0 + dir * n * dt);
    if (std::abs(rest) > 1e-12) {
        flow.step(z, f, R(rest));
        traj.push(t1, z);
    }
    return traj;
}

// Fill derivs from a vector field so that at() uses Hermite interpolation
template <class R, class Field>
void attach_derivs(Trajectory<R>& t, Field&& field) {
    t.derivs.clear();
    for (const auto& z : t.states) t.derivs.push_back(field(z));
}

// Exact rotation of the elliptic part under z^c' = J z^c / eps
template <class R>
void rotate_elliptic(FullState<R>& z, const R& h, const R& eps) {
    using std::cos;
    using std::sin;
    for (int k = 2; k <= z.n_modes(); ++k) {
        R th = mode_L<R>(k) * h / eps, c = cos(th), s = sin(th);
        R a = z.ell.wc[k], b = z.ell.w1c[k];
        z.ell.wc[k] = c * a + s * b;
        z.ell.w1c[k] = -s * a + c * b;
    }
}

// Strang splitting for z' = (0, J z^c / eps) + S(z): Heun half-steps on the slow
// part S around the exact fast rotation. Second order, uniformly in eps.
template <class R, class Slow>
FullState<R> step_strang(const FullState<R>& z, const R& dt, const R& eps, Slow&& S) {
    R hh = dt / R(2);
    auto heun = [&](const FullState<R>& y) {
        auto k1 = S(y);
        FullState<R> y1 = y;
        y1.axpy(hh, k1);
        auto k2 = S(y1);
        FullState<R> r = y;
        r.axpy(hh / R(2), k1).axpy(hh / R(2), k2);
        return r;
    };
    FullState<R> y = heun(z);
    rotate_elliptic(y, dt, eps);
    return heun(y);
}

// Slow part of the raw field: everything except the fast rotation
template <class R>
FullState<R> raw_slow_field(const Model<R>& m, const FullState<R>& z) {
    auto v = vector_field(m, z);
    for (int k = 2; k <= m.n_modes(); ++k) {
        R l = mode_L<R>(k);
        v.ell.wc[k] -= l * z.ell.w1c[k] / m.eps;
        v.ell.w1c[k] += l * z.ell.wc[k] / m.eps;
    }
    return v;
}

// Classical RK4 on a full-state field, used as a reference oracle
template <class R, class Field>
FullState<R> rk4_step(const Field& f, const FullState<R>& z, const R& h) {
    auto k1 = f(z);
    FullState<R> y = z;
    y.axpy(h / R(2), k1);
    auto k2 = f(y);
    y = z;
    y.axpy(h / R(2), k2);
    auto k3 = f(y);
    y = z;
    y.axpy(h, k3);
    auto k4 = f(y);
    FullState<R> r = z;
    r.axpy(h / R(6), k1).axpy(h / R(3), k2).axpy(h / R(3), k3).axpy(h / R(6), k4);
    return r;
}

template <class R>
struct TangentRun {
    Trajectory<R> base;
    std::vector<Trajectory<R>> tangents;  // one per initial tangent, same nodes as base
};

// Raw system together with its variational equation along the orbit
template <class R>
TangentRun<R> integrate_raw_tangent(const Model<R>& m, const FullState<R>& z0, std::vector<FullState<R>> dz, double t0,
                                    double t1, double dt, int stride = 1, int order = 4) {
    if (!(dt > 0)) fail(ErrorKind::InvalidConfig, "dt must be positive");
    RawFlow<R> flow(m, order);
    TangentRun<R> run;
    run.base.eps = to_d(m.eps);
    run.tangents.resize(dz.size());
    for (auto& t : run.tangents) t.eps = run.base.eps;
    auto store = [&](double t, const FullState<R>& z) {
        run.base.push(t, z);
        for (size_t i = 0; i < dz.size(); ++i) run.tangents[i].push(t, dz[i]);
    };
    FullState<R> z = z0;
    auto f = flow.force(z, true);
    double dir = t1 >= t0 ? 1.0 : -1.0;
    long n = static_cast<long>(std::floor(std::abs(t1 - t0) / dt + 1e-9));
    store(t0, z);
    for (long i = 1; i <= n; ++i) {
        flow.step(z, f, R(dir * dt), dz);
        if (i % stride == 0 || (i == n && std::abs(t0 + dir * n * dt - t1) < 1e-12)) store(t0 + dir * i * dt, z);
    }
    double rest = t1 - (t0 + dir * n * dt);
    if (std::abs(rest) > 1e-12) {
        flow.step(z, f, R(rest), dz);
        store(t1, z);
    }
    return run;
}

// Planar RK4 integration of the Duffing limit; states carry an empty elliptic part
inline Trajectory<double> integrate_duffing(double f3, const HypState<double>& W0, double t0, double t1, double dt,
                                            int n_modes = 1, int stride = 1) {
    if (!(dt > 0)) fail(ErrorKind::InvalidConfig, "dt must be positive");
    Trajectory<double> traj;
    traj.system = SystemTag::duffing;
    auto field = [f3](const HypState<double>& W) { return duffing_field(W, f3); };
    FullState<double> z(n_modes);
    z.hyp = W0;
    traj.push(t0, z);
    double dir = t1 >= t0 ? 1.0 : -1.0;
    long n = static_cast<long>(std::floor(std::abs(t1 - t0) / dt + 1e-9));
    for (long i = 1; i <= n; ++i) {
        z.hyp = rk4_step(field, z.hyp, dir * dt);
        if (i % stride == 0 || (i == n && std::abs(t0 + dir * n * dt - t1) < 1e-12)) traj.push(t0 + dir * i * dt, z);
    }
    double rest = t1 - (t0 + dir * n * dt);
    if (std::abs(rest) > 1e-12) {
        z.hyp = rk4_step(field, z.hyp, rest);
        traj.push(t1, z);
    }
    return traj;
}

// Physical field u(X, t) = eps * sum_k c_k(tau) sin(k omega t) with X = tau / (eps omega):
// the evolution variable becomes space again and the periodic variable time.
struct PhysicalField {
    double eps = 0, period = 0;
    std::vector<double> X, t;
    std::vector<std::vector<double>> u;  // u[i][j] at X[i], t[j]
};

template <class R>
PhysicalField reconstruct_physical(const Trajectory<R>& orbit, int n_time = 64, int space_stride = 1) {
    if (orbit.empty()) fail(ErrorKind::EmptyOrbit, "empty trajectory");
    if (orbit.system != SystemTag::raw && orbit.system != SystemTag::duffing)
        fail(ErrorKind::InvalidConfig, "physical reconstruction needs raw coordinates");
    if (n_time < 2 || space_stride < 1) fail(ErrorKind::InvalidConfig, "bad reconstruction grid");
    PhysicalField P;
    P.eps = orbit.eps;
    double omega = std::sqrt(1 - P.eps * P.eps);
    P.period = 2 * M_PI / omega;
    for (int j = 0; j < n_time; ++j) P.t.push_back(j * P.period / n_time);
    for (size_t i = 0; i < orbit.size(); i += space_stride) {
        const auto& z = orbit.states[i];
        auto c = full_field(z);
        P.X.push_back(orbit.tau[i] / (P.eps * omega));
        std::vector<double> row(n_time);
        for (int j = 0; j < n_time; ++j) {
            double x = omega * P.t[j], v = 0;
            for (int k = 1; k <= c.size(); ++k) v += to_d(c[k]) * std::sin(k * x);
            row[j] = P.eps * v;
        }
        P.u.push_back(std::move(row));
    }
    return P;
}

}  // namespace breather
