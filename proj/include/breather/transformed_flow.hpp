#pragma once

#include <Eigen/Dense>

#include "flow.hpp"
#include "normal_form.hpp"

namespace breather {

enum class TransformedMethod {
    conjugate,  // forward o raw step o inverse; inherits symplecticity from the raw scheme
    strang      // generic Strang splitting on the conjugated field
};

inline double transformed_hamiltonian(const NormalFormChain& ch, const FullState<double>& z) {
    return hamiltonian(ch.model(), ch.inverse(z, -1, false));
}

// Slow part of the transformed field (everything except J z^c / eps)
inline FullState<double> transformed_slow_field(const NormalFormChain& ch, const FullState<double>& z) {
    auto v = ch.transformed_field(z, -1, false);
    double e = ch.eps();
    for (int k = 2; k <= ch.model().n_modes(); ++k) {
        double l = std::sqrt(k * k - 1.0);
        v.ell.wc[k] -= l * z.ell.w1c[k] / e;
        v.ell.w1c[k] += l * z.ell.wc[k] / e;
    }
    return v;
}

inline Trajectory<double> integrate_transformed(const NormalFormChain& ch, const FullState<double>& z0, double t0,
                                                double t1, double dt, int stride = 1,
                                                TransformedMethod method = TransformedMethod::conjugate) {
    Trajectory<double> out;
    if (method == TransformedMethod::conjugate) {
        out = integrate_raw(ch.model(), ch.inverse(z0, -1, false), t0, t1, dt, stride);
        for (auto& x : out.states) x = ch.forward(x, -1, false);
    } else {
        if (!(dt > 0)) fail(ErrorKind::InvalidConfig, "dt must be positive");
        auto S = [&](const FullState<double>& z) { return transformed_slow_field(ch, z); };
        FullState<double> z = z0;
        out.push(t0, z);
        double dir = t1 >= t0 ? 1.0 : -1.0;
        long n = static_cast<long>(std::floor(std::abs(t1 - t0) / dt + 1e-9));
        for (long i = 1; i <= n; ++i) {
            z = step_strang(z, dir * dt, ch.eps(), S);
            if (i % stride == 0 || (i == n && std::abs(t0 + dir * n * dt - t1) < 1e-12)) out.push(t0 + dir * i * dt, z);
        }
        double rest = t1 - (t0 + dir * n * dt);
        if (std::abs(rest) > 1e-12) {
            z = step_strang(z, rest, ch.eps(), S);
            out.push(t1, z);
        }
    }
    out.system = SystemTag::transformed;
    out.eps = ch.eps();
    return out;
}

// Dforward at x as a dense matrix in the flat layout
inline Eigen::MatrixXd forward_jacobian(const NormalFormChain& ch, const FullState<double>& x) {
    int d = x.dim();
    std::vector<FullState<double>> cols;
    for (int c = 0; c < d; ++c) {
        std::vector<double> e(d, 0.0);
        e[c] = 1;
        cols.push_back(FullState<double>::from_flat(e));
    }
    ch.forward_jvp(x, cols, -1, false);
    Eigen::MatrixXd D(d, d);
    for (int c = 0; c < d; ++c) {
        auto f = cols[c].flat();
        for (int r = 0; r < d; ++r) D(r, c) = f[r];
    }
    return D;
}

// Variational equation of the transformed system, obtained by conjugating
// the raw tangent flow: delta x = Dforward^{-1} delta z, propagate, push forward.
inline TangentRun<double> integrate_transformed_tangent(const NormalFormChain& ch, const FullState<double>& z0,
                                                        const std::vector<FullState<double>>& dz0, double t0, double t1,
                                                        double dt, int stride = 1) {
    auto x0 = ch.inverse(z0, -1, false);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(forward_jacobian(ch, x0));
    std::vector<FullState<double>> dx0;
    for (const auto& d : dz0) {
        auto f = d.flat();
        Eigen::VectorXd v = lu.solve(Eigen::Map<const Eigen::VectorXd>(f.data(), f.size()));
        dx0.push_back(FullState<double>::from_flat(std::vector<double>(v.data(), v.data() + v.size())));
    }
    auto run = integrate_raw_tangent(ch.model(), x0, dx0, t0, t1, dt, stride);
    for (size_t i = 0; i < run.base.size(); ++i) {
        std::vector<FullState<double>> d;
        for (auto& t : run.tangents) d.push_back(t.states[i]);
        run.base.states[i] = ch.forward_jvp(run.base.states[i], d, -1, false);
        for (size_t j = 0; j < d.size(); ++j) run.tangents[j].states[i] = d[j];
    }
    run.base.system = SystemTag::transformed;
    return run;
}

// Regular planar problem W' = A W + Ftilde(W, 0) on the surrogate, RK4.
// With `dW` the linearized regular problem is carried along.
inline TangentRun<double> integrate_regular(const NormalFormChain& ch, const HypState<double>& W0, double t0,
                                            double t1, double dt, int stride = 1,
                                            std::vector<HypState<double>> dW = {}) {
    if (!(dt > 0)) fail(ErrorKind::InvalidConfig, "dt must be positive");
    const int n = ch.model().n_modes();
    const size_t nt = dW.size();
    // augmented state: W followed by the tangents
    using Aug = std::vector<HypState<double>>;
    auto field = [&](const Aug& y) {
        Aug r(y.size());
        r[0] = ch.regular_field(y[0]);
        if (nt) {
            auto J = ch.regular_jacobian(y[0]);
            for (size_t i = 1; i < y.size(); ++i)
                r[i] = {J[0][0] * y[i].w + J[0][1] * y[i].w1, J[1][0] * y[i].w + J[1][1] * y[i].w1};
        }
        return r;
    };
    auto add = [](const Aug& a, const Aug& b, double s) {
        Aug r = a;
        for (size_t i = 0; i < a.size(); ++i) r[i] = {a[i].w + s * b[i].w, a[i].w1 + s * b[i].w1};
        return r;
    };
    auto rk4 = [&](const Aug& y, double h) {
        auto k1 = field(y), k2 = field(add(y, k1, h / 2)), k3 = field(add(y, k2, h / 2)), k4 = field(add(y, k3, h));
        Aug r = y;
        for (size_t i = 0; i < y.size(); ++i) {
            r[i].w += h / 6 * (k1[i].w + 2 * k2[i].w + 2 * k3[i].w + k4[i].w);
            r[i].w1 += h / 6 * (k1[i].w1 + 2 * k2[i].w1 + 2 * k3[i].w1 + k4[i].w1);
        }
        return r;
    };
    TangentRun<double> run;
    run.base.system = SystemTag::regular;
    run.base.eps = ch.eps();
    run.tangents.resize(nt);
    auto store = [&](double t, const Aug& y) {
        FullState<double> z(n);
        z.hyp = y[0];
        run.base.push(t, z);
        for (size_t i = 0; i < nt; ++i) {
            FullState<double> d(n);
            d.hyp = y[i + 1];
            run.tangents[i].push(t, d);
        }
    };
    Aug y{W0};
    y.insert(y.end(), dW.begin(), dW.end());
    store(t0, y);
    double dir = t1 >= t0 ? 1.0 : -1.0;
    long steps = static_cast<long>(std::floor(std::abs(t1 - t0) / dt + 1e-9));
    for (long i = 1; i <= steps; ++i) {
        y = rk4(y, dir * dt);
        if (i % stride == 0 || (i == steps && std::abs(t0 + dir * steps * dt - t1) < 1e-12)) store(t0 + dir * i * dt, y);
    }
    double rest = t1 - (t0 + dir * steps * dt);
    if (std::abs(rest) > 1e-12) {
        y = rk4(y, rest);
        store(t1, y);
    }
    return run;
}

}  // namespace breather
