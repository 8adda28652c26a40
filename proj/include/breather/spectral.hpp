#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "errors.hpp"
#include "real.hpp"

namespace breather {

struct SpectralConfig {
    int n_modes = 16;
    int collocation_size = 0;  // 0 = pick from n_modes and the nonlinearity degree
    double omega = 1.0;

    void validate() const {
        if (n_modes < 4) fail(ErrorKind::InvalidConfig, "n_modes must be >= 4");
        if (collocation_size < (3 * n_modes + 1) / 2)
            fail(ErrorKind::InvalidConfig, "collocation_size too small for n_modes");
        if (!(omega > 0.0 && omega <= 1.0)) fail(ErrorKind::InvalidConfig, "omega out of (0,1]");
    }
};

// Smallest M for which products of `degree` fields with n sine modes are
// projected back onto modes 1..n without aliasing.
inline int default_collocation(int n_modes, int degree) {
    int m_alias = (degree + 1) * n_modes / 2 + 1;
    int m_min = (3 * n_modes + 1) / 2;
    return std::max(m_alias, m_min);
}

// Sine series sum_k c_k sin(kx); coeffs[k-1] holds c_k.
template <class R>
struct OddField {
    std::vector<R> coeffs;

    OddField() = default;
    explicit OddField(int n) : coeffs(n, R(0)) {}
    int size() const { return static_cast<int>(coeffs.size()); }
    R& operator[](int k) { return coeffs[k - 1]; }
    const R& operator[](int k) const { return coeffs[k - 1]; }
};

template <class R>
struct HypState {
    R w{0}, w1{0};
};

template <class R>
struct EllState {
    OddField<R> wc, w1c;  // mode 1 slots stay zero

    EllState() = default;
    explicit EllState(int n) : wc(n), w1c(n) {}
    int n_modes() const { return wc.size(); }
};

template <class R>
struct FullState {
    HypState<R> hyp;
    EllState<R> ell;

    FullState() = default;
    explicit FullState(int n) : ell(n) {}
    int n_modes() const { return ell.n_modes(); }
    int dim() const { return 2 * n_modes(); }  // w, w1, then (a_k, b_k) for k = 2..n

    // flat layout: [w, w1, a_2, b_2, a_3, b_3, ...]
    std::vector<R> flat() const {
        std::vector<R> v(dim());
        v[0] = hyp.w;
        v[1] = hyp.w1;
        for (int k = 2; k <= n_modes(); ++k) {
            v[2 * k - 2] = ell.wc[k];
            v[2 * k - 1] = ell.w1c[k];
        }
        return v;
    }
    static FullState from_flat(const std::vector<R>& v) {
        FullState s(static_cast<int>(v.size()) / 2);
        s.hyp.w = v[0];
        s.hyp.w1 = v[1];
        for (int k = 2; k <= s.n_modes(); ++k) {
            s.ell.wc[k] = v[2 * k - 2];
            s.ell.w1c[k] = v[2 * k - 1];
        }
        return s;
    }

    FullState& operator+=(const FullState& o) { return axpy(R(1), o); }
    FullState& operator-=(const FullState& o) { return axpy(R(-1), o); }
    FullState& axpy(const R& a, const FullState& o) {
        hyp.w += a * o.hyp.w;
        hyp.w1 += a * o.hyp.w1;
        for (int k = 2; k <= n_modes(); ++k) {
            ell.wc[k] += a * o.ell.wc[k];
            ell.w1c[k] += a * o.ell.w1c[k];
        }
        return *this;
    }
    FullState& operator*=(const R& a) {
        hyp.w *= a;
        hyp.w1 *= a;
        for (int k = 2; k <= n_modes(); ++k) {
            ell.wc[k] *= a;
            ell.w1c[k] *= a;
        }
        return *this;
    }
};

template <class R>
FullState<R> operator+(FullState<R> a, const FullState<R>& b) { return a += b; }
template <class R>
FullState<R> operator-(FullState<R> a, const FullState<R>& b) { return a -= b; }
template <class R>
FullState<R> operator*(const R& s, FullState<R> a) { return a *= s; }

template <class To, class From>
FullState<To> convert(const FullState<From>& s) {
    FullState<To> r(s.n_modes());
    r.hyp.w = To(s.hyp.w);
    r.hyp.w1 = To(s.hyp.w1);
    for (int k = 2; k <= s.n_modes(); ++k) {
        r.ell.wc[k] = To(s.ell.wc[k]);
        r.ell.w1c[k] = To(s.ell.w1c[k]);
    }
    return r;
}

// Coefficient of sin x, i.e. (1/pi) int g(x) sin x dx.
template <class R>
R project_h(const OddField<R>& g) { return g[1]; }

template <class R>
OddField<R> project_c(OddField<R> g) {
    g[1] = R(0);
    return g;
}

template <class R>
HypState<R> apply_A(const HypState<R>& h) { return {h.w1, h.w}; }

// L = (-d_xx - 1)^{1/2} on modes k >= 2
template <class R>
inline R mode_L(int k) {
    using std::sqrt;
    return sqrt(R(k * k - 1));
}

template <class R>
OddField<R> apply_L(OddField<R> g) {
    if (g[1] != R(0)) fail(ErrorKind::InvalidMode, "L applied to a field with a sin x component");
    for (int k = 2; k <= g.size(); ++k) g[k] *= mode_L<R>(k);
    return g;
}

template <class R>
OddField<R> apply_L_inv(OddField<R> g) {
    if (g[1] != R(0)) fail(ErrorKind::InvalidMode, "L^{-1} applied to a field with a sin x component");
    for (int k = 2; k <= g.size(); ++k) g[k] /= mode_L<R>(k);
    return g;
}

// J(a, b) = (L b, -L a)
template <class R>
EllState<R> apply_J(const EllState<R>& e) {
    EllState<R> r(e.n_modes());
    for (int k = 2; k <= e.n_modes(); ++k) {
        R l = mode_L<R>(k);
        r.wc[k] = l * e.w1c[k];
        r.w1c[k] = -l * e.wc[k];
    }
    return r;
}

// Root with nonnegative imaginary part of lambda^2 = 1 - k^2 omega^2.
inline std::complex<double> linear_eigenvalue(int k, double eps) {
    if (k < 1) fail(ErrorKind::InvalidMode, "mode index must be >= 1");
    double omega2 = 1.0 - eps * eps;
    double d = 1.0 - k * k * omega2;
    if (d >= 0) return {std::sqrt(d), 0.0};
    return {0.0, std::sqrt(-d)};
}

template <class R>
R x_norm(const HypState<R>& h) {
    using std::sqrt;
    return sqrt(h.w * h.w + h.w1 * h.w1);
}

// l2 norm of the coefficient pairs
template <class R>
R y_norm(const EllState<R>& e) {
    using std::sqrt;
    R s(0);
    for (int k = 2; k <= e.n_modes(); ++k) s += e.wc[k] * e.wc[k] + e.w1c[k] * e.w1c[k];
    return sqrt(s);
}

// graph norm |y| + |J y|
template <class R>
R y1_norm(const EllState<R>& e) {
    using std::sqrt;
    R s(0), sj(0);
    for (int k = 2; k <= e.n_modes(); ++k) {
        R q = e.wc[k] * e.wc[k] + e.w1c[k] * e.w1c[k];
        s += q;
        sj += R(k * k - 1) * q;
    }
    return sqrt(s) + sqrt(sj);
}

// Hilbert graph norm squared with the L^2(-pi, pi) inner product: pi * sum k^2 (a^2 + b^2)
template <class R>
R y1_hilbert_sq(const EllState<R>& e) {
    R s(0);
    for (int k = 2; k <= e.n_modes(); ++k) s += R(k * k) * (e.wc[k] * e.wc[k] + e.w1c[k] * e.w1c[k]);
    return pi_v<R>() * s;
}

// Change of precision, e.g. float128 orbit nodes to double
template <class To, class From>
FullState<To> state_cast(const FullState<From>& z) {
    FullState<To> r(z.n_modes());
    r.hyp = {To(z.hyp.w), To(z.hyp.w1)};
    for (int k = 2; k <= z.n_modes(); ++k) {
        r.ell.wc[k] = To(z.ell.wc[k]);
        r.ell.w1c[k] = To(z.ell.w1c[k]);
    }
    return r;
}

template <class R>
R state_norm(const FullState<R>& s) { return x_norm(s.hyp) + y1_norm(s.ell); }

// Sine collocation on x_j = j pi / M, j = 1..M-1.
template <class R>
class SineGrid {
public:
    SineGrid() = default;
    SineGrid(int n_modes, int m) : n_(n_modes), m_(m), table_(static_cast<size_t>(n_modes) * (m - 1)) {
        using std::sin;
        R pi = pi_v<R>();
        for (int k = 1; k <= n_; ++k)
            for (int j = 1; j < m_; ++j) {
                // reduce k*j mod 2M before scaling keeps the argument exact
                int r = (k * j) % (2 * m_);
                table_[idx(k, j)] = sin(pi * R(r) / R(m_));
            }
    }

    int n_modes() const { return n_; }
    int size() const { return m_; }
    int points() const { return m_ - 1; }

    const R& s(int k, int j) const { return table_[idx(k, j)]; }

    std::vector<R> synth(const OddField<R>& f) const {
        std::vector<R> v(m_ - 1, R(0));
        for (int k = 1; k <= n_; ++k) {
            const R c = f[k];
            if (c == R(0)) continue;
            const R* row = &table_[idx(k, 1)];
            for (int j = 0; j < m_ - 1; ++j) v[j] += c * row[j];
        }
        return v;
    }

    OddField<R> analyze(const std::vector<R>& v) const {
        OddField<R> f(n_);
        R scale = R(2) / R(m_);
        for (int k = 1; k <= n_; ++k) {
            const R* row = &table_[idx(k, 1)];
            R acc(0);
            for (int j = 0; j < m_ - 1; ++j) acc += v[j] * row[j];
            f[k] = scale * acc;
        }
        return f;
    }

    // int_{-pi}^{pi} G dx for even G vanishing at 0 and pi, given G on the grid
    R integrate_even(const std::vector<R>& g) const {
        R acc(0);
        for (const auto& x : g) acc += x;
        return R(2) * pi_v<R>() / R(m_) * acc;
    }

private:
    size_t idx(int k, int j) const { return static_cast<size_t>(k - 1) * (m_ - 1) + (j - 1); }
    int n_ = 0, m_ = 0;
    std::vector<R> table_;
};

}  // namespace breather
