#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "spectral.hpp"

namespace breather {

// Odd polynomial f(u) = sum_j c_j u^j over odd j >= 3.
struct Nonlinearity {
    std::string name;
    std::vector<double> c;  // c[j] multiplies u^j

    int degree() const { return static_cast<int>(c.size()) - 1; }
    double f3() const { return c.size() > 3 ? 6.0 * c[3] : 0.0; }

    double f(double u) const {
        double s = 0, p = u;
        for (size_t j = 1; j < c.size(); ++j, p *= u) s += c[j] * p;
        return s;
    }
    double f_prime(double u) const {
        double s = 0, p = 1;
        for (size_t j = 1; j < c.size(); ++j, p *= u) s += j * c[j] * p;
        return s;
    }
    double f_double_prime(double u) const {
        double s = 0, p = 1;
        for (size_t j = 2; j < c.size(); ++j, p *= u) s += j * (j - 1) * c[j] * p;
        return s;
    }

    void validate() const {
        if (c.size() < 4) fail(ErrorKind::InvalidConfig, "nonlinearity must have a cubic term");
        for (size_t j = 0; j < c.size(); ++j)
            if (j % 2 == 0 && c[j] != 0.0) fail(ErrorKind::InvalidConfig, "nonlinearity must be odd");
        if (c[1] != 0.0) fail(ErrorKind::InvalidConfig, "nonlinearity must have f'(0) = 0");
        if (!(f3() > 0)) fail(ErrorKind::InvalidConfig, "need f'''(0) > 0");
    }

    static Nonlinearity cubic() { return {"cubic", {0, 0, 0, 1.0}}; }

    // u - sin u, Taylor series through u^13
    static Nonlinearity sine_gordon() {
        Nonlinearity n{"sine-gordon", std::vector<double>(14, 0.0)};
        double fact = 1;
        for (int j = 1; j <= 13; ++j) {
            fact *= j;
            if (j >= 3 && j % 2 == 1) n.c[j] = ((j / 2) % 2 == 1 ? 1.0 : -1.0) / fact;
        }
        return n;
    }

    static Nonlinearity odd_polynomial(const std::vector<double>& odd_coeffs) {
        // odd_coeffs = {c3, c5, c7, ...}
        Nonlinearity n{"odd-polynomial", std::vector<double>(2 * odd_coeffs.size() + 2, 0.0)};
        for (size_t i = 0; i < odd_coeffs.size(); ++i) n.c[2 * i + 3] = odd_coeffs[i];
        return n;
    }
};

template <class R>
struct Model {
    R eps{0}, omega{1};
    Nonlinearity nl;
    SpectralConfig spec;
    SineGrid<R> grid;
    std::vector<R> ct;  // c_j eps^{j-3}

    int n_modes() const { return spec.n_modes; }
    double eps_d() const { return to_d(eps); }
};

template <class R>
Model<R> make_model(R eps, const Nonlinearity& nl, int n_modes, int collocation = 0) {
    using std::sqrt;
    nl.validate();
    if (!(eps > R(0) && eps < R(1))) fail(ErrorKind::InvalidConfig, "eps must lie in (0,1)");
    Model<R> m;
    m.eps = eps;
    m.omega = sqrt(R(1) - eps * eps);
    m.nl = nl;
    m.spec.n_modes = n_modes;
    m.spec.collocation_size = collocation > 0 ? collocation : default_collocation(n_modes, nl.degree());
    m.spec.omega = to_d(m.omega);
    m.spec.validate();
    m.grid = SineGrid<R>(n_modes, m.spec.collocation_size);
    m.ct.assign(nl.c.size(), R(0));
    R p(1);
    for (size_t j = 3; j < nl.c.size(); ++j, p *= eps) m.ct[j] = R(nl.c[j]) * p;
    return m;
}

template <class R>
OddField<R> full_field(const FullState<R>& z) {
    OddField<R> v = z.ell.wc;
    v[1] = z.hyp.w;
    return v;
}

// N(v) = f(eps v) / eps^3 pointwise on grid values
template <class R>
void apply_N(const Model<R>& m, std::vector<R>& v) {
    using std::abs;
    const int deg = static_cast<int>(m.ct.size()) - 1;
    for (auto& x : v) {
        if (!finite(x) || abs(R(m.eps) * x) > R(1e8)) fail(ErrorKind::Overflow, "field amplitude out of range");
        R x2 = x * x, acc(0);
        for (int j = deg; j >= 3; j -= 2) acc = acc * x2 + m.ct[j];
        x = acc * x2 * x;
    }
}

// N'(v)
template <class R>
std::vector<R> N_prime(const Model<R>& m, const std::vector<R>& v) {
    const int deg = static_cast<int>(m.ct.size()) - 1;
    std::vector<R> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        R x2 = v[i] * v[i], acc(0);
        for (int j = deg; j >= 3; j -= 2) acc = acc * x2 + R(j) * m.ct[j];
        out[i] = acc * x2;
    }
    return out;
}

// Sine coefficients of N(v) for v = w sin x + w_c
template <class R>
OddField<R> nonlinear_coeffs(const Model<R>& m, const FullState<R>& z) {
    auto v = m.grid.synth(full_field(z));
    apply_N(m, v);
    return m.grid.analyze(v);
}

// Coefficients of N'(v) dv
template <class R>
OddField<R> nonlinear_jvp(const Model<R>& m, const std::vector<R>& nprime, const FullState<R>& dz) {
    auto dv = m.grid.synth(full_field(dz));
    for (size_t i = 0; i < dv.size(); ++i) dv[i] *= nprime[i];
    return m.grid.analyze(dv);
}

// F(W) = (1/omega - 1) A W^h + (0, -P_h N / omega)
template <class R>
HypState<R> assemble_F(const Model<R>& m, const FullState<R>& z, const OddField<R>& PN) {
    R c = R(1) / m.omega - R(1);
    return {c * z.hyp.w1, c * z.hyp.w - PN[1] / m.omega};
}

template <class R>
HypState<R> assemble_F(const Model<R>& m, const FullState<R>& z) {
    return assemble_F(m, z, nonlinear_coeffs(m, z));
}

// G(W) = (0, L^{-1}(w_c - P_c N) / omega^2)
template <class R>
EllState<R> assemble_G(const Model<R>& m, const FullState<R>& z, const OddField<R>& PN) {
    EllState<R> g(m.n_modes());
    R o2 = m.omega * m.omega;
    for (int k = 2; k <= m.n_modes(); ++k) g.w1c[k] = (z.ell.wc[k] - PN[k]) / (mode_L<R>(k) * o2);
    return g;
}

template <class R>
EllState<R> assemble_G(const Model<R>& m, const FullState<R>& z) {
    return assemble_G(m, z, nonlinear_coeffs(m, z));
}

// dz/dtau = (A W^h + F, J W^c / eps + eps G)
template <class R>
FullState<R> vector_field(const Model<R>& m, const FullState<R>& z) {
    auto PN = nonlinear_coeffs(m, z);
    FullState<R> r(m.n_modes());
    r.hyp.w = z.hyp.w1 / m.omega;
    r.hyp.w1 = (z.hyp.w - PN[1]) / m.omega;
    R o2 = m.omega * m.omega;
    for (int k = 2; k <= m.n_modes(); ++k) {
        R l = mode_L<R>(k);
        r.ell.wc[k] = l * z.ell.w1c[k] / m.eps;
        r.ell.w1c[k] = -l * z.ell.wc[k] / m.eps + m.eps * (z.ell.wc[k] - PN[k]) / (l * o2);
    }
    return r;
}

// Linearization of the vector field at z applied to dz
template <class R>
FullState<R> vector_field_jvp(const Model<R>& m, const FullState<R>& z, const FullState<R>& dz) {
    auto np = N_prime(m, m.grid.synth(full_field(z)));
    auto dPN = nonlinear_jvp(m, np, dz);
    FullState<R> r(m.n_modes());
    r.hyp.w = dz.hyp.w1 / m.omega;
    r.hyp.w1 = (dz.hyp.w - dPN[1]) / m.omega;
    R o2 = m.omega * m.omega;
    for (int k = 2; k <= m.n_modes(); ++k) {
        R l = mode_L<R>(k);
        r.ell.wc[k] = l * dz.ell.w1c[k] / m.eps;
        r.ell.w1c[k] = -l * dz.ell.wc[k] / m.eps + m.eps * (dz.ell.wc[k] - dPN[k]) / (l * o2);
    }
    return r;
}

// Quadratic elliptic part of the energy
template <class R>
R elliptic_energy(const Model<R>& m, const EllState<R>& e) {
    R o2 = m.omega * m.omega, s(0);
    for (int k = 2; k <= e.n_modes(); ++k) {
        s += o2 * R(k * k - 1) * e.w1c[k] * e.w1c[k] + (o2 * R(k * k) - R(1)) * e.wc[k] * e.wc[k];
    }
    return pi_v<R>() * s / (R(2) * m.eps * m.eps);
}

// int F(eps v) / eps^4 dx
template <class R>
R potential_integral(const Model<R>& m, const FullState<R>& z) {
    auto v = m.grid.synth(full_field(z));
    const int deg = static_cast<int>(m.ct.size()) - 1;
    for (auto& x : v) {
        if (!finite(x)) fail(ErrorKind::Overflow, "non-finite field");
        R x2 = x * x, acc(0);
        for (int j = deg; j >= 3; j -= 2) acc = acc * x2 + m.ct[j] / R(j + 1);
        x = acc * x2 * x2;
    }
    return m.grid.integrate_even(v);
}

template <class R>
R hamiltonian(const Model<R>& m, const FullState<R>& z) {
    R pi = pi_v<R>();
    R hyp = pi * (z.hyp.w1 * z.hyp.w1 - z.hyp.w * z.hyp.w) / R(2);
    return hyp + elliptic_energy(m, z.ell) + potential_integral(m, z);
}

// Gradient of the energy in coefficient coordinates
template <class R>
FullState<R> grad_hamiltonian(const Model<R>& m, const FullState<R>& z) {
    R pi = pi_v<R>(), o2 = m.omega * m.omega, e2 = m.eps * m.eps;
    auto PN = nonlinear_coeffs(m, z);
    FullState<R> g(m.n_modes());
    g.hyp.w = pi * (PN[1] - z.hyp.w);
    g.hyp.w1 = pi * z.hyp.w1;
    for (int k = 2; k <= m.n_modes(); ++k) {
        g.ell.wc[k] = pi * ((o2 * R(k * k) - R(1)) * z.ell.wc[k] / e2 + PN[k]);
        g.ell.w1c[k] = pi * o2 * R(k * k - 1) * z.ell.w1c[k] / e2;
    }
    return g;
}

// Block-diagonal Poisson tensor: dz/dtau = P grad H with
// P = [[0, c_h], [-c_h, 0]] on (w, w1) and [[0, mu_k], [-mu_k, 0]] on (a_k, b_k).
template <class R>
struct PoissonStructure {
    R c_h;
    std::vector<R> mu;  // mu[k], k >= 2

    FullState<R> apply(const FullState<R>& g) const {
        FullState<R> r(static_cast<int>(mu.size()) - 1);
        r.hyp.w = c_h * g.hyp.w1;
        r.hyp.w1 = -c_h * g.hyp.w;
        for (int k = 2; k < static_cast<int>(mu.size()); ++k) {
            r.ell.wc[k] = mu[k] * g.ell.w1c[k];
            r.ell.w1c[k] = -mu[k] * g.ell.wc[k];
        }
        return r;
    }

    // Canonical momenta: p = coordinate / block entry
    std::vector<R> block_scale() const {
        std::vector<R> s;
        s.push_back(c_h);
        for (size_t k = 2; k < mu.size(); ++k) s.push_back(mu[k]);
        return s;
    }

    // Symplectic form Omega = P^{-1} as a dense matrix in the flat layout
    std::vector<std::vector<double>> omega_matrix() const {
        auto s = block_scale();
        size_t d = 2 * s.size();
        std::vector<std::vector<double>> O(d, std::vector<double>(d, 0.0));
        for (size_t b = 0; b < s.size(); ++b) {
            double c = to_d(s[b]);
            O[2 * b][2 * b + 1] = -1.0 / c;
            O[2 * b + 1][2 * b] = 1.0 / c;
        }
        return O;
    }
};

template <class R>
PoissonStructure<R> poisson_structure(const Model<R>& m) {
    using std::sqrt;
    R pi = pi_v<R>();
    PoissonStructure<R> p;
    p.c_h = R(1) / (m.omega * pi);
    p.mu.assign(m.n_modes() + 1, R(0));
    for (int k = 2; k <= m.n_modes(); ++k) p.mu[k] = m.eps / (m.omega * m.omega * pi * mode_L<R>(k));
    return p;
}

// Time-reversal symmetry (w, w1, a, b) -> (w, -w1, a, -b)
template <class R>
FullState<R> reverse(FullState<R> z) {
    z.hyp.w1 = -z.hyp.w1;
    for (int k = 2; k <= z.n_modes(); ++k) z.ell.w1c[k] = -z.ell.w1c[k];
    return z;
}

}  // namespace breather
