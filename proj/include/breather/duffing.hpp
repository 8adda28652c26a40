#pragma once

#include <array>
#include <cmath>

#include "spectral.hpp"

namespace breather {

// Leading-order hyperbolic dynamics w'' = w - (f3/8) w^3
template <class R>
HypState<R> duffing_field(const HypState<R>& W, double f3) {
    return {W.w1, W.w - R(f3 / 8.0) * W.w * W.w * W.w};
}

template <class R>
R duffing_energy(const HypState<R>& W, double f3) {
    return (W.w1 * W.w1 - W.w * W.w) / R(2) + R(f3 / 32.0) * W.w * W.w * W.w * W.w;
}

// Positive homoclinic loop through (4/sqrt(f3), 0) at tau = 0
inline HypState<double> homoclinic(double tau, double f3) {
    double a = 4.0 / std::sqrt(f3), s = 1.0 / std::cosh(tau);
    return {a * s, -a * std::tanh(tau) * s};
}

inline std::array<HypState<double>, 3> duffing_fixed_points(double f3) {
    double c = std::sqrt(8.0 / f3);
    return {{{0.0, 0.0}, {c, 0.0}, {-c, 0.0}}};
}

// sup_tau |h(tau)|
inline double homoclinic_sup(double f3) { return 4.0 / std::sqrt(f3); }

// Classical RK4 for the planar reference dynamics
template <class Field>
HypState<double> rk4_step(const Field& f, HypState<double> W, double dt) {
    auto add = [](HypState<double> a, HypState<double> b, double s) { return HypState<double>{a.w + s * b.w, a.w1 + s * b.w1}; };
    auto k1 = f(W);
    auto k2 = f(add(W, k1, dt / 2));
    auto k3 = f(add(W, k2, dt / 2));
    auto k4 = f(add(W, k3, dt));
    return {W.w + dt / 6 * (k1.w + 2 * k2.w + 2 * k3.w + k4.w), W.w1 + dt / 6 * (k1.w1 + 2 * k2.w1 + 2 * k3.w1 + k4.w1)};
}

}  // namespace breather
