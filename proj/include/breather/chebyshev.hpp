#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace breather {

// Tensor Chebyshev series on [-bw, bw] x [-bw1, bw1] with several outputs.
class Cheb2D {
public:
    struct Jet {
        double v, w, w1, ww, ww1, w1w1;
    };

    Cheb2D() = default;
    Cheb2D(int degree, double bw, double bw1, int n_out)
        : d0_(degree), d1_(degree), bw_(bw), bw1_(bw1), n_out_(n_out) {}

    // Chebyshev points of the first kind mapped to [-b, b]
    static std::vector<double> nodes(int degree, double b) {
        std::vector<double> x(degree + 1);
        for (int p = 0; p <= degree; ++p) x[p] = b * std::cos(M_PI * (p + 0.5) / (degree + 1));
        return x;
    }
    std::vector<double> nodes_w() const { return nodes(d0_, bw_); }
    std::vector<double> nodes_w1() const { return nodes(d1_, bw1_); }

    // values[o][p][q] at (nodes_w[p], nodes_w1[q])
    void fit(const std::vector<std::vector<std::vector<double>>>& values) {
        int n0 = d0_ + 1, n1 = d1_ + 1;
        coef_.assign(static_cast<size_t>(n_out_) * n0 * n1, 0.0);
        std::vector<std::vector<double>> T0(n0, std::vector<double>(n0)), T1(n1, std::vector<double>(n1));
        for (int i = 0; i < n0; ++i)
            for (int p = 0; p < n0; ++p) T0[i][p] = std::cos(M_PI * i * (p + 0.5) / n0) * (i ? 2.0 : 1.0) / n0;
        for (int j = 0; j < n1; ++j)
            for (int q = 0; q < n1; ++q) T1[j][q] = std::cos(M_PI * j * (q + 0.5) / n1) * (j ? 2.0 : 1.0) / n1;
        std::vector<double> tmp(static_cast<size_t>(n0) * n1);
        for (int o = 0; o < n_out_; ++o) {
            for (int i = 0; i < n0; ++i)
                for (int q = 0; q < n1; ++q) {
                    double s = 0;
                    for (int p = 0; p < n0; ++p) s += T0[i][p] * values[o][p][q];
                    tmp[i * n1 + q] = s;
                }
            for (int i = 0; i < n0; ++i)
                for (int j = 0; j < n1; ++j) {
                    double s = 0;
                    for (int q = 0; q < n1; ++q) s += T1[j][q] * tmp[i * n1 + q];
                    c(o, i, j) = s;
                }
        }
    }

    // Largest coefficient magnitude in the top degree band, relative to the largest overall
    double tail_ratio() const {
        double mx = 0, tail = 0;
        for (int o = 0; o < n_out_; ++o)
            for (int i = 0; i <= d0_; ++i)
                for (int j = 0; j <= d1_; ++j) {
                    double a = std::abs(c(o, i, j));
                    mx = std::max(mx, a);
                    if (i >= d0_ - 1 || j >= d1_ - 1) tail = std::max(tail, a);
                }
        return mx > 0 ? tail / mx : 0.0;
    }

    // Drop trailing degrees whose coefficients are all below rel * max
    void trim(double rel) {
        double mx = 0;
        for (double a : coef_) mx = std::max(mx, std::abs(a));
        int e0 = 0, e1 = 0;
        for (int o = 0; o < n_out_; ++o)
            for (int i = 0; i <= d0_; ++i)
                for (int j = 0; j <= d1_; ++j)
                    if (std::abs(c(o, i, j)) > rel * mx) {
                        e0 = std::max(e0, i);
                        e1 = std::max(e1, j);
                    }
        if (e0 == d0_ && e1 == d1_) return;
        std::vector<double> nc(static_cast<size_t>(n_out_) * (e0 + 1) * (e1 + 1));
        for (int o = 0; o < n_out_; ++o)
            for (int i = 0; i <= e0; ++i)
                for (int j = 0; j <= e1; ++j) nc[(static_cast<size_t>(o) * (e0 + 1) + i) * (e1 + 1) + j] = c(o, i, j);
        d0_ = e0;
        d1_ = e1;
        coef_.swap(nc);
    }

    int n_out() const { return n_out_; }
    int degree_w() const { return d0_; }
    int degree_w1() const { return d1_; }
    double half_width_w() const { return bw_; }
    double half_width_w1() const { return bw1_; }

    // T_i, T_i', T_i'' at x in physical units (derivatives include the 1/b factors)
    static void basis(double x, int d, double b, double* T, double* T1, double* T2) {
        double t = x / b;
        T[0] = 1;
        T1[0] = 0;
        T2[0] = 0;
        if (d >= 1) {
            T[1] = t;
            T1[1] = 1;
            T2[1] = 0;
        }
        for (int i = 2; i <= d; ++i) {
            T[i] = 2 * t * T[i - 1] - T[i - 2];
            T1[i] = 2 * T[i - 1] + 2 * t * T1[i - 1] - T1[i - 2];
            T2[i] = 4 * T1[i - 1] + 2 * t * T2[i - 1] - T2[i - 2];
        }
        for (int i = 0; i <= d; ++i) {
            T1[i] /= b;
            T2[i] /= b * b;
        }
    }

    double value(int o, double w, double w1) const {
        std::vector<double> a(3 * (d0_ + 1)), b(3 * (d1_ + 1));
        basis(w, d0_, bw_, a.data(), a.data() + d0_ + 1, a.data() + 2 * (d0_ + 1));
        basis(w1, d1_, bw1_, b.data(), b.data() + d1_ + 1, b.data() + 2 * (d1_ + 1));
        double s = 0;
        for (int i = 0; i <= d0_; ++i) {
            double r = 0;
            for (int j = 0; j <= d1_; ++j) r += c(o, i, j) * b[j];
            s += a[i] * r;
        }
        return s;
    }

    // Value and all derivatives through second order, for every output
    void jets(double w, double w1, std::vector<Jet>& out) const {
        int n0 = d0_ + 1, n1 = d1_ + 1;
        std::vector<double> a(3 * n0), b(3 * n1);
        basis(w, d0_, bw_, a.data(), a.data() + n0, a.data() + 2 * n0);
        basis(w1, d1_, bw1_, b.data(), b.data() + n1, b.data() + 2 * n1);
        out.resize(n_out_);
        for (int o = 0; o < n_out_; ++o) {
            Jet J{0, 0, 0, 0, 0, 0};
            for (int i = 0; i < n0; ++i) {
                const double* row = &coef_[(static_cast<size_t>(o) * n0 + i) * n1];
                double r0 = 0, r1 = 0, r2 = 0;
                for (int j = 0; j < n1; ++j) {
                    r0 += row[j] * b[j];
                    r1 += row[j] * b[n1 + j];
                    r2 += row[j] * b[2 * n1 + j];
                }
                J.v += a[i] * r0;
                J.w += a[n0 + i] * r0;
                J.ww += a[2 * n0 + i] * r0;
                J.w1 += a[i] * r1;
                J.ww1 += a[n0 + i] * r1;
                J.w1w1 += a[i] * r2;
            }
            out[o] = J;
        }
    }

    // Contract over w at fixed w: s0[o][j] = sum_i c_oij T_i(w), s1 with T_i'(w)
    void contract_w(double w, std::vector<double>& s0, std::vector<double>& s1) const {
        int n0 = d0_ + 1, n1 = d1_ + 1;
        std::vector<double> a(3 * n0);
        basis(w, d0_, bw_, a.data(), a.data() + n0, a.data() + 2 * n0);
        s0.assign(static_cast<size_t>(n_out_) * n1, 0.0);
        s1.assign(static_cast<size_t>(n_out_) * n1, 0.0);
        for (int o = 0; o < n_out_; ++o)
            for (int i = 0; i < n0; ++i) {
                const double* row = &coef_[(static_cast<size_t>(o) * n0 + i) * n1];
                double* p0 = &s0[static_cast<size_t>(o) * n1];
                double* p1 = &s1[static_cast<size_t>(o) * n1];
                for (int j = 0; j < n1; ++j) {
                    p0[j] += a[i] * row[j];
                    p1[j] += a[n0 + i] * row[j];
                }
            }
    }

    // Contract over w1 at fixed w1: s0[o][i] = sum_j c_oij T_j(w1), s1 with T_j'(w1)
    void contract_w1(double w1, std::vector<double>& s0, std::vector<double>& s1) const {
        int n0 = d0_ + 1, n1 = d1_ + 1;
        std::vector<double> b(3 * n1);
        basis(w1, d1_, bw1_, b.data(), b.data() + n1, b.data() + 2 * n1);
        s0.assign(static_cast<size_t>(n_out_) * n0, 0.0);
        s1.assign(static_cast<size_t>(n_out_) * n0, 0.0);
        for (int o = 0; o < n_out_; ++o)
            for (int i = 0; i < n0; ++i) {
                const double* row = &coef_[(static_cast<size_t>(o) * n0 + i) * n1];
                double r0 = 0, r1 = 0;
                for (int j = 0; j < n1; ++j) {
                    r0 += row[j] * b[j];
                    r1 += row[j] * b[n1 + j];
                }
                s0[static_cast<size_t>(o) * n0 + i] = r0;
                s1[static_cast<size_t>(o) * n0 + i] = r1;
            }
    }

    // Evaluate a contracted 1D series and its derivative; along w1 if `in_w1`, else along w
    void eval_1d(const std::vector<double>& s, bool in_w1, double t, std::vector<double>& val,
                 std::vector<double>& der) const {
        int d = in_w1 ? d1_ : d0_;
        double b = in_w1 ? bw1_ : bw_;
        std::vector<double> T(3 * (d + 1));
        basis(t, d, b, T.data(), T.data() + d + 1, T.data() + 2 * (d + 1));
        val.assign(n_out_, 0.0);
        der.assign(n_out_, 0.0);
        for (int o = 0; o < n_out_; ++o) {
            const double* p = &s[static_cast<size_t>(o) * (d + 1)];
            double v = 0, dv = 0;
            for (int i = 0; i <= d; ++i) {
                v += p[i] * T[i];
                dv += p[i] * T[d + 1 + i];
            }
            val[o] = v;
            der[o] = dv;
        }
    }

private:
    double& c(int o, int i, int j) { return coef_[(static_cast<size_t>(o) * (d0_ + 1) + i) * (d1_ + 1) + j]; }
    double c(int o, int i, int j) const { return coef_[(static_cast<size_t>(o) * (d0_ + 1) + i) * (d1_ + 1) + j]; }

    int d0_ = 0, d1_ = 0;
    double bw_ = 1, bw1_ = 1;
    int n_out_ = 0;
    std::vector<double> coef_;
};

}  // namespace breather
