#include <gtest/gtest.h>

#include <breather/model.hpp>

#include <random>

using namespace breather;

static FullState<double> random_state(int n, unsigned seed, double scale = 0.3) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    FullState<double> z(n);
    z.hyp.w = 1.5 * U(rng);
    z.hyp.w1 = U(rng);
    for (int k = 2; k <= n; ++k) {
        z.ell.wc[k] = scale * U(rng) / k;
        z.ell.w1c[k] = scale * U(rng) / k;
    }
    return z;
}

TEST(Model, Nonlinearities) {
    auto c = Nonlinearity::cubic();
    EXPECT_EQ(c.f3(), 6.0);
    auto sg = Nonlinearity::sine_gordon();
    EXPECT_NEAR(sg.f3(), 1.0, 1e-15);
    EXPECT_NEAR(sg.f(0.7), 0.7 - std::sin(0.7), 1e-13);
    EXPECT_NEAR(sg.f_prime(0.7), 1 - std::cos(0.7), 1e-12);
    EXPECT_NEAR(sg.f_double_prime(0.7), std::sin(0.7), 1e-10);  // series truncated after u^13
    auto p = Nonlinearity::odd_polynomial({2.0, -1.0});
    EXPECT_NEAR(p.f(2.0), 16.0 - 32.0, 1e-13);
    EXPECT_THROW((Nonlinearity{"bad", {0, 0, 1, 1}}).validate(), Error);
    EXPECT_THROW(Nonlinearity::odd_polynomial({-1.0}).validate(), Error);
}

// Hyperbolic and elliptic forcing against a direct fine-quadrature oracle
TEST(Model, ForcingMatchesQuadrature) {
    double eps = 0.2;
    auto sg = Nonlinearity::sine_gordon();
    auto m = make_model(eps, sg, 6);
    auto z = random_state(6, 1);
    auto F = assemble_F(m, z);
    auto G = assemble_G(m, z);
    const int Q = 40000;
    std::vector<double> Nk(7, 0.0);
    for (int q = 0; q < Q; ++q) {
        double x = (q + 0.5) * M_PI / Q, v = z.hyp.w * std::sin(x);
        for (int k = 2; k <= 6; ++k) v += z.ell.wc[k] * std::sin(k * x);
        double n = (eps * v - std::sin(eps * v)) / (eps * eps * eps);
        for (int k = 1; k <= 6; ++k) Nk[k] += 2.0 / Q * n * std::sin(k * x);
    }
    double om = std::sqrt(1 - eps * eps);
    EXPECT_NEAR(F.w, (1 / om - 1) * z.hyp.w1, 1e-15);
    EXPECT_NEAR(F.w1, (1 / om - 1) * z.hyp.w - Nk[1] / om, 1e-9);
    for (int k = 2; k <= 6; ++k)
        EXPECT_NEAR(G.w1c[k], (z.ell.wc[k] - Nk[k]) / (std::sqrt(k * k - 1.0) * om * om), 1e-9);
    EXPECT_EQ(G.wc[3], 0.0);
}

TEST(Model, HamiltonianClosedForm) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 8);
    FullState<double> z(8);
    z.hyp.w = 1.3;
    z.hyp.w1 = -0.4;
    double w = 1.3, w1 = -0.4;
    EXPECT_NEAR(hamiltonian(m, z), M_PI * (w1 * w1 - w * w) / 2 + 3 * M_PI * std::pow(w, 4) / 16, 1e-13);
}

TEST(Model, FieldIsPoissonGradient) {
    for (double eps : {0.05, 0.2}) {
        auto m = make_model(eps, Nonlinearity::cubic(), 8);
        auto P = poisson_structure(m);
        auto z = random_state(8, 7);
        auto f = vector_field(m, z).flat();
        auto g = P.apply(grad_hamiltonian(m, z)).flat();
        for (size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], g[i], 1e-10 * (1 + std::abs(f[i])));
    }
}

TEST(Model, GradientMatchesFiniteDifferences) {
    auto m = make_model(0.15, Nonlinearity::sine_gordon(), 6);
    auto z = random_state(6, 11);
    auto g = grad_hamiltonian(m, z).flat();
    auto x = z.flat();
    for (size_t i = 0; i < x.size(); ++i) {
        double h = 1e-5;
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        double d = (hamiltonian(m, FullState<double>::from_flat(xp)) -
                    hamiltonian(m, FullState<double>::from_flat(xm))) / (2 * h);
        EXPECT_NEAR(d, g[i], 1e-6 * (1 + std::abs(g[i]))) << i;
    }
}

TEST(Model, JvpMatchesFiniteDifferences) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 6);
    auto z = random_state(6, 5);
    auto dz = random_state(6, 6);
    auto j = vector_field_jvp(m, z, dz).flat();
    double h = 1e-6;
    auto fp = vector_field(m, z + h * dz).flat();
    auto fm = vector_field(m, z - h * dz).flat();
    for (size_t i = 0; i < j.size(); ++i) EXPECT_NEAR((fp[i] - fm[i]) / (2 * h), j[i], 1e-6 * (1 + std::abs(j[i])));
}

TEST(Model, PoissonInverseIsOmega) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 4);
    auto P = poisson_structure(m);
    auto O = P.omega_matrix();
    // Omega * P = I on each block
    auto s = P.block_scale();
    for (size_t b = 0; b < s.size(); ++b) {
        double c = s[b];
        double p01 = c, p10 = -c;
        EXPECT_NEAR(O[2 * b][2 * b + 1] * p10, 1.0, 1e-15);
        EXPECT_NEAR(O[2 * b + 1][2 * b] * p01, 1.0, 1e-15);
    }
}

TEST(Model, Reversibility) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 6);
    auto z = random_state(6, 9);
    auto a = vector_field(m, reverse(z)).flat();
    auto b = reverse(vector_field(m, z)).flat();
    for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], -b[i], 1e-12);
}

TEST(Model, Overflow) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 4);
    FullState<double> z(4);
    z.hyp.w = 1e300;
    try {
        vector_field(m, z);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Overflow);
    }
}
