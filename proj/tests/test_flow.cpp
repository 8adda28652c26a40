#include <gtest/gtest.h>

#include <breather/transformed_flow.hpp>

using namespace breather;

namespace {

// near the homoclinic orbit with a little elliptic energy
FullState<double> test_state(int n = 16) {
    FullState<double> z(n);
    z.hyp = homoclinic(-3.0, 6.0);
    z.ell.wc[3] = 0.01;
    z.ell.w1c[5] = 0.005;
    return z;
}

double max_diff(const FullState<double>& a, const FullState<double>& b) {
    auto fa = a.flat(), fb = b.flat();
    double m = 0;
    for (size_t i = 0; i < fa.size(); ++i) m = std::max(m, std::abs(fa[i] - fb[i]));
    return m;
}

double max_drift(const Model<double>& m, const Trajectory<double>& t) {
    double H0 = hamiltonian(m, t.states[0]), mx = 0;
    for (const auto& z : t.states) mx = std::max(mx, std::abs(hamiltonian(m, z) - H0));
    return mx / std::abs(H0);
}

}  // namespace

TEST(Flow, ZeroStaysZero) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 8);
    FullState<double> z(8);
    auto t = integrate_raw(m, z, 0, 1, 1e-2);
    EXPECT_EQ(max_diff(t.back(), z), 0.0);
    auto S = [&](const FullState<double>& y) { return raw_slow_field(m, y); };
    EXPECT_EQ(max_diff(step_strang(z, 1e-2, 0.1, S), z), 0.0);
}

TEST(Flow, RotationIsExactIsometry) {
    FullState<double> z(6);
    for (int k = 2; k <= 6; ++k) {
        z.ell.wc[k] = 0.1 * k;
        z.ell.w1c[k] = -0.05 * k;
    }
    auto y = z;
    double eps = 0.07, t = 0.913;
    rotate_elliptic(y, t, eps);
    for (int k = 2; k <= 6; ++k) {
        double th = std::sqrt(k * k - 1.0) * t / eps;
        EXPECT_NEAR(y.ell.wc[k], std::cos(th) * z.ell.wc[k] + std::sin(th) * z.ell.w1c[k], 1e-14);
        EXPECT_NEAR(y.ell.wc[k] * y.ell.wc[k] + y.ell.w1c[k] * y.ell.w1c[k],
                    z.ell.wc[k] * z.ell.wc[k] + z.ell.w1c[k] * z.ell.w1c[k], 1e-14);
    }
    // linear elliptic system with no slow terms: Strang reduces to the rotation
    auto none = [](const FullState<double>& s) { return FullState<double>(s.n_modes()); };
    auto s = step_strang(z, t, eps, none);
    EXPECT_LE(max_diff(s, y), 1e-14);
}

TEST(Flow, SingleNodeSpan) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 8);
    auto t = integrate_raw(m, test_state(8), 0, 0, 1e-3);
    EXPECT_EQ(t.size(), 1u);
    EXPECT_THROW(integrate_raw(m, test_state(8), 0, 1, 0.0), Error);
}

TEST(Flow, RawEnergyConservation) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 16);
    auto t = integrate_raw(m, test_state(), 0, 20, 1e-3, 50);
    EXPECT_LE(max_drift(m, t), 1e-8);
    auto t2 = integrate_raw(m, test_state(), 0, 20, 1e-3, 50, 2);
    EXPECT_GT(max_drift(m, t2), 1e-8);  // plain splitting is not enough for the target
}

TEST(Flow, ConvergenceOrders) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 8);
    auto z0 = test_state(8);
    for (int order : {2, 4}) {
        auto ref = integrate_raw(m, z0, 0, 1, 1e-4, 1, 4).back();
        double e1 = max_diff(integrate_raw(m, z0, 0, 1, 2e-2, 1, order).back(), ref);
        double e2 = max_diff(integrate_raw(m, z0, 0, 1, 1e-2, 1, order).back(), ref);
        EXPECT_NEAR(std::log2(e1 / e2), order, 0.3) << "order " << order;
    }
}

TEST(Flow, HighOrderCompositions) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 8);
    auto z0 = test_state(8);
    auto ref = integrate_raw(m, z0, 0, 1, 1e-3, 1, 8).back();
    for (int order : {6, 8}) {
        double e1 = max_diff(integrate_raw(m, z0, 0, 1, 0.05, 1, order).back(), ref);
        double e2 = max_diff(integrate_raw(m, z0, 0, 1, 0.025, 1, order).back(), ref);
        EXPECT_NEAR(std::log2(e1 / e2), order, 0.6) << "order " << order;
    }
    EXPECT_THROW(RawFlow<double>(m, 3), Error);
}

TEST(Flow, PhysicalReconstruction) {
    double eps = 0.2;
    auto m = make_model(eps, Nonlinearity::cubic(), 8);
    auto orbit = integrate_raw(m, test_state(8), 0, 2, 1e-2, 50);
    auto P = reconstruct_physical(orbit, 16);
    ASSERT_EQ(P.X.size(), orbit.size());
    ASSERT_EQ(P.t.size(), 16u);
    EXPECT_NEAR(P.X[1], orbit.tau[1] / (eps * m.omega), 1e-12);
    EXPECT_NEAR(P.period, 2 * M_PI / m.omega, 1e-12);
    for (size_t i = 0; i < P.X.size(); ++i) {
        EXPECT_EQ(P.u[i][0], 0.0);
        // quarter period: sin(k pi / 2) picks odd modes with alternating signs
        auto c = full_field(orbit.states[i]);
        double q = 0;
        for (int k = 1; k <= c.size(); ++k) q += c[k] * std::sin(k * M_PI / 2);
        EXPECT_NEAR(P.u[i][4], eps * q, 1e-12);
    }
    EXPECT_THROW(reconstruct_physical(Trajectory<double>{}), Error);
}

TEST(Flow, StrangSecondOrderAgainstRk4) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 8);
    auto z0 = test_state(8);
    auto F = [&](const FullState<double>& y) { return vector_field(m, y); };
    auto S = [&](const FullState<double>& y) { return raw_slow_field(m, y); };
    FullState<double> ref = z0;
    for (int i = 0; i < 50000; ++i) ref = rk4_step(F, ref, 1e-5);
    std::vector<double> err;
    for (double dt : {1e-2, 5e-3, 2.5e-3}) {
        auto z = z0;
        int n = static_cast<int>(std::lround(0.5 / dt));
        for (int i = 0; i < n; ++i) z = step_strang(z, dt, 0.1, S);
        err.push_back(max_diff(z, ref));
    }
    EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.3);
    EXPECT_NEAR(std::log2(err[1] / err[2]), 2.0, 0.3);
}

TEST(Flow, TimeReversal) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 16);
    auto z0 = test_state();
    auto fwd = integrate_raw(m, z0, 0, 5, 1e-3);
    auto back = integrate_raw(m, fwd.back(), 5, 0, 1e-3);
    EXPECT_LE(max_diff(back.back(), z0), 1e-10);
    // reversibility: R z(t) flows back onto R z0
    auto rev = integrate_raw(m, reverse(fwd.back()), 0, 5, 1e-3);
    EXPECT_LE(max_diff(rev.back(), reverse(z0)), 1e-10);
}

TEST(Flow, TangentMatchesFiniteDifferences) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 8);
    auto z0 = test_state(8);
    FullState<double> d(8);
    d.hyp = {0.3, -0.2};
    d.ell.wc[3] = 0.5;
    d.ell.w1c[2] = -0.4;
    auto run = integrate_raw_tangent(m, z0, {d, FullState<double>(8)}, 0, 2, 1e-3, 100);
    const double s = 1e-5;
    auto zp = z0;
    zp.axpy(s, d);
    auto pert = integrate_raw(m, zp, 0, 2, 1e-3, 100);
    ASSERT_EQ(pert.size(), run.base.size());
    for (size_t i = 0; i < pert.size(); ++i) {
        auto fd = (1 / s) * (pert.states[i] - run.base.states[i]);
        double scale = std::max(1.0, state_norm(run.tangents[0].states[i]));
        EXPECT_LE(max_diff(fd, run.tangents[0].states[i]), 1e-3 * scale);
        EXPECT_EQ(state_norm(run.tangents[1].states[i]), 0.0);
    }
}

TEST(Flow, DuffingHomoclinicClosedForm) {
    const double f3 = 6.0;
    auto t = integrate_duffing(f3, homoclinic(0, f3), 0, 10, 1e-3);
    double mx = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        auto h = homoclinic(t.tau[i], f3);
        mx = std::max(mx, std::hypot(t.states[i].hyp.w - h.w, t.states[i].hyp.w1 - h.w1));
    }
    EXPECT_LE(mx, 1e-6);
}

TEST(Flow, DenseOutput) {
    auto m = make_model(0.1, Nonlinearity::cubic(), 8);
    auto t = integrate_raw(m, test_state(8), 0, 1, 1e-3, 20);
    auto fine = integrate_raw(m, test_state(8), 0, 1, 1e-3, 1);
    attach_derivs(t, [&](const FullState<double>& z) { return vector_field(m, z); });
    double h = fine.states[333].hyp.w;
    EXPECT_NEAR(t.at(fine.tau[333]).hyp.w, h, 1e-8);
    EXPECT_THROW(t.at(1.5), Error);
    Trajectory<double> empty;
    try {
        empty.at(0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyOrbit);
    }
}

class TransformedFlowTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        chain_ = new NormalFormChain(NormalFormChain::build(make_model(0.1, Nonlinearity::cubic(), 16)));
    }
    static void TearDownTestSuite() { delete chain_; }
    static NormalFormChain* chain_;
};
NormalFormChain* TransformedFlowTest::chain_ = nullptr;

TEST_F(TransformedFlowTest, TransformedEnergyConservation) {
    const auto& ch = *chain_;
    auto z0 = ch.forward(test_state());
    auto t = integrate_transformed(ch, z0, 0, 20, 1e-3, 200);
    double H0 = transformed_hamiltonian(ch, z0), mx = 0;
    for (const auto& z : t.states) mx = std::max(mx, std::abs(transformed_hamiltonian(ch, z) - H0));
    EXPECT_LE(mx / std::abs(H0), 1e-8);
}

TEST_F(TransformedFlowTest, StrangAgreesWithConjugateOnShortSpan) {
    const auto& ch = *chain_;
    auto z0 = ch.forward(test_state());
    auto a = integrate_transformed(ch, z0, 0, 0.2, 1e-3, 200);
    auto b = integrate_transformed(ch, z0, 0, 0.2, 1e-3, 200, TransformedMethod::strang);
    EXPECT_LE(max_diff(a.back(), b.back()), 1e-5);
}

TEST_F(TransformedFlowTest, RegularProblemShadowsTransformed) {
    const auto& ch = *chain_;
    FullState<double> z0(16);
    z0.hyp = homoclinic(-3.0, 6.0);
    auto t = integrate_transformed(ch, z0, 0, 5, 1e-3, 100);
    auto r = integrate_regular(ch, z0.hyp, 0, 5, 1e-3, 100);
    ASSERT_EQ(t.size(), r.base.size());
    double dev = 0;
    for (size_t i = 0; i < t.size(); ++i)
        dev = std::max(dev, std::hypot(t.states[i].hyp.w - r.base.states[i].hyp.w,
                                       t.states[i].hyp.w1 - r.base.states[i].hyp.w1) +
                                y1_norm(t.states[i].ell));
    EXPECT_LE(dev, 1e-3);
}

TEST_F(TransformedFlowTest, TransformedTangentMatchesFiniteDifferences) {
    const auto& ch = *chain_;
    auto z0 = ch.forward(test_state());
    FullState<double> d(16);
    d.hyp = {0.2, 0.1};
    d.ell.wc[3] = 0.3;
    auto run = integrate_transformed_tangent(ch, z0, {d}, 0, 1, 1e-3, 100);
    const double s = 1e-6;
    auto zp = z0;
    zp.axpy(s, d);
    auto pert = integrate_transformed(ch, zp, 0, 1, 1e-3, 100);
    for (size_t i = 0; i < pert.size(); ++i) {
        EXPECT_LE(max_diff(run.base.states[i], integrate_transformed(ch, z0, 0, run.base.tau[i], 1e-3, 1000000).back()),
                  1e-10);
        auto fd = (1 / s) * (pert.states[i] - run.base.states[i]);
        EXPECT_LE(max_diff(fd, run.tangents[0].states[i]), 1e-4 * std::max(1.0, state_norm(run.tangents[0].states[i])));
    }
}

TEST_F(TransformedFlowTest, StarTangentMatchesFiniteDifferences) {
    const auto& ch = *chain_;
    HypState<double> W0 = homoclinic(-2.0, 6.0), dW{1.0, -0.5};
    auto run = integrate_regular(ch, W0, 0, 3, 1e-3, 100, {dW});
    const double s = 1e-6;
    auto pert = integrate_regular(ch, {W0.w + s * dW.w, W0.w1 + s * dW.w1}, 0, 3, 1e-3, 100);
    for (size_t i = 0; i < pert.base.size(); ++i) {
        double fw = (pert.base.states[i].hyp.w - run.base.states[i].hyp.w) / s;
        double fw1 = (pert.base.states[i].hyp.w1 - run.base.states[i].hyp.w1) / s;
        EXPECT_NEAR(fw, run.tangents[0].states[i].hyp.w, 1e-4 * std::max(1.0, std::abs(fw)));
        EXPECT_NEAR(fw1, run.tangents[0].states[i].hyp.w1, 1e-4 * std::max(1.0, std::abs(fw1)));
    }
}
