#include <gtest/gtest.h>

#include <breather/intersection.hpp>

using namespace breather;

namespace {

class Intersection : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        chain_ = new NormalFormChain(NormalFormChain::build(make_model(0.25, Nonlinearity::cubic(), 8)));
        ip_ = new IntersectionProblem(*chain_);
        res_ = new BreatherResult(ip_->find_breather());
    }
    static void TearDownTestSuite() {
        delete res_;
        delete ip_;
        delete chain_;
    }
    static NormalFormChain* chain_;
    static IntersectionProblem* ip_;
    static BreatherResult* res_;
};
NormalFormChain* Intersection::chain_ = nullptr;
IntersectionProblem* Intersection::ip_ = nullptr;
BreatherResult* Intersection::res_ = nullptr;

}  // namespace

TEST(Lagrange, ExactOnPolynomials) {
    std::deque<FullState<double>> nodes;
    auto p = [](double s) { return 1 - 2 * s + 0.5 * s * s * s; };
    for (int i = 0; i < 6; ++i) {
        FullState<double> z(3);
        z.hyp.w = p(i);
        z.ell.w1c[3] = -p(i);
        nodes.push_back(z);
    }
    auto r = lagrange(nodes, 2.37);
    EXPECT_NEAR(r.hyp.w, p(2.37), 1e-12);
    EXPECT_NEAR(r.ell.w1c[3], -p(2.37), 1e-12);
}

TEST(IntersectionConfig, Validation) {
    IntersectionConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_NEAR(c.tail_start(), 22.8027, 1e-3);
    c.order = 5;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.delta = 0.1;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.node_dt = 1e-4;
    EXPECT_THROW(c.validate(), Error);
}

TEST(FitExponential, RecoversSyntheticLaw) {
    std::vector<std::pair<double, double>> sweep;
    for (double e : {0.08, 0.1, 0.125, 0.15, 0.2, 0.25}) sweep.push_back({e, 3.0 * std::exp(-2.5 / e)});
    auto F = fit_exponential(sweep);
    EXPECT_NEAR(F.c_fit, 2.5, 1e-10);
    EXPECT_NEAR(std::exp(F.intercept), 3.0, 1e-8);
    EXPECT_NEAR(F.r_squared, 1.0, 1e-12);
    EXPECT_EQ(F.used, 6);
}

TEST(FitExponential, NoiseFloorAndDegenerateInput) {
    std::vector<std::pair<double, double>> sweep{{0.1, 1e-3}, {0.2, 1e-2}, {0.3, 2e-2}, {0.4, 3e-2}, {0.05, 1e-40}};
    auto F = fit_exponential(sweep);
    ASSERT_EQ(F.excluded.size(), 1u);
    EXPECT_EQ(F.excluded[0], 0.05);
    sweep.pop_back();
    sweep.pop_back();
    EXPECT_THROW(fit_exponential(sweep), Error);
    EXPECT_THROW(fit_exponential({{0.1, 1.0}, {0.1, 2.0}, {0.1, 3.0}, {0.1, 4.0}}), Error);
}

TEST(SectionFrame, AxesAtTheDuffingPeak) {
    double f3 = 6.0, a = 4 / std::sqrt(f3);
    auto F = make_section_frame(f3);
    EXPECT_NEAR(F.x0.w, a, 1e-14);
    EXPECT_EQ(F.x0.w1, 0.0);
    EXPECT_NEAR(F.d.w, a, 1e-14);
    EXPECT_EQ(F.d.w1, 0.0);
    EXPECT_NEAR(F.v.w, 0.0, 1e-14);
    EXPECT_NEAR(F.v.w1, -a, 1e-14);
    EXPECT_EQ(F.v.w * F.d.w + F.v.w1 * F.d.w1, 0.0);
    // the Duffing homoclinic crosses Sigma at x0 itself
    auto z = FullState<double>(4);
    z.hyp = homoclinic(0.0, f3);
    EXPECT_EQ(F.pv(z), 0.0);
    EXPECT_EQ(F.pd(z), 0.0);
}

TEST_F(Intersection, ManifoldCrossingsAreMirrorImages) {
    const auto& hu = ip_->section_hit(ManifoldKind::cu);
    const auto& hs = ip_->section_hit(ManifoldKind::cs);
    EXPECT_NEAR(hu.tau, -hs.tau, 1e-9);
    auto m = reverse(hs.raw_turn);
    auto d = hu.raw_turn;
    d -= m;
    EXPECT_LT(to_d(state_norm(d)), 1e-20);
    EXPECT_NEAR(ip_->frame().pv(hu.transformed), 0.0, 1e-10);
    EXPECT_THROW(ip_->section_hit(ManifoldKind::s), Error);
}

TEST_F(Intersection, EndpointsAndUpsilon) {
    auto [Y, Y1] = ip_->endpoints();
    EXPECT_LE(y1_norm(Y), ip_->config().b);
    EXPECT_LE(y1_norm(Y1), ip_->config().b);
    int it = 0;
    const auto& hs = ip_->section_hit(ManifoldKind::cs);
    EXPECT_NEAR(ip_->upsilon(ManifoldKind::cs, Y, &it), ip_->frame().pd(hs.transformed), 1e-14);
    EXPECT_EQ(it, 1);
    EllState<double> big(Y.n_modes());
    big.wc[2] = 10;
    EXPECT_THROW(ip_->upsilon(ManifoldKind::cs, big), Error);
}

TEST_F(Intersection, EnergyGapChangesSign) {
    const auto& r = *res_;
    EXPECT_GE(r.h0, 0);
    EXPECT_LE(r.h1, 0);
    EXPECT_LE(std::abs(r.h_s0), ip_->config().root_tol);
    EXPECT_LE(r.bisect_steps, ip_->config().max_bisect);
    // reversibility puts the zero in the middle
    EXPECT_NEAR(r.s0, 0.5, 1e-6);
    EXPECT_NEAR(r.energy_on_center, 0.25 * r.splitting * r.splitting * r.Q_plus, 1e-6 * r.energy_on_center);
}

TEST_F(Intersection, AssembledBreather) {
    const auto& r = *res_;
    EXPECT_GT(r.tail_amp, 0);
    EXPECT_NEAR(r.tail_amp, r.tail_linear, 0.02 * r.tail_linear);
    EXPECT_LE(r.defect, 10 * r.integrator_tol);
    EXPECT_LT(r.hyp_end, 1e-9);
    EXPECT_LT(r.symmetry_defect, 1e-10);
    ASSERT_EQ(r.orbit.size(), r.raw_orbit.size());
    EXPECT_EQ(r.orbit.system, SystemTag::transformed);
    EXPECT_NEAR(r.raw_orbit.tau.front(), -ip_->config().t_end(), 1e-9);
    EXPECT_NEAR(r.raw_orbit.tau.back(), ip_->config().t_end(), 1e-9);
    EXPECT_EQ(r.physical.u.size(), r.raw_orbit.size());
    // the core of the orbit follows the Duffing homoclinic in the slow variable
    auto mid = r.raw_orbit.at(0.0);
    EXPECT_NEAR(mid.hyp.w, homoclinic(0.0, chain_->model().nl.f3()).w, 0.1);
}
