#include <gtest/gtest.h>

#include <breather/normal_form.hpp>

#include <map>
#include <memory>
#include <random>

using namespace breather;

namespace {

const NormalFormChain& chain(double eps) {
    static std::map<double, std::unique_ptr<NormalFormChain>> cache;
    auto& p = cache[eps];
    if (!p) p = std::make_unique<NormalFormChain>(NormalFormChain::build(make_model(eps, Nonlinearity::cubic(), 16)));
    return *p;
}

// points with |z^h| <= 0.8 K and a small elliptic part
std::vector<FullState<double>> sample_points(const NormalFormChain& ch, int count, unsigned seed, double ell = 0.05) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    int n = ch.model().n_modes();
    std::vector<FullState<double>> pts;
    while (static_cast<int>(pts.size()) < count) {
        double w = U(rng), w1 = U(rng);
        if (w * w + w1 * w1 > 1) continue;
        FullState<double> z(n);
        z.hyp = {0.8 * ch.K() * w, 0.8 * ch.K() * w1};
        for (int k = 2; k <= n; ++k) {
            z.ell.wc[k] = U(rng) / (k * k);
            z.ell.w1c[k] = U(rng) / (k * k);
        }
        double s = y1_norm(z.ell);
        for (int k = 2; k <= n; ++k) {
            z.ell.wc[k] *= ell / s;
            z.ell.w1c[k] *= ell / s;
        }
        pts.push_back(z);
    }
    return pts;
}

double max_diff(const FullState<double>& a, const FullState<double>& b) {
    auto fa = a.flat(), fb = b.flat();
    double m = 0;
    for (size_t i = 0; i < fa.size(); ++i) m = std::max(m, std::abs(fa[i] - fb[i]));
    return m;
}

double max_abs(const FullState<double>& a) {
    double m = 0;
    for (double v : a.flat()) m = std::max(m, std::abs(v));
    return m;
}

// Dforward by central differences, columns in the flat layout
std::vector<std::vector<double>> fd_jacobian(const NormalFormChain& ch, const FullState<double>& x, double h = 1e-5) {
    auto f = x.flat();
    size_t d = f.size();
    std::vector<std::vector<double>> D(d, std::vector<double>(d));
    for (size_t c = 0; c < d; ++c) {
        auto fp = f, fm = f;
        fp[c] += h;
        fm[c] -= h;
        auto yp = ch.forward(FullState<double>::from_flat(fp)).flat();
        auto ym = ch.forward(FullState<double>::from_flat(fm)).flat();
        for (size_t r = 0; r < d; ++r) D[r][c] = (yp[r] - ym[r]) / (2 * h);
    }
    return D;
}

}  // namespace

TEST(NormalForm, ChainBuildsWithDecreasingResidual) {
    const auto& ch = chain(0.1);
    ASSERT_GE(ch.size(), 5);
    EXPECT_LE(ch.size(), ch.k_max());
    const auto& r = ch.residual_history();
    ASSERT_EQ(static_cast<int>(r.size()), ch.size() + 1);
    for (size_t i = 1; i < r.size(); ++i) EXPECT_LT(r[i], r[i - 1]);
    EXPECT_LT(ch.residual(), 1e-5 * r[0]);
    EXPECT_NEAR(ch.K(), 4.0 / std::sqrt(6.0) + 1.0, 1e-12);
}

TEST(NormalForm, OriginIsFixed) {
    for (double eps : {0.05, 0.1}) {
        const auto& ch = chain(eps);
        FullState<double> z(16);
        EXPECT_LE(max_abs(ch.forward(z)), 1e-14);
        EXPECT_LE(max_abs(ch.inverse(z)), 1e-14);
        EXPECT_LE(max_abs(ch.transformed_field(z)), 1e-12);
        for (const auto& st : ch.steps()) EXPECT_LE(max_abs(ch.forward_step(st, z, nullptr)), 1e-14);
    }
}

TEST(NormalForm, RoundTrip) {
    for (double eps : {0.05, 0.1}) {
        const auto& ch = chain(eps);
        for (const auto& z : sample_points(ch, 20, 3)) {
            EXPECT_LE(max_diff(ch.forward(ch.inverse(z)), z), 1e-10);
            EXPECT_LE(max_diff(ch.inverse(ch.forward(z)), z), 1e-10);
        }
    }
}

TEST(NormalForm, DisplacementIsOrderEpsSquared) {
    double c[2];
    int i = 0;
    for (double eps : {0.05, 0.1}) {
        const auto& ch = chain(eps);
        double mx = 0;
        for (const auto& z : sample_points(ch, 20, 5)) {
            mx = std::max(mx, state_norm(ch.forward(z) - z));
            mx = std::max(mx, state_norm(ch.inverse(z) - z));
        }
        c[i++] = mx / (eps * eps);
    }
    EXPECT_GT(c[0], 0);
    EXPECT_LT(c[0] / c[1], 2.0);
    EXPECT_GT(c[0] / c[1], 0.5);
}

TEST(NormalForm, StepCorrectionTracksRemovedResidual) {
    // step k moves points by eps L^{-1} times the residual it removes
    const auto& ch = chain(0.1);
    double eps = ch.eps();
    for (const auto& st : ch.steps()) {
        double mx = 0;
        for (auto z : sample_points(ch, 20, 7)) {
            if (state_norm(z) > st.radius) continue;
            mx = std::max(mx, state_norm(ch.forward_step(st, z, nullptr) - z));
        }
        EXPECT_LE(mx, 4 * eps * st.residual_in) << "step " << st.k;
    }
}

TEST(NormalForm, NewtonConvergesQuickly) {
    NormalFormConfig cfg;
    cfg.newton_tol = 1e-12;
    auto ch = NormalFormChain::build(make_model(0.1, Nonlinearity::cubic(), 16), cfg);
    ASSERT_GE(ch.size(), 1);
    StepJet jet;
    for (const auto& z : sample_points(ch, 20, 9)) {
        ch.forward_step(ch.steps()[0], z, &jet);
        EXPECT_LE(jet.iters, 5);
    }
}

TEST(NormalForm, JvpMatchesFiniteDifferences) {
    const auto& ch = chain(0.1);
    auto pts = sample_points(ch, 3, 11);
    for (const auto& x : pts) {
        auto D = fd_jacobian(ch, x);
        size_t d = D.size();
        std::vector<FullState<double>> cols;
        for (size_t c = 0; c < d; ++c) {
            std::vector<double> e(d, 0.0);
            e[c] = 1;
            cols.push_back(FullState<double>::from_flat(e));
        }
        ch.forward_jvp(x, cols);
        for (size_t c = 0; c < d; ++c) {
            auto col = cols[c].flat();
            for (size_t r = 0; r < d; ++r) EXPECT_NEAR(col[r], D[r][c], 1e-7) << r << "," << c;
        }
    }
}

TEST(NormalForm, ConjugationIdentity) {
    const auto& ch = chain(0.1);
    for (const auto& z : sample_points(ch, 5, 13)) {
        auto x = ch.inverse(z);
        auto X = vector_field(ch.model(), x).flat();
        auto D = fd_jacobian(ch, x);
        std::vector<double> ref(X.size(), 0.0);
        for (size_t r = 0; r < X.size(); ++r)
            for (size_t c = 0; c < X.size(); ++c) ref[r] += D[r][c] * X[c];
        auto got = ch.transformed_field(z).flat();
        double scale = 1;
        for (double v : ref) scale = std::max(scale, std::abs(v));
        for (size_t r = 0; r < X.size(); ++r) EXPECT_LE(std::abs(got[r] - ref[r]), 1e-8 * scale) << r;
    }
}

TEST(NormalForm, ChainIsSymplectic) {
    for (double eps : {0.05, 0.1, 0.2}) {
        const auto& ch = chain(eps);
        auto P = poisson_structure(ch.model());
        auto s = P.block_scale();
        // canonical momentum p = coordinate / s_b, so Dcan = S^{-1} D S
        std::vector<double> S;
        for (double b : s) {
            S.push_back(1.0);
            S.push_back(b);
        }
        for (const auto& x : sample_points(ch, 20, 17)) {
            auto D = fd_jacobian(ch, x);
            size_t d = D.size();
            for (size_t r = 0; r < d; ++r)
                for (size_t c = 0; c < d; ++c) D[r][c] *= S[c] / S[r];
            double err = 0;
            for (size_t i = 0; i < d; ++i)
                for (size_t j = 0; j < d; ++j) {
                    double v = 0;
                    for (size_t b = 0; b < d / 2; ++b)
                        v += D[2 * b][i] * D[2 * b + 1][j] - D[2 * b + 1][i] * D[2 * b][j];
                    double ref = (i / 2 == j / 2 && i != j) ? (i % 2 == 0 ? 1.0 : -1.0) : 0.0;
                    err = std::max(err, std::abs(v - ref));
                }
            EXPECT_LE(err, 1e-6) << "eps " << eps;
        }
    }
}

TEST(NormalForm, ResidualScalesLikeEpsPerStep) {
    // log of the residual ratio between eps = 0.05 and 0.1 grows by log(1/2) per step
    const auto& a = chain(0.05).residual_history();
    const auto& b = chain(0.1).residual_history();
    size_t n = std::min<size_t>(std::min(a.size(), b.size()), 10);
    ASSERT_GE(n, 6u);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t m = 0; m < n; ++m) {
        double y = std::log(a[m] / b[m]);
        sx += m;
        sy += y;
        sxx += double(m) * m;
        sxy += m * y;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_NEAR(slope, std::log(0.5), 0.1);
}

TEST(NormalForm, DomainCheck) {
    const auto& ch = chain(0.1);
    FullState<double> z(16);
    z.hyp = {3 * ch.K(), 0};
    try {
        ch.forward(z);
        FAIL() << "expected DomainExceeded";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DomainExceeded);
    }
}

TEST(NormalForm, AuditReportShape) {
    const auto& ch = chain(0.1);
    auto rep = ch.audit(8);
    ASSERT_EQ(static_cast<int>(rep.entries.size()), ch.size());
    for (size_t i = 0; i < rep.entries.size(); ++i) {
        const auto& e = rep.entries[i];
        EXPECT_EQ(e.m, static_cast<int>(i) + 2);
        EXPECT_GT(e.norm_Gtilde, 0);
        EXPECT_GE(e.norm_Gtilde, e.sup_Gtilde);
        EXPECT_LE(e.radius, ch.box() + 1e-12);
        if (i + 1 < rep.entries.size()) {
            EXPECT_TRUE(std::isfinite(e.ratio));
        }
    }
}

TEST(NormalForm, AuditFlagsLargeEps) {
    auto ch = NormalFormChain::build(make_model(0.45, Nonlinearity::cubic(), 16));
    auto rep = ch.audit(16);
    EXPECT_FALSE(rep.ok());
    EXPECT_GE(rep.first_violation, 2);
}
