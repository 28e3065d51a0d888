#include <cmath>
#include <random>

#include "doctest.h"
#include "ucb/geometry.hpp"

using namespace ucb;

namespace {

ChartPoint pt(double sigma, double y, double s) { return {sigma, {y}, s}; }

ScalarField analytic(std::function<double(const ChartPoint&)> f) {
    ScalarField h;
    h.eval = std::move(f);
    return h;
}

}  // namespace

TEST_CASE("planar-conformal metric matrix, d = 2") {
    const MetricField m = make_planar_conformal_metric({1.0});
    const MetricData md = metric_at(m, pt(0.1, 0.3, 0.2));
    // dsigma^2 + dybar^2 + 2 dybar ds
    CHECK(md.g(0, 0) == 1.0);
    CHECK(md.g(1, 1) == 1.0);
    CHECK(md.g(1, 2) == 1.0);
    CHECK(md.g(2, 2) == 0.0);
    CHECK(md.det == doctest::Approx(-1.0).epsilon(1e-14));
    // block inverse: g^{ss} = -1, g^{ybar s} = 1, g^{ybar ybar} = 0
    CHECK(md.g_inv(2, 2) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(md.g_inv(1, 2) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(md.g_inv(1, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(md.sqrt_abs_det == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("g g^{-1} = identity at random points, every builtin") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (const char* name : {"planar-conformal", "pure-ads-conformal"}) {
        const MetricField m = metric_by_name(name);
        for (int trial = 0; trial < 100; ++trial) {
            ChartPoint p;
            if (m.dimension == 3) {
                p = pt(u(rng), 2 * u(rng) - 1, u(rng) - 0.5);
            } else {
                p.sigma = 0.2 + u(rng);                 // chi away from 0 and pi/2
                p.ybar = {0.5 + u(rng) * 2.0, u(rng)};  // theta away from poles
                p.s = u(rng);
            }
            const MetricData md = metric_at(m, p);
            const Mat id = md.g * md.g_inv;
            for (int i = 0; i < m.dimension; ++i)
                for (int j = 0; j < m.dimension; ++j)
                    CHECK(std::abs(id(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);
            CHECK(md.sqrt_abs_det > 0.0);
        }
    }
}

TEST_CASE("pure AdS conformal metric degenerates at chi = pi/2") {
    const MetricField m = make_pure_ads_conformal_metric();
    ChartPoint p;
    p.sigma = M_PI / 2;
    p.ybar = {M_PI / 3, 0.1};
    p.s = 0.0;
    CHECK_THROWS_AS(metric_at(m, p), SingularMetric);
}

TEST_CASE("box_g on the flat planar chart") {
    const MetricField m = make_planar_conformal_metric({1.0});
    const ChartPoint p = pt(0.21, 0.1, 0.05);
    FdPlan fd;
    fd.step = 1e-4;

    // h = s^2: box h = g^{ss} * 2 = -2
    CHECK(box_g(m, analytic([](const ChartPoint& q) { return q.s * q.s; }), p, fd) ==
          doctest::Approx(-2.0).epsilon(1e-9));
    // constants and the linear eikonal phase are annihilated
    CHECK(std::abs(box_g(m, analytic([](const ChartPoint&) { return 3.25; }), p, fd)) < 1e-10);
    CHECK(std::abs(box_g(m, analytic([](const ChartPoint& q) { return 0.5 * q.ybar[0]; }), p,
                         fd)) < 1e-10);
    // quadratics against the hand-expanded constant-coefficient form:
    // box h = h_{sigma sigma} + 2 h_{ybar s} - h_{ss}
    CHECK(box_g(m, analytic([](const ChartPoint& q) { return q.sigma * q.sigma + q.ybar[0] * q.s; }),
                p, fd) == doctest::Approx(2.0 + 2.0).epsilon(1e-9));
    CHECK(box_g(m, analytic([](const ChartPoint& q) { return q.ybar[0] * q.ybar[0]; }), p, fd) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("box_g with FD metric derivatives converges at order >= 1.9") {
    MetricField m = make_pure_ads_conformal_metric();
    ChartPoint p;
    p.sigma = 0.7;
    p.ybar = {1.1, 0.4};
    p.s = 0.2;
    const ScalarField h = analytic([](const ChartPoint& q) {
        return std::sin(q.sigma) * std::cos(q.ybar[0]) + 0.3 * q.s * q.sigma;
    });
    FdPlan fd;
    fd.step = 1e-4;
    const double exact = box_g(m, h, p, fd);

    MetricField fd_metric = m;
    fd_metric.deriv = nullptr;
    fd_metric.fd_step = 2e-3;
    const double e1 = std::abs(box_g(fd_metric, h, p, fd) - exact);
    fd_metric.fd_step = 1e-3;
    const double e2 = std::abs(box_g(fd_metric, h, p, fd) - exact);
    CHECK(std::log2(e1 / std::max(e2, 1e-300)) >= 1.9);
}

TEST_CASE("grad_g on the flat planar chart") {
    const MetricField m = make_planar_conformal_metric({1.0});
    const ChartPoint p = pt(0.15, -0.2, 0.3);
    FdPlan fd;
    fd.step = 1e-5;

    // h = phi = ybar / 2 -> (0, 0, 1/2), i.e. 2 grad phi = d_s
    const Vec gphi =
        grad_g(m, analytic([](const ChartPoint& q) { return 0.5 * q.ybar[0]; }), p, fd);
    CHECK(std::abs(gphi[0]) < 1e-12);
    CHECK(std::abs(gphi[1]) < 1e-12);
    CHECK(gphi[2] == doctest::Approx(0.5).epsilon(1e-10));

    // h = sigma -> (1, 0, 0), hence g^{-1}(dsigma, dsigma) = 1
    const Vec gsig = grad_g(m, analytic([](const ChartPoint& q) { return q.sigma; }), p, fd);
    CHECK(gsig[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(gsig[1]) < 1e-12);
    CHECK(std::abs(gsig[2]) < 1e-12);

    const Vec gc = grad_g(m, analytic([](const ChartPoint&) { return 2.0; }), p, fd);
    for (double c : gc) CHECK(std::abs(c) < 1e-12);
}

TEST_CASE("christoffels: flat chart vanishes, lower-index symmetry, Lagrangian oracle") {
    const MetricField flat = make_planar_conformal_metric({1.0});
    const auto gflat = christoffels(flat, pt(0.3, 0.0, 0.0));
    for (const Mat& G : gflat)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(std::abs(G(i, j)) < 1e-14);

    const MetricField ads = make_pure_ads_conformal_metric();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.3, 1.2);
    for (int trial = 0; trial < 20; ++trial) {
        ChartPoint p;
        p.sigma = u(rng);
        p.ybar = {u(rng), u(rng)};
        p.s = u(rng) - 0.7;
        const auto G = christoffels(ads, p);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c)
                    CHECK(std::abs(G[static_cast<size_t>(a)](b, c) -
                                   G[static_cast<size_t>(a)](c, b)) < 1e-10);
    }

    // independent oracle at chi = pi/4: the Euler-Lagrange form of the geodesic
    // equation gives Gamma_{a,bc} v^b v^c = (d_b g_{ac} - (1/2) d_a g_{bc}) v^b v^c
    // with metric derivatives taken by centered differences of eval_g only.
    ChartPoint p;
    p.sigma = M_PI / 4;
    p.ybar = {M_PI / 3, 0.2};
    p.s = 0.1;
    const auto G = christoffels(ads, p);
    const Vec v = {0.3, -0.2, 0.5, 1.0};
    Vec gamma_vv(4, 0.0);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                gamma_vv[static_cast<size_t>(a)] += G[static_cast<size_t>(a)](b, c) *
                                                    v[static_cast<size_t>(b)] *
                                                    v[static_cast<size_t>(c)];
    MetricField fd_metric = ads;
    fd_metric.deriv = nullptr;
    fd_metric.fd_step = 1e-5;
    const auto dg = fd_metric.derivatives(p);
    const MetricData md = metric_at(ads, p);
    for (int a = 0; a < 4; ++a) {
        double lower = 0;
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                lower += (dg[static_cast<size_t>(b)](a, c) -
                          0.5 * dg[static_cast<size_t>(a)](b, c)) *
                         v[static_cast<size_t>(b)] * v[static_cast<size_t>(c)];
        double raised = 0;
        for (int b = 0; b < 4; ++b) raised += md.g(a, b) * gamma_vv[static_cast<size_t>(b)];
        CHECK(raised == doctest::Approx(lower).epsilon(1e-6));
    }
}

TEST_CASE("Lorentzian signature check rejects a Riemannian matrix") {
    MetricField m;
    m.dimension = 3;
    m.name = "euclidean";
    m.eval_g = [](const ChartPoint&) { return Mat::identity(3); };
    CHECK_THROWS_AS(metric_at(m, pt(0.1, 0.0, 0.0)), SignatureError);
}
