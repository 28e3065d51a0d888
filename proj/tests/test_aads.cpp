#include <cmath>

#include "doctest.h"
#include "ucb/aads.hpp"

using namespace ucb;

TEST_CASE("conformal reduction: flat FG metric has V = 0, conformal mass kills xi") {
    // flat gbar = dsigma^2 + eta in FG form, d = 3 (b = 1, polynomial weights)
    Mat eta3(3);
    eta3(0, 0) = 1;
    eta3(1, 1) = 1;
    eta3(2, 2) = -1;
    const MetricField gbar = make_fg_metric({eta3});
    DomainSpec spec;
    spec.d = 3;
    spec.ybar_box = Box{{-1.0, -1.0}, {1.0, 1.0}};
    spec.sigma0 = 1.0;

    const ConformalOperator op = conjugate_operator(1.7, 3, gbar, spec);
    CHECK(op.xi_singular == doctest::Approx(1.7 - 2.0).epsilon(1e-15));
    CHECK(op.max_v_dev <= 1e-7);
    ChartPoint p{0.4, {0.1, -0.2}, 0.3};
    CHECK(std::abs(op.V(p)) <= 1e-9);
    // no growth trend toward sigma = 0
    for (const auto& [floor, sup] : op.v_sup_by_sigma) CHECK(sup <= 1e-7);

    // conformal mass: mu = (d^2-1)/4 = 2 -> no singular potential
    const ConformalOperator op2 = conjugate_operator(2.0, 3, gbar, spec);
    CHECK(op2.xi_singular == doctest::Approx(0.0).epsilon(1e-15));

    // w = 1 specialization: direct formula matches the extraction (V = 0 here)
    // and a genuinely curved g(rho) produces a bounded nonzero V
    Mat g2(3);
    g2(0, 0) = 0.3;
    g2(1, 1) = -0.1;
    g2(2, 2) = 0.2;
    const MetricField curved = make_fg_metric({eta3, Mat(3), g2});
    const ConformalOperator op3 = conjugate_operator(1.0, 3, curved, spec);
    ChartPoint q{0.5, {0.0, 0.0}, 0.0};
    CHECK(std::abs(op3.V(q)) > 1e-4);
    CHECK(std::abs(op3.V(q)) < 10.0);
}

TEST_CASE("pure_to_planar: spec values and the round trip") {
    // tau = 0, chi = pi/2: (t, rho, xbar) = (0, 1, 0)
    const Vec w0 = {0.0, 0.0, -1.0};
    Vec out = pure_to_planar(0.0, M_PI / 2, w0, 0.3);
    CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(out[2]) < 1e-14);
    CHECK(std::abs(out[3]) < 1e-14);

    // tau = 0, chi = pi/3, omega = (0,...,0,-1) -> rho = (sqrt(3)/2)/(3/2)
    out = pure_to_planar(0.0, M_PI / 3, w0, 0.3);
    CHECK(out[1] == doctest::Approx(std::sqrt(3.0) / 3.0).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(0.57735).epsilon(1e-5));

    // round trip: omega^d from (t, rho, xbar) = (0, sqrt(3)/3, 0) is -1
    CHECK(omega_d_from_planar(0.0, std::sqrt(3.0) / 3.0, {0.0, 0.0}) ==
          doctest::Approx(-1.0).epsilon(1e-12));

    // full round trip through the chart at a generic point
    const Vec w1 = {0.3, 0.4, -std::sqrt(1.0 - 0.09 - 0.16)};
    out = pure_to_planar(0.35, 0.8, w1, 0.3);
    const double wd = omega_d_from_planar(out[0], out[1], {out[2], out[3]});
    CHECK(wd == doctest::Approx(w1[2]).epsilon(1e-9));

    CHECK_THROWS_AS(pure_to_planar(1.5, 0.5, w0, 0.3), OutsideRegion);
    CHECK_THROWS_AS(pure_to_planar(0.0, 0.5, Vec{0.0, 0.0, 0.5}, 0.3), OutsideRegion);
}

TEST_CASE("embedding isometry: pullback matches g_AdS to 1e-6") {
    CHECK(verify_embedding(200, 0.3) <= 1e-6);
    // single axis-aligned point
    CHECK(verify_embedding(1, 0.3, 777) <= 1e-6);
}

TEST_CASE("mutation: wrong sign in the t formula breaks the isometry") {
    // computed inline: pull back with t -> -t and check the deviation is O(1)
    const double h = 1e-6;
    const double tau = 0.4, chi = 0.7, theta = 2.3, ph = 0.9;
    auto embed_bad = [&](const Vec& c) {
        const Vec omega = {std::sin(c[2]) * std::cos(c[3]), std::sin(c[2]) * std::sin(c[3]),
                           std::cos(c[2])};
        Vec out = pure_to_planar(c[0], c[1], omega, 0.3);
        out[0] = -out[0] * 1.5;  // deliberately wrong
        return out;
    };
    Mat J(4);
    const Vec c0 = {tau, chi, theta, ph};
    for (int a = 0; a < 4; ++a) {
        Vec cp = c0, cm = c0;
        cp[static_cast<size_t>(a)] += h;
        cm[static_cast<size_t>(a)] -= h;
        const Vec xp = embed_bad(cp), xm = embed_bad(cm);
        for (int i = 0; i < 4; ++i)
            J(i, a) = (xp[static_cast<size_t>(i)] - xm[static_cast<size_t>(i)]) / (2 * h);
    }
    const Vec x = embed_bad(c0);
    const double rho = x[1];
    double dev = 0;
    const double s2 = std::sin(chi) * std::sin(chi);
    for (int a = 0; a < 4; ++a) {
        double acc = 0;
        for (int i = 0; i < 4; ++i)
            acc += J(i, a) * (i == 0 ? -1.0 : 1.0) / (rho * rho) * J(i, a);
        const double exact = (a == 0 ? -1.0 : a == 1 ? 1.0
                              : a == 2              ? std::cos(chi) * std::cos(chi)
                                                    : std::cos(chi) * std::cos(chi) *
                                                          std::sin(theta) * std::sin(theta)) /
                             s2;
        dev = std::max(dev, std::abs(acc - exact) / std::abs(exact));
    }
    CHECK(dev > 0.1);
}

TEST_CASE("support lemma: small tube passes, large delta fails") {
    const SupportVerdict ok = support_in_half_space(0.3, 0.01, 0.01);
    CHECK(ok.pass);
    CHECK(ok.max_omega_d < 0.0);
    CHECK(ok.margin > 0.0);
    CHECK(ok.max_x2_minus_t2 <= ok.c2 * 0.01 + 1e-12);

    const SupportVerdict bad = support_in_half_space(0.3, 10.0, 0.01);
    CHECK(!bad.pass);

    // formula limit: t = 0, x = 0, rho -> 0 gives omega^d -> -1
    CHECK(omega_d_from_planar(0.0, 1e-8, {0.0, 0.0}) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("GNCC: flat linear eta gives margin 0, engineered profile positive") {
    const BoundaryData flat = make_flat_boundary(
        64, 64, [](double t, double x) { return 1.0 + 0.3 * t + 0.2 * x; });
    const GnccResult r0 = gncc_check(flat);
    CHECK(std::abs(r0.margin) <= 1e-9);

    // eta = -t^2/2 + cosh(2x)/2: Hessian diag(-1, 2 cosh 2x), on null (1, +-1):
    // -1 + 2 cosh(2x) >= 1, Euclidean |Z|^2 = 2 -> margin >= 1/2
    const BoundaryData convex = make_flat_boundary(64, 64, [](double t, double x) {
        return -0.5 * t * t + 0.5 * std::cosh(2.0 * x);
    });
    const GnccResult r1 = gncc_check(convex);
    CHECK(r1.margin >= 0.49);

    // eta = 0: margin 0
    const BoundaryData zero = make_flat_boundary(32, 32, [](double, double) { return 0.0; });
    CHECK(std::abs(gncc_check(zero).margin) <= 1e-12);

    // Riemannian boundary data must be rejected
    BoundaryData bad = flat;
    for (Mat& m : bad.g0) m(0, 0) = 1.0;
    CHECK_THROWS_AS(gncc_check(bad), NotLorentzian);
}

TEST_CASE("Klein-Gordon fidelity of the glued counterexample") {
    // xi = -1 corresponds to mu = xi + (d^2-1)/4 = -1/4 at d = 2
    DomainSpec spec;
    MetricField metric = make_planar_conformal_metric({1.0});
    EikonalData eik = planar_eikonal({1.0});
    SingularPotential pot;
    pot.xi = [](const ChartPoint&) { return complexd(-1.0, 0.0); };
    HierarchyConfig cfg;
    GluedCounterexample glued;
    glued.n0 = 13;
    glued.n_max = 13;
    glued.beams.push_back(
        assemble_band(make_beam_context(13, spec, {49, 17, 129}, metric, eik, pot, cfg)));

    const KgCertifyReport rep = kg_certify(glued, -0.25, 32);
    CHECK(rep.n_probes >= 32);
    CHECK(rep.worst_rel_residual <= 1e-5);
}
