#include <cmath>

#include "doctest.h"
#include "ucb/transport.hpp"

using namespace ucb;

namespace {

struct FlatSetup {
    DomainSpec spec;
    MetricField metric = make_planar_conformal_metric({1.0});
    EikonalData eik = planar_eikonal({1.0});
    SingularPotential pot;
    HierarchyConfig cfg;

    FlatSetup() {
        pot.xi = [](const ChartPoint&) { return complexd(-1.0, 0.0); };
        pot.gamma = 0.0;
        pot.C = 1.0;
    }

    std::shared_ptr<BeamContext> context(int n, GridResolution res = {49, 17, 65}) const {
        return make_beam_context(n, spec, res, metric, eik, pot, cfg);
    }
};

Field3 fill(const Grid3& g, const std::function<complexd(const ChartPoint&)>& f) {
    Field3 out(g);
    for (int i = 0; i < g.nz; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int k = 0; k < g.ns; ++k) out.at(i, j, k) = f(g.point(i, j, k));
    return out;
}

}  // namespace

TEST_CASE("beam frequency lambda_n = n^(2 alpha) exactly") {
    CHECK(beam_frequency(5, 6.0) == 244140625.0);
    CHECK(beam_frequency(13, 6.0) == 23298085122481.0);
    CHECK(beam_frequency(2, 1.5) == 8.0);
}

TEST_CASE("apply_T1 on the flat chart is d_s (+ box phi = 0)") {
    FlatSetup fs;
    auto ctx = fs.context(12);
    const Grid3& g = ctx->grid();

    // h = s -> T1 h = 1
    Field3 h = fill(g, [](const ChartPoint& p) { return complexd(p.s, 0); });
    Field3 t1 = ctx->apply_T1(h);
    for (int i = 2; i < g.nz - 2; i += 7)
        for (int j = 2; j < g.ny - 2; j += 5)
            for (int k = 0; k < g.ns; k += 9)
                CHECK(std::abs(t1.at(i, j, k) - complexd(1, 0)) < 1e-11);

    // h = 1 -> 0
    Field3 one = fill(g, [](const ChartPoint&) { return complexd(1, 0); });
    CHECK(ctx->apply_T1(one).sup_abs() < 1e-12);
}

TEST_CASE("apply_T2 closed form at a plateau point (n=5, xi=-1, sigma=0.21)") {
    FlatSetup fs;
    fs.spec.sigma0 = 0.3;
    auto ctx = fs.context(5, {65, 17, 65});
    const Grid3& g = ctx->grid();

    // h = chi_n(sigma): at sigma = 0.21 the plateau makes chi-derivative terms
    // vanish and T2 h = xi/sigma^2 + (f')^2 + f'' = 390602.3242...
    Field3 h = fill(g, [&](const ChartPoint& p) {
        return complexd(ctx->cutoff().chi(p.sigma), 0);
    });
    Field3 t2 = ctx->apply_T2(h);

    // grid point closest to sigma = 0.21
    int best_i = 0;
    double best = 1e300;
    for (int i = 0; i < g.nz; ++i)
        if (std::abs(g.sigma(i) - 0.21) < best) {
            best = std::abs(g.sigma(i) - 0.21);
            best_i = i;
        }
    const double sigma = g.sigma(best_i);
    REQUIRE(ctx->cutoff().chi(sigma) == 1.0);
    const double expected =
        -1.0 / (sigma * sigma) + std::pow(ctx->amplitude().df(sigma, 1), 2) +
        ctx->amplitude().df(sigma, 2);
    const complexd got = t2.at(best_i, g.ny / 2, g.ns / 2);
    CHECK(std::abs(got - complexd(expected, 0)) <= 1e-7 * std::abs(expected));

    // exact spec value at sigma = 0.21 itself
    const double at021 = -1.0 / 0.0441 + 625.0 * 625.0;
    CHECK(at021 == doctest::Approx(390602.3242630386).epsilon(1e-10));

    // h = 0 -> 0
    CHECK(ctx->apply_T2(Field3(g)).sup_abs() == 0.0);
}

TEST_CASE("hierarchy: c_0 = chi for all s, c_1 linear in s, K0 = 1") {
    FlatSetup fs;
    auto ctx = fs.context(12, {49, 9, 65});
    const Grid3& g = ctx->grid();
    const auto c = ctx->solve_hierarchy(2);
    REQUIRE(c.size() == 3);

    // c_0(sigma, y, s) = chi(sigma), exactly (box phi = 0)
    for (int i = 0; i < g.nz; i += 3)
        for (int j = 0; j < g.ny; j += 3)
            for (int k = 0; k < g.ns; k += 7)
                CHECK(std::abs(c[0].at(i, j, k) - complexd(ctx->chi_at(i), 0)) < 1e-14);

    // support: every c_j vanishes where chi does
    for (const auto& f : c)
        for (int i = 0; i < g.nz; ++i) {
            if (ctx->chi_at(i) != 0.0) continue;
            for (int j = 0; j < g.ny; ++j)
                for (int k = 0; k < g.ns; ++k) CHECK(std::abs(f.at(i, j, k)) <= 1e-13);
        }

    // on the plateau c_1 = i n^{-alpha} s T2 c_0: check linearity and the value
    const double n_malpha = std::pow(12.0, -6.0);
    Field3 t2c0 = ctx->apply_T2(c[0]);
    int ip = -1;
    for (int i = 0; i < g.nz; ++i)
        if (g.sigma(i) > ctx->cutoff().plateau_lo() + 2e-4 &&
            g.sigma(i) < ctx->cutoff().plateau_hi() - 2e-4 && ip < 0)
            ip = i;
    REQUIRE(ip >= 0);
    for (int k = 0; k < g.ns; k += 5) {
        const complexd expect =
            complexd(0, 1) * n_malpha * g.s(k) * t2c0.at(ip, g.ny / 2, ctx->grid().ns / 2);
        const complexd got = c[1].at(ip, g.ny / 2, k);
        CHECK(std::abs(got - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));
    }

    // transport equations hold at 10x ode tolerance scale
    CHECK(ctx->transport_residual(c) < 1e-6);
}

TEST_CASE("assemble_band: ladder, K0, telescoping, closed-form c1 ratio") {
    FlatSetup fs;
    auto ctx = fs.context(12, {65, 17, 129});
    Beam beam = assemble_band(ctx);

    CHECK(beam.lambda == beam_frequency(12, 6.0));
    CHECK(beam.J == 3);  // min(4, 12/4)
    CHECK(beam.measured_K0 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(beam.sup_c0 == doctest::Approx(1.0).epsilon(1e-12));

    // J = 0 -> envelope = c_0 trivially reproduced by a depth-0 context
    HierarchyConfig cfg0 = fs.cfg;
    cfg0.depth_cap = 0;
    auto ctx0 = std::make_shared<BeamContext>(band_domain(12, fs.spec, {65, 17, 129}), fs.metric,
                                              fs.eik, fs.pot, cfg0);
    Beam beam0 = assemble_band(ctx0);
    CHECK(beam0.sup_cstar == 0.0);

    // closed form: sup|c_1| = n^{-alpha} s_max sup|T2 c_0| within 5%
    const double n_malpha = std::pow(12.0, -6.0);
    const double predicted = n_malpha * 0.5 * beam.ladder.direct[0];
    const auto c = ctx->solve_hierarchy(1);
    double sup_c1 = 0;
    for (const complexd& v : c[1].v) sup_c1 = std::max(sup_c1, std::abs(v));
    CHECK(sup_c1 == doctest::Approx(predicted).epsilon(0.05));

    // telescoping: measured residual equals n^{-J alpha} sup|T2 c_J| within 1%
    CHECK(beam.ladder.j_check >= 1);
    CHECK(beam.ladder.worst_rel_gap <= 0.01);

    // every ladder step shrinks the residual at alpha = 6, n >= 12
    for (double f : beam.ladder.step_factor) CHECK(f < 1.0);

    // envelope stays within the paper's K0 corridor
    CHECK(beam.sup_cstar < 1e-3);
}

TEST_CASE("conjugation identity: polynomial and Gaussian envelopes") {
    FlatSetup fs;
    auto ctx = fs.context(12, {49, 17, 65});
    const Grid3& g = ctx->grid();

    // w = polynomial of degree <= 2: both sides exact up to roundoff
    Field3 wpoly = fill(g, [&](const ChartPoint& p) {
        const double zs = (p.sigma - 1.0 / 12) * 144.0;
        return complexd(0.3 + zs * p.s + 0.5 * p.ybar[0] * p.ybar[0], 0.2 * p.s);
    });
    CHECK(conjugation_residual(*ctx, wpoly) <= 1e-8);

    // w = 0 -> both sides zero, deviation 0
    CHECK(conjugation_residual(*ctx, Field3(g)) == 0.0);

    // Gaussian bump inside the band
    const double z_mid = 0.5 * (g.z_lo + g.z_hi);
    Field3 wg = fill(g, [&](const ChartPoint& p) {
        const double z = (p.sigma - 1.0 / 12) * 144.0;
        const double arg = -std::pow((z - z_mid) / (0.25 * (g.z_hi - g.z_lo)), 2) -
                           std::pow(p.ybar[0] / 0.5, 2) - std::pow(p.s / 0.3, 2);
        return complexd(std::exp(arg), 0.3 * std::exp(arg));
    });
    CHECK(conjugation_residual(*ctx, wg) <= 1e-5);

    // the identity's cross term g^{-1}(dphi, dsigma) vanishes exactly flat
    CHECK(phi_sigma_pairing(*ctx) <= 1e-12);
}

TEST_CASE("deep schedule depths") {
    HierarchyConfig cfg;
    CHECK(cfg.depth_for(12) == 3);
    CHECK(cfg.depth_for(16) == 4);
    CHECK(cfg.depth_for(20) == 4);
    cfg.deep_schedule = true;
    CHECK(cfg.depth_for(13) == 3);
    CHECK(cfg.depth_for(19) == 9);
    cfg.deep_schedule = false;
    cfg.alpha = 4.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
