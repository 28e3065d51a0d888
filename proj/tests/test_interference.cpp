#include <cmath>

#include "doctest.h"
#include "ucb/interference.hpp"

using namespace ucb;

namespace {

struct FlatPair {
    DomainSpec spec;
    MetricField metric = make_planar_conformal_metric({1.0});
    EikonalData eik = planar_eikonal({1.0});
    SingularPotential pot;
    HierarchyConfig cfg;
    GridResolution res{49, 33, 129};

    FlatPair() {
        pot.xi = [](const ChartPoint&) { return complexd(-1.0, 0.0); };
    }

    Beam beam(int n) const {
        return assemble_band(make_beam_context(n, spec, res, metric, eik, pot, cfg));
    }
};

}  // namespace

TEST_CASE("closed-form balance root: exact rational values") {
    // n = 10: 1810 / 19641 = 0.1 - 154.1/19641
    CHECK(closed_form_balance_root(10) == doctest::Approx(1810.0 / 19641.0).epsilon(1e-15));
    CHECK(closed_form_balance_root(10) == doctest::Approx(0.09215417).epsilon(5e-8));
    // n = 5: 0.1663040 < the Omega-overlap floor 1/6 + 1/288, let alone the plateau
    CHECK(closed_form_balance_root(5) == doctest::Approx(0.2 - 54.2 / 1608.5).epsilon(1e-12));
    CHECK(closed_form_balance_root(5) < band_sigma_lo(5));
    // n = 10 root is valid for the Omega-overlap but sits below the plateau floor
    CHECK(closed_form_balance_root(10) > band_sigma_lo(10));
    CHECK(closed_form_balance_root(10) < 1.0 / 11 + 1.0 / (6.0 * 121.0));
    // asymptotics: (root - 1/n + (2/3)/n^2) n^3 -> -14/9
    for (int n : {12, 16, 20, 40, 100}) {
        const double c1 = (closed_form_balance_root(n) - 1.0 / n + 2.0 / (3.0 * n * n)) *
                          static_cast<double>(n) * n * n;
        CHECK(std::abs(c1) <= 2.0);
        if (n >= 40) CHECK(c1 == doctest::Approx(-14.0 / 9.0).epsilon(0.1));
    }
    CHECK(interference_scale(10) == doctest::Approx(19641.0).epsilon(1e-15));
}

TEST_CASE("interference phi and surface location, bands 12/13") {
    FlatPair fp;
    const Beam b12 = fp.beam(12);
    const Beam b13 = fp.beam(13);

    // plateau point: envelopes are 1 + O(n^{-2a}), so Phi ~ f_12 - f_13
    const double root = closed_form_balance_root(12);
    ChartPoint p{root, {0.1}, 0.2};
    CHECK(std::abs(interference_phi(b12, b13, p)) <= 1e-8 * interference_scale(12));

    const InterferenceSurface s12 = locate_surface(b12, b13);
    CHECK(s12.max_residual_over_Bn <= 1e-10);
    CHECK(s12.min_monotone_slope > 0.9);  // B_n^{-1} d_sigma Phi ~ 1
    CHECK(s12.max_C1 <= 2.0);
    double worst = 0;
    for (int j = 0; j < s12.ny; ++j)
        for (int k = 0; k < s12.ns; ++k)
            worst = std::max(worst, std::abs(s12.at(j, k) - root));
    CHECK(worst <= 1e-9);

    // sign bounds of the corollary
    const SignBoundsReport sb = check_sign_bounds(b12, b13, s12);
    CHECK(sb.pass);
    CHECK(sb.max_upper <= 1e-6);   // f_{n+1} - f_n <= K0 (flat: ~0 at the root)
    CHECK(sb.far_decay_K > 0.1);   // <= -K n^2 beyond the 1/6 line
}

TEST_CASE("locate_surface raises RootOutsideOverlap for band 5") {
    FlatPair fp;
    fp.spec.sigma0 = 0.31;
    fp.res = {33, 9, 65};
    const Beam b5 = fp.beam(5);
    const Beam b6 = fp.beam(6);
    CHECK_THROWS_AS(locate_surface(b5, b6), RootOutsideOverlap);
}

TEST_CASE("eta chart endpoints and jacobian") {
    FlatPair fp;
    const Beam b12 = fp.beam(12);
    const Beam b13 = fp.beam(13);
    const Beam b14 = fp.beam(14);
    auto s13 = std::make_shared<InterferenceSurface>(locate_surface(b13, b14));
    auto s12 = std::make_shared<InterferenceSurface>(locate_surface(b12, b13));
    EtaChart chart(13, s13, s12);  // band 13: lower S_13, upper S_12

    const double y = 0.3, s = -0.1;
    CHECK(chart.eta(s13->value(y, s), y, s) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(chart.eta(s12->value(y, s), y, s) ==
          doctest::Approx(1.0 / 169.0).epsilon(1e-12));
    const double k0 = chart.jacobian_K0(b13.envelope.grid);
    CHECK(k0 >= 1.0);
    CHECK(k0 <= 2.0);
}

TEST_CASE("probing: cross-check, plateau zeroth coefficient, quadratic exactness") {
    FlatPair fp;
    const Beam b12 = fp.beam(12);
    const Beam b13 = fp.beam(13);
    const Beam b14 = fp.beam(14);
    auto s13 = std::make_shared<InterferenceSurface>(locate_surface(b13, b14));
    auto s12 = std::make_shared<InterferenceSurface>(locate_surface(b12, b13));
    auto chart = std::make_shared<EtaChart>(13, s13, s12);

    const ProbedCoeffs pc = probe_operator_coeffs(b13, *chart, {true, true});
    CHECK(pc.max_cross_check_dev <= 1e-8);

    // zeroth coefficient on the surface = xi/sigma^2 + (f')^2 + f'' (flat, plus
    // i n^{2a} box phi = 0)
    const Grid3& g = b13.envelope.grid;
    const int j = g.ny / 2, k = g.ns / 2;
    const double sigma = s13->at(j, k);
    const AmplitudeProfile& amp = b13.ctx->amplitude();
    const complexd expected = complexd(-1.0 / (sigma * sigma) +
                                           amp.df(sigma, 1) * amp.df(sigma, 1) +
                                           amp.df(sigma, 2),
                                       0.0);
    const complexd got = pc.st[0][0][static_cast<size_t>(j) * g.ns + k].c;
    CHECK(std::abs(got - expected) <= 1e-6 * std::abs(expected));

    // a_ee equals (d eta/d sigma)^2 g^{sigma sigma} = (n^2 gap)^{-2} here
    const double deta = chart->deta_dsigma(g.y(j), g.s(k));
    CHECK(std::abs(pc.st[0][0][static_cast<size_t>(j) * g.ns + k].a_ee - deta * deta) <=
          1e-6 * deta * deta);

    // probing reproduces L on a quadratic in (eta, y, s)
    Field3 q(g);
    const double q_ee = 0.7, q_ey = -0.3, q_y = 1.1, q_s = 0.4, q_c = 0.25;
    for (int i = 0; i < g.nz; ++i)
        for (int jj = 0; jj < g.ny; ++jj)
            for (int kk = 0; kk < g.ns; ++kk) {
                const double e = chart->eta(g.sigma(i), g.y(jj), g.s(kk));
                q.at(i, jj, kk) = q_ee * e * e + q_ey * e * g.y(jj) + q_y * g.y(jj) +
                                  q_s * g.s(kk) + q_c;
            }
    Field3 Lq = b13.ctx->apply_L(q);
    const auto& cs = pc.st[0][0][static_cast<size_t>(j) * g.ns + k];
    const double e0 = 0.0;  // on the surface
    const complexd via_coeffs = cs.a_ee * (2.0 * q_ee) + 2.0 * cs.a_ey * q_ey +
                                cs.b_e * (2.0 * q_ee * e0 + q_ey * g.y(j)) +
                                cs.b_y * (q_ey * e0 + q_y) + cs.b_s * q_s +
                                cs.c * (q_ee * e0 * e0 + q_ey * e0 * g.y(j) + q_y * g.y(j) +
                                        q_s * g.s(k) + q_c);
    const complexd direct = interp_sigma_line(Lq, g.z_of_sigma(sigma), j, k);
    CHECK(std::abs(via_coeffs - direct) <= 1e-6 * (std::abs(direct) + 1.0));
}

TEST_CASE("correction data: M = 0 trace and zero-residual shortcut") {
    FlatPair fp;
    const Beam b13_full = fp.beam(13);
    const Beam b12 = fp.beam(12);
    const Beam b14 = fp.beam(14);
    auto s13 = std::make_shared<InterferenceSurface>(locate_surface(b13_full, b14));
    auto s12 = std::make_shared<InterferenceSurface>(locate_surface(b12, b13_full));
    auto chart = std::make_shared<EtaChart>(13, s13, s12);
    const ProbedCoeffs pc = probe_operator_coeffs(b13_full, *chart, {true, true});

    CorrectionData cd = correction_data(b13_full, *chart, pc, 2);
    const Grid3& g = b13_full.envelope.grid;
    const int j = g.ny / 2, k = g.ns / 2;
    const size_t jk = static_cast<size_t>(j) * g.ns + k;

    // h2 = -r|_S / a_ee
    const double sigma = s13->at(j, k);
    const complexd r0 = interp_sigma_line(b13_full.residual_r, g.z_of_sigma(sigma), j, k);
    const complexd expect = -r0 / pc.st[0][0][jk].a_ee;
    CHECK(std::abs(cd.h[0][2][jk] - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));
    CHECK(std::abs(cd.h[0][0][jk]) == 0.0);
    CHECK(std::abs(cd.h[0][1][jk]) == 0.0);

    // identically zero residual -> all data zero -> omega = 0
    Beam b0 = b13_full;
    b0.residual_r = Field3(g);
    CorrectionData cd0 = correction_data(b0, *chart, pc, 2);
    for (int lobe = 0; lobe < 2; ++lobe)
        for (const auto& level : cd0.h[static_cast<size_t>(lobe)])
            for (const complexd& v : level) CHECK(std::abs(v) == 0.0);
    auto omega0 = build_omega(b0, chart, std::make_shared<CorrectionData>(cd0), 0.25);
    CHECK(omega0->sup_recorded() == 0.0);

    // modified_band with omega = 0 leaves the envelope bit-identical
    Beam b0_mod = b0;
    const Field3 before = b0_mod.envelope;
    modified_band(b0_mod, omega0);
    for (size_t q = 0; q < before.v.size(); ++q) CHECK(b0_mod.envelope.v[q] == before.v[q]);
}

TEST_CASE("single-term omega: zeta(n^2 eta) c eta^2 / 2") {
    FlatPair fp;
    const Beam b13 = fp.beam(13);
    const Beam b12 = fp.beam(12);
    const Beam b14 = fp.beam(14);
    auto s13 = std::make_shared<InterferenceSurface>(locate_surface(b13, b14));
    auto s12 = std::make_shared<InterferenceSurface>(locate_surface(b12, b13));
    auto chart = std::make_shared<EtaChart>(13, s13, s12);
    const ProbedCoeffs pc = probe_operator_coeffs(b13, *chart, {true, true});

    auto cd = std::make_shared<CorrectionData>(correction_data(b13, *chart, pc, 2));
    const size_t npts = cd->h[0][2].size();
    const complexd cval(2.5, -0.5);
    for (auto& lobe : cd->h)
        for (auto& level : lobe) std::fill(level.begin(), level.end(), complexd(0));
    cd->h[0][2].assign(npts, cval);
    cd->lobes = {true, false};

    OmegaField omega(chart, cd, 0.25, b13.ctx->cutoff());
    const Grid3& g = b13.envelope.grid;
    const int j = g.ny / 2, k = g.ns / 2;
    const double n2 = 169.0;

    CHECK(std::abs(omega.value_zjk(0.0, j, k)) == 0.0);
    CHECK(std::abs(omega.deta_zjk(0.0, j, k, 2) - cval) <= 1e-12 * std::abs(cval));
    // inside the zeta = 1 plateau: omega = c eta^2 / 2 exactly
    const double z = 0.1;
    const double eta = z / n2;
    CHECK(std::abs(omega.value_zjk(z, j, k) - cval * eta * eta * 0.5) <=
          1e-12 * std::abs(cval) * eta * eta);
    // disjointness at epsilon = 1/4: both lobes dark in the middle
    CHECK(std::abs(omega.value_zjk(0.5, j, k)) == 0.0);

    CHECK_THROWS_AS(OmegaField(chart, cd, 0.5, b13.ctx->cutoff()), LobeOverlap);
}

TEST_CASE("modified band: psi vanishing order >= K_corr + 0.7") {
    FlatPair fp;
    fp.res = {65, 33, 129};
    Beam b13 = fp.beam(13);
    const Beam b12 = fp.beam(12);
    const Beam b14 = fp.beam(14);
    auto s13 = std::make_shared<InterferenceSurface>(locate_surface(b13, b14));
    auto s12 = std::make_shared<InterferenceSurface>(locate_surface(b12, b13));
    auto chart = std::make_shared<EtaChart>(13, s13, s12);
    const ProbedCoeffs pc = probe_operator_coeffs(b13, *chart, {true, true});
    auto cd = std::make_shared<CorrectionData>(correction_data(b13, *chart, pc, 2));
    auto omega = build_omega(b13, chart, cd, 0.25);

    const ModifiedBandReport rep = modified_band(b13, omega);
    CHECK(rep.support_ok);
    CHECK(rep.max_on_surface <= 1e-10 * std::max(1.0, cd->sup_h_top));
    CHECK(rep.psi_fit_slope[0] >= 2.7);
    CHECK(rep.psi_fit_slope[1] >= 2.7);

    // surfaces unchanged: |Phi~| at the old roots stays tiny (omega vanishes there)
    const Beam b14_const = b14;
    double worst = 0;
    const Grid3& g = b13.envelope.grid;
    for (int j = 0; j < g.ny; j += 8)
        for (int k = 0; k < g.ns; k += 16) {
            ChartPoint p{s13->at(j, k), {g.y(j)}, g.s(k)};
            worst = std::max(worst, std::abs(interference_phi(b13, b14_const, p)));
        }
    CHECK(worst <= 1e-8 * interference_scale(13));
}
