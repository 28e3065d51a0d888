#include <cmath>

#include "doctest.h"
#include "ucb/assembly.hpp"

using namespace ucb;

namespace {

// Flat glued set over bands [n_lo, n_hi]; bands with both surfaces get the
// omega modification.
GluedCounterexample make_glued(int n_lo, int n_hi, GridResolution res = {49, 33, 129},
                               int depth_cap = 4, int K_corr = 2) {
    DomainSpec spec;
    MetricField metric = make_planar_conformal_metric({1.0});
    EikonalData eik = planar_eikonal({1.0});
    SingularPotential pot;
    pot.xi = [](const ChartPoint&) { return complexd(-1.0, 0.0); };
    HierarchyConfig cfg;
    cfg.depth_cap = depth_cap;

    GluedCounterexample glued;
    glued.n0 = n_lo;
    glued.n_max = n_hi;
    for (int n = n_lo; n <= n_hi; ++n)
        glued.beams.push_back(assemble_band(make_beam_context(n, spec, res, metric, eik, pot, cfg)));

    // surfaces S_n for n in [n_lo, n_hi - 1]
    std::vector<std::shared_ptr<InterferenceSurface>> surf(static_cast<size_t>(n_hi - n_lo), nullptr);
    for (int n = n_lo; n < n_hi; ++n)
        surf[static_cast<size_t>(n - n_lo)] = std::make_shared<InterferenceSurface>(
            locate_surface(glued.beams[static_cast<size_t>(n - n_lo)],
                           glued.beams[static_cast<size_t>(n - n_lo) + 1]));

    for (int n = n_lo; n <= n_hi; ++n) {
        Beam& beam = glued.beams[static_cast<size_t>(n - n_lo)];
        const bool has_lower = n < n_hi;
        const bool has_upper = n > n_lo;
        std::shared_ptr<InterferenceSurface> lower =
            has_lower ? surf[static_cast<size_t>(n - n_lo)]
                      : make_constant_surface(n, beam.envelope.grid, closed_form_balance_root(n));
        std::shared_ptr<InterferenceSurface> upper =
            has_upper ? surf[static_cast<size_t>(n - n_lo) - 1]
                      : make_constant_surface(n - 1, beam.envelope.grid,
                                              closed_form_balance_root(n - 1));
        auto chart = std::make_shared<EtaChart>(n, lower, upper);
        const ProbedCoeffs pc = probe_operator_coeffs(beam, *chart, {has_lower, has_upper});
        auto cd = std::make_shared<CorrectionData>(correction_data(beam, *chart, pc, K_corr));
        cd->lobes = {has_lower, has_upper};
        auto omega = build_omega(beam, chart, cd, 0.25);
        modified_band(beam, omega);
    }
    return glued;
}

}  // namespace

TEST_CASE("glued evaluation: single band, surfaces, band exclusivity") {
    const GluedCounterexample glued = make_glued(12, 14);

    // at most two consecutive bands anywhere; coverage on (1/n_max, 1/n0)
    for (double sigma = 1.0 / 14 + 1e-4; sigma < 1.0 / 12 - 1e-4; sigma += 1e-4) {
        const auto bands = glued.bands_at(sigma);
        CHECK(bands.size() >= 1);
        CHECK(bands.size() <= 2);
    }

    // single-band plateau: |u| = e^{f_n} |env|, envelope ~ 1
    const Beam& b13 = *glued.beam(13);
    ChartPoint p{1.0 / 13, {0.2}, 0.1};
    const UValue u = evaluate_u(glued, p, 0);
    CHECK(u.bands == 1);
    CHECK(u.log_mag - b13.ctx->amplitude().f(p.sigma) ==
          doctest::Approx(0.0).epsilon(1e-4));

    // log sup |u| / n^2 on the slice sigma = 1/13 lands in [-1.01, -0.99]
    double sup_log = -1e300;
    const Grid3& g = b13.envelope.grid;
    for (int j = 0; j < g.ny; j += 2)
        for (int k = 0; k < g.ns; k += 4) {
            ChartPoint q{1.0 / 13, {g.y(j)}, g.s(k)};
            sup_log = std::max(sup_log, evaluate_u(glued, q, 0).log_mag);
        }
    CHECK(sup_log / 169.0 >= -1.01);
    CHECK(sup_log / 169.0 <= -0.99);

    // |v_n| = |v_{n+1}| on S_n to 1e-8 relative
    const OverlapDiagnostics diag = overlap_diagnostics(glued, 13);
    CHECK(diag.surface_coincidence <= 1e-8);
    CHECK(diag.min_lower_ratio > 0.0);
    if (diag.deep_dips > 0) CHECK(diag.deep_zero_cell_dist <= 1.0);
    CHECK_THROWS_AS(evaluate_u(glued, ChartPoint{0.25, {0.0}, 0.0}, 0), OutsideBands);
}

TEST_CASE("evaluate_a: closed form on the plateau, zero psi, scale invariance") {
    // depth 0: envelope = c_0 = chi, r = T2 c_0, no correction applied
    DomainSpec spec;
    MetricField metric = make_planar_conformal_metric({1.0});
    EikonalData eik = planar_eikonal({1.0});
    SingularPotential pot;
    pot.xi = [](const ChartPoint&) { return complexd(-1.0, 0.0); };
    HierarchyConfig cfg;
    cfg.depth_cap = 0;
    GridResolution res{49, 17, 65};

    GluedCounterexample glued;
    glued.n0 = 13;
    glued.n_max = 13;
    glued.beams.push_back(assemble_band(make_beam_context(13, spec, res, metric, eik, pot, cfg)));

    const Beam& b = glued.beams[0];
    // probe at the sigma node nearest 1/13 (psi interpolation is node-exact
    // across the f-ramp, and the closed form is evaluated at the same node)
    const Grid3& gb = b.envelope.grid;
    const double z13 = std::round((gb.z_of_sigma(1.0 / 13) - gb.z_lo) / gb.dz()) * gb.dz() + gb.z_lo;
    ChartPoint p{gb.sigma_of_z(z13), {0.1}, -0.2};
    const AValue a = evaluate_a(glued, p);
    const double expect = -1.0 / (p.sigma * p.sigma) + std::pow(b.ctx->amplitude().df(p.sigma, 1), 2) +
                          b.ctx->amplitude().df(p.sigma, 2);
    CHECK(std::abs(a.a - complexd(expect, 0)) <= 1e-6 * std::abs(expect));

    // psi = 0 -> a = 0
    GluedCounterexample zeroed = glued;
    zeroed.beams[0].residual_r = Field3(b.envelope.grid);
    CHECK(std::abs(evaluate_a(zeroed, p).a) == 0.0);

    // global envelope scale cancels in a = P u / u
    GluedCounterexample scaled = glued;
    const complexd c(1.7, -2.2);
    for (auto& v : scaled.beams[0].envelope.v) v *= c;
    for (auto& v : scaled.beams[0].rest.v) v *= c;
    for (auto& v : scaled.beams[0].w_factor.v) v *= c;
    for (auto& v : scaled.beams[0].residual_r.v) v *= c;
    const AValue a2 = evaluate_a(scaled, p);
    CHECK(std::abs(a2.a - a.a) <= 1e-12 * std::abs(a.a));
}

TEST_CASE("decay report: fitted q and u-monotonicity over three bands") {
    const GluedCounterexample glued = make_glued(12, 15, {49, 17, 129});
    std::vector<double> sigma_samples;
    for (int n = 13; n <= 14; ++n) sigma_samples.push_back(1.0 / n);
    const DecayReport rep = decay_report(glued, sigma_samples, {0.0, 4.0, 10.0}, 1);
    REQUIRE(rep.slices.size() == 2);
    CHECK(rep.fitted_q >= 7.0 / 8.0);
    CHECK(rep.fitted_q <= 9.0 / 8.0);
    CHECK(rep.monotone_u);
    // mu = 10 at sigma ~ 1/13: the weighted sup must still collapse fast
    for (double r : rep.worst_u_ratio) CHECK(r < 1e-6);
}

TEST_CASE("certify equation on a three-band glued set") {
    const GluedCounterexample glued = make_glued(12, 14, {65, 17, 129});
    const CertifyReport rep = certify_equation(glued, 64, 16);
    CHECK(rep.n_interior >= 64);
    CHECK(rep.n_near_surface >= 16);
    CHECK(rep.worst_interior <= 1e-5);
    CHECK(rep.worst_near_surface <= 1e-4);
    CHECK(rep.pass);
}
