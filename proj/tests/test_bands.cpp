#include <cmath>

#include "doctest.h"
#include "ucb/bands.hpp"

using namespace ucb;

TEST_CASE("band endpoints are the exact rationals") {
    // n = 5: (1/6 + 1/288, 1/4 - 1/128)
    CHECK(band_sigma_lo(5) == doctest::Approx(1.0 / 6 + 1.0 / 288).epsilon(1e-15));
    CHECK(band_sigma_hi(5) == doctest::Approx(1.0 / 4 - 1.0 / 128).epsilon(1e-15));
    CHECK(band_sigma_lo(5) == doctest::Approx(0.17013888888888888).epsilon(1e-14));
    CHECK(band_sigma_hi(5) == doctest::Approx(0.2421875).epsilon(1e-15));
}

TEST_CASE("band disjointness and overlap") {
    // Omega_5 and Omega_7 disjoint, Omega_5 and Omega_6 overlap
    CHECK(band_sigma_hi(7) < band_sigma_lo(5));
    CHECK(band_sigma_lo(5) < band_sigma_hi(6));  // overlap (1/6+1/288, 1/5-1/200)
    CHECK(band_sigma_hi(6) == doctest::Approx(1.0 / 5 - 1.0 / 200).epsilon(1e-15));
    for (int n = 12; n <= 19; ++n) {
        CHECK(band_sigma_lo(n) < band_sigma_hi(n + 1));      // adjacent overlap
        CHECK(band_sigma_hi(n + 2) < band_sigma_lo(n));      // |n-m| > 1 disjoint
    }
}

TEST_CASE("band outside domain raises") {
    DomainSpec spec;
    spec.sigma0 = 0.05;
    // n = 12: sigma_hi = 1/11 - 1/968 ~ 0.0898 > 0.05
    CHECK_THROWS_AS(band_domain(12, spec), BandOutsideDomain);
    spec.sigma0 = 0.12;
    const BandDomain b = band_domain(12, spec);
    CHECK(b.grid.sigma(0) == doctest::Approx(band_sigma_lo(12)).epsilon(1e-12));
    CHECK(b.grid.sigma(b.grid.nz - 1) == doctest::Approx(band_sigma_hi(12)).epsilon(1e-12));
    // sigma axis uniform in the rescaled coordinate
    const double dz0 = b.grid.z(1) - b.grid.z(0);
    const double dz1 = b.grid.z(b.grid.nz - 1) - b.grid.z(b.grid.nz - 2);
    CHECK(dz0 == doctest::Approx(dz1).epsilon(1e-12));
}

TEST_CASE("theta endpoints, midpoint, monotonicity") {
    const Theta theta = make_theta();
    CHECK(theta(-0.25) == -0.5);
    CHECK(theta(0.25) == 1.0);
    CHECK(theta(-0.125) == -0.5);
    CHECK(theta(0.125) == 1.0);
    CHECK(theta(0.0) == doctest::Approx(0.25).epsilon(1e-9));
    double prev = theta(-0.2);
    for (int i = 1; i <= 10000; ++i) {
        const double z = -0.2 + 0.4 * i / 10000.0;
        const double v = theta(z);
        CHECK(v >= prev - 1e-14);
        prev = v;
    }
}

TEST_CASE("amplitude profile values") {
    const Theta theta = make_theta();
    const AmplitudeProfile f5(5, theta);
    // theta term vanishes at sigma = 1/n
    CHECK(f5.f(0.2) == doctest::Approx(-25.0).epsilon(1e-13));
    // sigma = 0.21: z = 0.25 >= 1/8, theta = 1 -> -25 - 625*0.01 = -31.25
    CHECK(f5.f(0.21) == doctest::Approx(-31.25).epsilon(1e-12));
    // in the overlap with band 6 the theta plateau forces f5 = -25 + 312.5 (sigma - 0.2)
    for (double sigma : {0.172, 0.18, 0.19}) {
        CHECK(f5.f(sigma) == doctest::Approx(-25.0 + 312.5 * (sigma - 0.2)).epsilon(1e-12));
        CHECK(f5.df(sigma, 1) == doctest::Approx(312.5).epsilon(1e-12));
        CHECK(f5.df(sigma, 2) == doctest::Approx(0.0).epsilon(1e-12));
    }
    // derivative against a centered difference of f itself
    const double h = 1e-6;
    for (double sigma : {0.198, 0.2, 0.202, 0.21}) {
        const double fd = (f5.f(sigma + h) - f5.f(sigma - h)) / (2 * h);
        CHECK(f5.df(sigma, 1) == doctest::Approx(fd).epsilon(1e-5));
    }
    f5.assert_piecewise_bounds();
    for (int n = 12; n <= 20; ++n) AmplitudeProfile(n, theta).assert_piecewise_bounds();
}

TEST_CASE("rescaled amplitude derivative table is flat in n") {
    const Theta theta = make_theta();
    std::vector<double> k1;
    for (int n = 12; n <= 20; ++n) {
        const AmplitudeProfile f(n, theta);
        k1.push_back(f.rescaled_sup_table()[1]);
    }
    for (double v : k1) {
        CHECK(v >= 1.0);
        CHECK(v <= 2.0 * k1.front());
    }
}

TEST_CASE("cutoff plateau and support endpoints") {
    const CutoffProfile chi5(5);
    // plateau point
    CHECK(chi5.chi(0.2) == 1.0);
    // 1/6 + 1/300 is below the support start 1/6 + 1/252
    CHECK(chi5.chi(1.0 / 6 + 1.0 / 300) == 0.0);
    CHECK(chi5.plateau_lo() == doctest::Approx(1.0 / 6 + 1.0 / 216).epsilon(1e-14));
    CHECK(chi5.plateau_hi() == doctest::Approx(1.0 / 4 - 1.0 / 96).epsilon(1e-14));
    CHECK(chi5.support_lo() == doctest::Approx(1.0 / 6 + 1.0 / 252).epsilon(1e-14));
    CHECK(chi5.support_hi() == doctest::Approx(1.0 / 4 - 1.0 / 112).epsilon(1e-14));
    CHECK(chi5.chi(chi5.support_lo() - 1e-9) == 0.0);
    CHECK(chi5.chi(chi5.plateau_lo() + 1e-9) == 1.0);
    for (double sigma = 0.171; sigma < 0.2421; sigma += 1e-4) {
        const double v = chi5.chi(sigma);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("cutoff first-derivative constant") {
    // The left ramp has width 1/1512, so sup|chi_5'| >= 1512 by the mean value
    // theorem and K_1 = sup|chi_5'|/25 >= 60.5; the spec example's K_1 < 50 is
    // unattainable for any smooth step on these ramps. Assert the achievable
    // range for the shipped master step instead.
    const CutoffProfile chi5(5);
    const double k1 = chi5.derivative_sup_table()[1] / 25.0;
    CHECK(k1 >= 60.4);
    CHECK(k1 <= 80.0);
    // sup table brackets a dense sample of the actual derivative
    double measured = 0;
    for (double sigma = chi5.support_lo(); sigma < chi5.support_hi(); sigma += 1e-6)
        measured = std::max(measured, std::abs(chi5.dchi(sigma, 1)));
    CHECK(measured <= chi5.derivative_sup_table()[1] * (1 + 1e-6));
    CHECK(measured >= 0.9 * chi5.derivative_sup_table()[1]);
}

TEST_CASE("rescaled cutoff derivative constants flat in n within factor 2") {
    std::vector<std::vector<double>> tables;
    for (int n = 12; n <= 20; ++n) tables.push_back(CutoffProfile(n).K_table());
    for (size_t k = 1; k < tables.front().size(); ++k) {
        double lo = 1e300, hi = 0;
        for (const auto& t : tables) {
            lo = std::min(lo, t[k]);
            hi = std::max(hi, t[k]);
        }
        CHECK(hi <= 2.0 * lo);
    }
}

TEST_CASE("partition coverage: plateaus cover (1/n_max, 1/n_0)") {
    const int n0 = 12, n_max = 20;
    std::vector<CutoffProfile> chis;
    for (int n = n0; n <= n_max; ++n) chis.emplace_back(n);
    for (int i = 0; i <= 20000; ++i) {
        const double sigma = 1.0 / n_max + (1.0 / n0 - 1.0 / n_max) * i / 20000.0;
        bool covered = false;
        for (const auto& chi : chis)
            if (chi.chi(sigma) == 1.0) {
                covered = true;
                break;
            }
        CHECK(covered);
    }
}
