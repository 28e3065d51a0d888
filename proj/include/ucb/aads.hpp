#pragma once

#include "ucb/assembly.hpp"

namespace ucb {

// ---------------------------------------------------------------------------
// Conformal reduction of Klein-Gordon operators on FG-gauge metrics
// ---------------------------------------------------------------------------

struct ConformalOperator {
    double mu = 0;
    int d = 2;
    double xi_singular = 0;  // mu - (d^2 - 1) / 4
    double max_v_dev = 0;    // disagreement of the extraction across test functions
    std::function<double(const ChartPoint&)> V;
    // sup |V| on sigma-slices, descending sigma (finite "bounded" proxy)
    std::vector<std::pair<double, double>> v_sup_by_sigma;
};

// gbar must be in FG form dsigma^2 + g(sigma) on the (sigma, ybar, s) chart.
ConformalOperator conjugate_operator(double mu, int d, const MetricField& gbar,
                                     const DomainSpec& spec);

// ---------------------------------------------------------------------------
// Pure AdS <-> planar AdS charts (d = 3, omega in S^2 as a Cartesian 3-vector)
// ---------------------------------------------------------------------------

// (tau, chi, omega) -> (t, rho, xbar^1, xbar^2); requires the point inside
// M_{P,eps} = { |tau| <= pi/2 - eps, omega^d < 0 }.
Vec pure_to_planar(double tau, double chi, const Vec& omega, double eps);

// omega^d recovered from planar coordinates (proof of the support lemma).
double omega_d_from_planar(double t, double rho, const Vec& xbar);

// Measured coordinate bound sup (|t| + rho + |xbar|) over M_{P,eps} and the
// denominator floor.
struct ChartBounds {
    double coord_sup = 0;
    double measured_c = 0;  // coord_sup * eps
    double min_denominator = 1e300;
};
ChartBounds measure_chart_bounds(double eps, int n_samples = 20000);

// Max componentwise relative deviation of the pullback of g_plan from g_AdS
// over Halton samples; the isometry makes the true value 0.
double verify_embedding(int n_samples, double eps, std::uint64_t seed = 12345);

// ---------------------------------------------------------------------------
// Support lemma: the counterexample tube stays in { omega^d < 0 }
// ---------------------------------------------------------------------------

struct SupportVerdict {
    bool pass = false;
    double max_omega_d = 0;
    double margin = 0;         // -max_omega_d
    double measured_c1 = 0;    // sup |t| over M_{P,eps}
    double max_x2_minus_t2 = 0;  // sup | |x|^2 - t^2 | over the tube
    double c2 = 0;               // that sup divided by delta
};

SupportVerdict support_in_half_space(double eps, double delta, double rho0,
                                     const Vec& kbar = {1.0, 0.0});

// ---------------------------------------------------------------------------
// GNCC diagnostic on 2-dimensional boundary data
// ---------------------------------------------------------------------------

struct BoundaryData {
    int nt = 0, nx = 0;
    double t_lo = 0, t_hi = 0, x_lo = 0, x_hi = 0;
    std::vector<Mat> g0;  // 2x2 Lorentzian boundary metric per node
    std::vector<Mat> g2;  // second FG coefficient per node
    Vec eta;              // GNCC function per node

    int idx(int it, int ix) const { return it * nx + ix; }
    double t(int it) const { return t_lo + (t_hi - t_lo) * it / (nt - 1); }
    double x(int ix) const { return x_lo + (x_hi - x_lo) * ix / (nx - 1); }
};

struct GnccResult {
    double margin = 0;          // min over grid and null fan; positive = holds
    double eta_boundary_max = 0;  // trace of eta on the region boundary (reported)
    int n_directions = 2;         // the 2-dim null cone has two rays
};

GnccResult gncc_check(const BoundaryData& bd);

// convenience builders for the diagnostic examples
BoundaryData make_flat_boundary(int nt, int nx, const std::function<double(double, double)>& eta);

// ---------------------------------------------------------------------------
// Klein-Gordon fidelity of the glued counterexample: phi_KG = sigma^{(d-1)/2} u
// satisfies (box_{g_plan} + mu) phi_KG = (sigma^2 a) phi_KG.
// ---------------------------------------------------------------------------

struct KgCertifyReport {
    double worst_rel_residual = 0;
    int n_probes = 0;
    double mu = 0;
};

KgCertifyReport kg_certify(const GluedCounterexample& glued, double mu, int probes_per_band = 48);

}  // namespace ucb
