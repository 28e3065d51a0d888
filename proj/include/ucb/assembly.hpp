#pragma once

#include <optional>

#include "ucb/interference.hpp"

namespace ucb {

// ---------------------------------------------------------------------------
// Glued counterexample u = sum_n v~_n, a = P u / u
// ---------------------------------------------------------------------------

struct GluedCounterexample {
    std::vector<Beam> beams;  // consecutive n, ascending
    int n0 = 0, n_max = 0;

    const Beam* beam(int n) const {
        if (n < n0 || n > n_max) return nullptr;
        return &beams[static_cast<size_t>(n - n0)];
    }
    // indices of beams whose chi-support contains sigma (at most two,
    // consecutive)
    std::vector<int> bands_at(double sigma) const;
};

// u at a point, kept in log-magnitude / phase form. Derivative sup logs hold
// log |D^N u| with D^N the largest pure coordinate derivative of order N.
struct UValue {
    double log_mag = -1e300;
    double phase = 0;
    int bands = 0;
    std::array<double, 4> deriv_log = {-1e300, -1e300, -1e300, -1e300};
};

UValue evaluate_u(const GluedCounterexample& glued, const ChartPoint& p, int n_deriv = 0);

struct AValue {
    complexd a;
    double conditioning = 1;     // amplification of the two-band quotient
    bool ill_conditioned = false;  // conditioning > 1e6 (value still returned)
};

AValue evaluate_a(const GluedCounterexample& glued, const ChartPoint& p);

// ---------------------------------------------------------------------------
// Decay tabulation
// ---------------------------------------------------------------------------

struct DecaySlice {
    double sigma0 = 0;
    int band = 0;
    std::array<double, 4> log_sup_du = {-1e300, -1e300, -1e300, -1e300};  // N = 0..3
    std::array<double, 4> log_sup_da = {-1e300, -1e300, -1e300, -1e300};
};

struct DecayReport {
    std::vector<DecaySlice> slices;   // descending sigma0
    double fitted_q = 0;              // log sup|u| ~ -q / sigma^2
    std::vector<double> mu_list;
    // worst ratio over consecutive slices of sigma^{-mu} sup|.|, per mu
    std::vector<double> worst_u_ratio;
    std::vector<double> worst_a_ratio;
    bool monotone_u = false;
};

DecayReport decay_report(const GluedCounterexample& glued, const std::vector<double>& sigma_samples,
                         const std::vector<double>& mu_list, int n_probe = 3);

// ---------------------------------------------------------------------------
// PDE certification P u = a u
// ---------------------------------------------------------------------------

struct CertifyProbe {
    ChartPoint p;
    int band = 0;
    bool near_surface = false;
    double rel_residual = 0;
    double conditioning = 1;
};

struct CertifyReport {
    std::vector<CertifyProbe> probes;
    double worst_interior = 0;
    double worst_near_surface = 0;
    int n_interior = 0, n_near_surface = 0;
    double tol_interior = 1e-5, tol_near_surface = 1e-4;
    bool pass = false;
};

CertifyReport certify_equation(const GluedCounterexample& glued, int interior_per_band = 96,
                               int near_surface_per_band = 24, double tol = 1e-5,
                               double tol_near = 1e-4);

// Overlap diagnostics for the surface-coincidence and lower-bound invariants.
struct OverlapDiagnostics {
    int n = 0;                      // overlap of bands n, n+1
    double deep_zero_cell_dist = 0; // worst |argmin sigma - s_n| / cell, deep dips only
    int deep_dips = 0;
    double min_lower_ratio = 1e300; // min |v_n + v_{n+1}| / (|v_dom| min(|sigma-s_n|,1))
    double surface_coincidence = 0; // max | |v_n| - |v_{n+1}| | / |v_n| on S_n samples
};

OverlapDiagnostics overlap_diagnostics(const GluedCounterexample& glued, int n);

}  // namespace ucb
