#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ucb/bands.hpp"
#include "ucb/geometry.hpp"
#include "ucb/smoothstep.hpp"

namespace ucb {

// ---------------------------------------------------------------------------
// Eikonal data: the triple (phi, sigma, s) with certification residuals.
// ---------------------------------------------------------------------------

struct EikonalCertification {
    double tol = 1e-9;  // tau_eik
    double max_null_residual = 0;
    double max_gauge_residual = 0;
    double min_sigma_pairing = 0;    // min over grid of g^{-1}(dsigma, dsigma)
    double min_sigma_margin = 0;     // min of g^{-1}(dsigma,dsigma) - C sigma^gamma
    bool null_pass = false;
    bool gauge_pass = false;
    bool sigma_pass = false;
    // measured sup |d_sigma^k nabla^l phi| for k + l <= N_max, indexed [k][l]
    std::vector<std::vector<double>> phi_derivative_sup;

    bool pass() const { return null_pass && gauge_pass && sigma_pass; }
};

struct EikonalData {
    ScalarField phi;
    ScalarField sigma_field;
    Vec kbar;
    // ambient <-> adapted chart maps (identity-like for the planar closed form)
    std::function<Vec(const ChartPoint&)> ambient_from_adapted;
    std::function<ChartPoint(const Vec&)> adapted_from_ambient;
    EikonalCertification certification;
    bool gauge_checkable = true;
};

struct BumpProfile {
    double sigma1 = 0.05;
    Box inner_box{{-1.0}, {1.0}};
    Box outer_box{{-2.0}, {2.0}};

    void validate() const;
    double psi(const Vec& ybar) const;
    Vec dpsi(const Vec& ybar) const;
};

// ---------------------------------------------------------------------------
// Geodesic machinery (section 3.3 construction)
// ---------------------------------------------------------------------------

struct GeodesicStep {
    double s = 0;         // adapted (gauge-rescaled) parameter
    Vec x;                // ambient coordinates
    Vec v;                // velocity dx/ds'
    double null_residual = 0;
    double jacobian_log = 0;  // filled after fan assembly
};

struct GeodesicTrajectory {
    int launch_i = 0, launch_j = 0;
    double kappa = 1.0;  // foliation density E(x^1) at launch
    std::vector<GeodesicStep> forward;   // s >= 0
    std::vector<GeodesicStep> backward;  // s <= 0
    double s_min = 0, s_max = 0;         // surviving range after truncation
    bool caustic = false;
};

struct GeodesicFamily {
    std::vector<GeodesicTrajectory> trajectories;  // launch_i * n_x + launch_j
    int n_rho = 0, n_x = 0;
    Vec rho_samples, x_samples;
    double s_grid_step = 0;
};

struct CausticReport {
    double epsilon_caustic = 1e-3;
    double s_min_surviving = 0, s_max_surviving = 0;
    double max_null_residual = 0;
    double max_geodesic_residual = 0;
    double jacobian_log_min = 0, jacobian_log_max = 0;
    int flagged_trajectories = 0;
};

struct SectionSpec {
    double rho_lo = 5e-3, rho0 = 0.05;
    int n_rho = 9;
    double x_lo = -1.0, x_hi = 1.0;
    int n_x = 17;
    std::function<double(double)> height;           // t = h(x), default 0
    std::function<double(double)> foliation;        // x^1(x), default identity
    std::function<double(double)> foliation_deriv;  // default 1
    double s_max = 1.0;
    int n_s = 129;  // output steps per side
    std::function<bool(const Vec&)> inside;  // ambient guard, default accept
};

struct OdeOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double max_step = 0.05;
    double min_step = 1e-12;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

EikonalData planar_eikonal(const Vec& kbar);

// Explicit pure-AdS eikonal on the (chi, (theta,phi), tau) chart, d = 3.
ScalarField pure_ads_explicit_phi(const Vec& kbar2);

EikonalCertification verify_eikonal(const EikonalData& data, const MetricField& metric,
                                    const DomainSpec& spec, int n_per_axis = 33,
                                    const SingularPotential* pot = nullptr, double tol = 1e-9,
                                    int n_max = 3, double sigma_floor_frac = 0.05);

EikonalData deform_sigma(const EikonalData& data, const BumpProfile& bump,
                         const MetricField& metric, const DomainSpec& spec);

// Integrate one affinely parameterized geodesic; state is (x, dx/dt).
// Returns samples at the requested parameter values.
std::vector<GeodesicStep> integrate_geodesic(const MetricField& metric, const Vec& x0,
                                             const Vec& v0, const std::vector<double>& t_out,
                                             const OdeOptions& opts,
                                             const std::function<bool(const Vec&)>& inside);

struct SectionConstruction {
    EikonalData eikonal;
    GeodesicFamily family;
    CausticReport caustics;
    MetricField adapted_metric;  // pullback of the ambient metric to (sigma, ybar, s)
};

SectionConstruction construct_eikonal_from_section(const MetricField& ambient_metric,
                                                   const SectionSpec& section,
                                                   const OdeOptions& opts = {});

// Ambient planar metric diag(1, I_{d-1}, -1) in (rho, xbar, t) order.
MetricField make_planar_ambient_metric(int d);

void dump_family_csv(const GeodesicFamily& family, const std::string& path);

}  // namespace ucb
