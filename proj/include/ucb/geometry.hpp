#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ucb/chart.hpp"
#include "ucb/common.hpp"

namespace ucb {

// ---------------------------------------------------------------------------
// Scalar fields: analytic evaluation plus optional analytic jets. Operators
// fall back to centered finite differences when a jet is missing.
// ---------------------------------------------------------------------------

struct ScalarField {
    std::function<double(const ChartPoint&)> eval;
    std::function<Vec(const ChartPoint&)> grad;  // d+1 components (sigma, ybar, s)
    std::function<Mat(const ChartPoint&)> hess;  // optional

    bool has_grad() const { return static_cast<bool>(grad); }
    bool has_hess() const { return static_cast<bool>(hess); }
};

// Finite-difference plan for point-wise operators.
struct FdPlan {
    int order = 4;       // 2 or 4
    Vec steps;           // per-axis steps; empty = uniform `step`
    double step = 1e-4;

    double step_for(int axis) const {
        return steps.empty() ? step : steps[static_cast<size_t>(axis)];
    }
};

struct MetricData {
    Mat g;
    Mat g_inv;
    double det = 0;
    double sqrt_abs_det = 0;
};

// Lorentzian metric in chart coordinates (sigma, ybar, s).
class MetricField {
  public:
    int dimension = 0;  // d+1
    std::string name;
    std::function<Mat(const ChartPoint&)> eval_g;
    // Analytic first derivatives: deriv(p)[alpha](beta,gamma) = d_alpha g_{beta gamma}.
    std::function<std::vector<Mat>(const ChartPoint&)> deriv;
    // Optional chart-validity predicate (degenerate loci excluded).
    std::function<bool(const ChartPoint&)> in_chart;
    double fd_step = 1e-6;

    bool has_analytic_deriv() const { return static_cast<bool>(deriv); }
    std::vector<Mat> derivatives(const ChartPoint& p) const;  // analytic or centered FD
};

// Singular potential xi / sigma^2 with the timelike-level-set constants.
struct SingularPotential {
    std::function<complexd(const ChartPoint&)> xi;
    double gamma = 0.0;  // g^{-1}(dsigma,dsigma) >= C sigma^gamma
    double C = 1.0;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Point evaluation with invariant checks (signature, inverse, volume factor).
MetricData metric_at(const MetricField& metric, const ChartPoint& p);

// First derivative of a scalar field along axis, centered (order 2/4), using
// the analytic gradient when available.
double partial(const ScalarField& h, const ChartPoint& p, int axis, const FdPlan& fd);
Vec gradient_components(const ScalarField& h, const ChartPoint& p, const FdPlan& fd);
double second_partial(const ScalarField& h, const ChartPoint& p, int axis_a, int axis_b,
                      const FdPlan& fd);

// Divergence-form wave operator |det g|^{-1/2} d_a(|det g|^{1/2} g^{ab} d_b h).
double box_g(const MetricField& metric, const ScalarField& h, const ChartPoint& p,
             const FdPlan& fd = {});

// g^{ab} d_b h.
Vec grad_g(const MetricField& metric, const ScalarField& h, const ChartPoint& p,
           const FdPlan& fd = {});

// g^{-1}(dh1, dh2).
double inverse_pairing(const MetricField& metric, const ScalarField& h1, const ScalarField& h2,
                       const ChartPoint& p, const FdPlan& fd = {});

// First-order coefficients of the divergence form: b^b = |g|^{-1/2} d_a(|g|^{1/2} g^{ab}).
Vec box_first_order_coeffs(const MetricField& metric, const ChartPoint& p);

// Levi-Civita symbols Gamma^a_{bc}; symmetric in (b, c).
std::vector<Mat> christoffels(const MetricField& metric, const ChartPoint& p);

// ---------------------------------------------------------------------------
// Built-in metric registry
// ---------------------------------------------------------------------------

// "planar-conformal": conformal planar AdS metric dsigma^2 + dybar^2
//   + 2 kbar.dybar ds in adapted coordinates; constant coefficients.
MetricField make_planar_conformal_metric(const Vec& kbar);

// "pure-ads-conformal": half Einstein cylinder, coordinates
//   (sigma, ybar, s) = (chi, (theta, phi), tau), d = 3:
//   g = -dtau^2 + dchi^2 + cos^2(chi) (dtheta^2 + sin^2(theta) dphi^2).
MetricField make_pure_ads_conformal_metric();

// "fg-generic": dsigma^2 + sum_k sigma^k G_k over the (ybar, s) block.
MetricField make_fg_metric(const std::vector<Mat>& rho_power_coeffs);

// Grid-sampled metric from a structured text file (see io.cpp for the format).
MetricField load_metric_file(const std::string& path);

MetricField metric_by_name(const std::string& name, const Vec& kbar = {1.0});

}  // namespace ucb
