#pragma once

#include <array>
#include <memory>

#include "ucb/transport.hpp"

namespace ucb {

// Exact flat-case balance root of f_n = f_{n+1} in the overlap (theta plateaus
// -1/2 / +1), evaluated from integer arithmetic.
double closed_form_balance_root(int n);

// B_n = (3/2) n^4 + 4 n^3 + 6 n^2 + 4 n + 1, the d_sigma Phi_n scale.
double interference_scale(int n);

// Envelope of a beam at a chart point (Lagrange interpolation on its grid).
complexd beam_envelope_at(const Beam& beam, const ChartPoint& p);

// log |v_n / v_{n+1}| computed in log space.
double interference_phi(const Beam& vn, const Beam& vn1, const ChartPoint& p);

// ---------------------------------------------------------------------------
// Interference surface S_n = { sigma = s_n(y, s) }
// ---------------------------------------------------------------------------

struct InterferenceSurface {
    int n = 0;  // between beams n and n+1
    int ny = 0, ns = 0;
    double y_lo = 0, y_hi = 0, s_lo = 0, s_hi = 0;
    std::vector<double> sn;  // raw sigma roots, row-major (j * ns + k)
    double B_n = 0;
    double bracket_lo = 0, bracket_hi = 0;  // the plateau bracket
    double max_residual_over_Bn = 0;        // max |Phi(root)| / B_n
    double max_C1 = 0;                      // max |(s_n - 1/n + (2/3)/n^2) n^3|
    double min_monotone_slope = 0;          // min of dPhi/dsigma / B_n on samples

    // Smooth representation: tensor-quadratic least-squares fit of the roots in
    // scaled (y, s). The paper bounds nabla s~_n by n^{beta - 2 alpha}, so the
    // fit reproduces the genuine variation while removing root-finder noise
    // that the n^{2 alpha}-weighted operators would otherwise amplify.
    Vec poly;                  // 9 coefficients, (a, b) -> poly[3 a + b], ty^a ts^b
    double fit_residual = 0;   // max |raw - fit|

    double at(int j, int k) const { return sn[static_cast<size_t>(j) * ns + k]; }
    double value(double y, double s) const;       // smooth fit
    Jet2 jet(double y, double s) const;            // chart-axis jet (g[0] = 0)
    void fit_from_raw();
};

InterferenceSurface locate_surface(const Beam& vn, const Beam& vn1);

struct SignBoundsReport {
    double max_upper = 0;    // max f_{n+1} - f_n on { sigma >= s_n }  (<= K0)
    double max_lower = 0;    // max f_n - f_{n+1} on { sigma <= s_n }  (<= K0)
    double far_decay_K = 0;  // K > 0 with f_{n+1} - f_n <= -K n^2 for sigma >= 1/n - 1/(6n^2)
    bool pass = false;
};

SignBoundsReport check_sign_bounds(const Beam& vn, const Beam& vn1,
                                   const InterferenceSurface& surface);

// ---------------------------------------------------------------------------
// eta chart for band n: eta = n^{-2} (sigma - s_n(y)) / (s_{n-1}(y) - s_n(y))
// ---------------------------------------------------------------------------

class EtaChart {
  public:
    // lower = S_n (eta = 0), upper = S_{n-1} (eta = n^{-2}); either can be a
    // synthetic constant companion (edge bands) via make_constant_surface.
    EtaChart(int n, std::shared_ptr<InterferenceSurface> lower,
             std::shared_ptr<InterferenceSurface> upper);

    int n() const { return n_; }
    double eta(double sigma, double y, double s) const;
    Jet2 eta_jet(double sigma, double y, double s) const;
    double sigma_of_eta(double eta, double y, double s) const;
    double lower_sigma(double y, double s) const { return lower_->value(y, s); }
    double upper_sigma(double y, double s) const { return upper_->value(y, s); }
    double gap(double y, double s) const { return upper_sigma(y, s) - lower_sigma(y, s); }
    double deta_dsigma(double y, double s) const;
    // measured Jacobian spread K0 over the band grid sample
    double jacobian_K0(const Grid3& g) const;

    const InterferenceSurface& lower() const { return *lower_; }
    const InterferenceSurface& upper() const { return *upper_; }

  private:
    int n_;
    std::shared_ptr<InterferenceSurface> lower_, upper_;
};

std::shared_ptr<InterferenceSurface> make_constant_surface(int n, const Grid3& g, double sigma);

// ---------------------------------------------------------------------------
// Operator coefficient probing in the (eta, ytilde) chart
// ---------------------------------------------------------------------------

// Coefficients of L = i n^{2a} T1 + T_{2,n} written as
//   a^{ee} d_ee + 2 a^{ey} d_ey + 2 a^{es} d_es + a^{yy} d_yy + 2 a^{ys} d_ys
//   + a^{ss} d_ss + b^e d_e + b^y d_y + b^s d_s + c
// sampled at probe stations along eta off each surface.
struct CoeffStation {
    complexd a_ee, a_ey, a_es, a_yy, a_ys, a_ss;
    complexd b_e, b_y, b_s, c;
};

struct ProbedCoeffs {
    int n_stations = 5;
    double dz = 0.065;  // station spacing in z = n^2 eta units
    // [surface j][station m][surface grid point]
    std::array<std::vector<std::vector<CoeffStation>>, 2> st;
    std::array<Vec, 2> eta_stations;  // eta values per surface
    double max_cross_check_dev = 0;   // a_ee vs direct metric contraction
    double min_a_ee = 1e300;
};

ProbedCoeffs probe_operator_coeffs(const Beam& beam, const EtaChart& chart,
                                   const std::array<bool, 2>& lobes);

// ---------------------------------------------------------------------------
// Correction data h^{(j)}_{n,M} and the omega field
// ---------------------------------------------------------------------------

struct CorrectionData {
    int n = 0;
    int K_corr = 2;
    int ny = 0, ns = 0;  // surface-grid dims (the band grid's (y, s) nodes)
    double y_lo = 0, y_hi = 0, s_lo = 0, s_hi = 0;
    // [surface j][M][surface grid point], M = 0 .. K_corr + 2
    std::array<std::vector<std::vector<complexd>>, 2> h;
    ProbedCoeffs coeffs;
    std::array<bool, 2> lobes{true, true};
    double min_a_ee = 0;
    double sup_h_top = 0;  // sup |h_{K+2}|
};

CorrectionData correction_data(const Beam& beam, const EtaChart& chart,
                               const ProbedCoeffs& coeffs, int K_corr);

class OmegaField {
  public:
    OmegaField(std::shared_ptr<EtaChart> chart, std::shared_ptr<CorrectionData> data,
               double epsilon, const CutoffProfile& cutoff);

    // value at a surface-grid-aligned point: (z, j, k) with z = n^2 eta
    complexd value_zjk(double z, int j, int k) const;
    // chart-coordinate partial of given eta order (tangential handled by L_value)
    complexd deta_zjk(double z, int j, int k, int order) const;
    // L(omega) via the probed coefficients; needs tangential stencils
    complexd L_value_zjk(double z, int j, int k) const;

    complexd value_at(const ChartPoint& p) const;  // general point (interpolated)

    double eps_in(int lobe) const { return eps_in_[static_cast<size_t>(lobe)]; }
    double eps_out(int lobe) const { return eps_out_[static_cast<size_t>(lobe)]; }
    const EtaChart& chart() const { return *chart_; }
    const CorrectionData& data() const { return *data_; }
    double sup_recorded() const { return sup_omega_; }
    void record_sup(double s) { sup_omega_ = s; }

  private:
    std::shared_ptr<EtaChart> chart_;
    std::shared_ptr<CorrectionData> data_;
    std::array<double, 2> eps_in_{}, eps_out_{};
    double sup_omega_ = 0;
};

std::shared_ptr<OmegaField> build_omega(const Beam& beam, std::shared_ptr<EtaChart> chart,
                                        std::shared_ptr<CorrectionData> data, double epsilon);

// ---------------------------------------------------------------------------
// Band modification
// ---------------------------------------------------------------------------

struct ModifiedBandReport {
    double sup_omega = 0;
    double max_on_surface = 0;        // |omega| and |d_sigma omega| at surface samples
    bool support_ok = false;
    std::array<double, 2> psi_fit_slope{0, 0};  // at S_n (j=0) and S_{n-1} (j=1)
    std::array<double, 2> surface_shift_over_Bn{0, 0};  // |Phi~| at old roots / B_n
};

// Adds omega to the envelope, re-asserts support, fits the psi vanishing order.
ModifiedBandReport modified_band(Beam& beam, std::shared_ptr<OmegaField> omega);

// psi_n = (i n^{2a} T1 + T2)(envelope) evaluated stably as r + L(omega).
complexd psi_value_zjk(const Beam& beam, double z, int j, int k);

}  // namespace ucb
