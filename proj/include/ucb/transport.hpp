#pragma once

#include <memory>

#include "ucb/bands.hpp"
#include "ucb/eikonal.hpp"
#include "ucb/geometry.hpp"
#include "ucb/stencil.hpp"

namespace ucb {

struct HierarchyConfig {
    double alpha = 6.0;
    double beta = 1.0;
    int depth_cap = 4;          // J_n = min(depth_cap, n / 4)
    bool deep_schedule = false; // J_n = max(3, n - 10); used by the decay study
    double ode_tol = 1e-10;
    int measured_ladder_max = 4;  // compute sup |L(partial sum)| only up to here

    void validate() const {
        if (!(alpha > beta && beta > 0)) throw ConfigError("need alpha > beta > 0");
        if (alpha < 5.0) throw ConfigError("alpha >= 5 required");
    }
    int depth_for(int n) const {
        if (deep_schedule) return std::max(3, n - 10);
        return std::min(depth_cap, n / 4);
    }
};

// lambda_n = n^(2 alpha), exact for integral 2 alpha
double beam_frequency(int n, double alpha);

// Residual-ladder bookkeeping for one band.
struct LadderReport {
    std::vector<double> direct;    // R_J = n^{-J alpha} sup |T2 c_J| over supp chi
    std::vector<double> measured;  // sup |(i n^{2a} T1 + T2)(sum_{j<=J} ...)|
    std::vector<double> step_factor;  // R_{J+1} / R_J
    int j_check = 0;                  // deepest noise-feasible telescoping check
    double worst_rel_gap = 0;         // over J <= j_check
    double noise_floor = 0;
};

struct Beam;

// Per-band operator context: grid, cutoff/amplitude profiles, and cached
// geometric coefficients (assumed s-independent, which holds for every
// registered metric).
class BeamContext {
  public:
    BeamContext(const BandDomain& band, const MetricField& metric, const EikonalData& eikonal,
                const SingularPotential& pot, const HierarchyConfig& cfg);

    const BandDomain& band() const { return band_; }
    const Grid3& grid() const { return band_.grid; }
    const HierarchyConfig& config() const { return cfg_; }
    const AmplitudeProfile& amplitude() const { return *amp_; }
    const CutoffProfile& cutoff() const { return *cutoff_; }
    const MetricField& metric() const { return metric_; }
    const EikonalData& eikonal() const { return eikonal_; }
    const SingularPotential& potential() const { return pot_; }

    int n() const { return band_.n; }
    double lambda() const { return lambda_; }

    // cached per-(i,j) geometry
    struct Coeffs {
        Mat g_inv;
        Vec box_b;        // first-order divergence coefficients
        Vec grad_sigma;   // g^{sigma beta} row
        double box_sigma = 0;
        double box_phi = 0;
        double pair_sigma = 0;  // g^{-1}(dsigma, dsigma)
    };
    const Coeffs& coeffs(int i, int j) const {
        return coeffs_[static_cast<size_t>(i) * grid().ny + j];
    }
    complexd xi_over_sigma2(int i, int j) const {
        return xi_[static_cast<size_t>(i) * grid().ny + j];
    }
    double fprime(int i) const { return fprime_[static_cast<size_t>(i)]; }
    double fsecond(int i) const { return fsecond_[static_cast<size_t>(i)]; }
    double chi_at(int i) const { return chi_[static_cast<size_t>(i)]; }

    Field3 apply_box(const Field3& h) const;
    Field3 apply_T1(const Field3& h) const;
    Field3 apply_T2(const Field3& h) const;
    // i n^{2 alpha} T1 + T2
    Field3 apply_L(const Field3& h) const;

    // Point-wise application of L to an analytic jet (exact derivatives).
    struct PointOp {
        Mat g_inv;
        Vec box_b;
        double box_sigma = 0, box_phi = 0, pair_sigma = 0;
        complexd xi_over_sigma2;
        double fprime = 0, fsecond = 0;
    };
    PointOp point_op(const ChartPoint& p) const;
    complexd apply_L_point(const PointOp& op, const Jet2& m) const;

    // sup |f| restricted to the support of chi_n
    double sup_on_support(const Field3& f) const;

    // zero a field at sigma stations where chi_n vanishes
    void mask_outside_support(Field3& f) const;

    // Transport hierarchy c_0 .. c_depth (sources masked to supp chi).
    std::vector<Field3> solve_hierarchy(int depth) const;

    // worst residual of the defining transport equations, grid-measured
    double transport_residual(const std::vector<Field3>& c) const;

    enum class LineInit { Zero, Chi, One };
    // dc/ds = -box_phi c + source along s-lines (RK4 at the grid step)
    void solve_line_ode(const Field3& source, LineInit init, Field3& out) const;

  private:
    BandDomain band_;
    MetricField metric_;
    EikonalData eikonal_;
    SingularPotential pot_;
    HierarchyConfig cfg_;
    std::shared_ptr<AmplitudeProfile> amp_;
    std::shared_ptr<CutoffProfile> cutoff_;
    double lambda_ = 0;
    int k_s0_ = -1;  // index of the s = 0 plane
    std::vector<Coeffs> coeffs_;
    std::vector<complexd> xi_;
    std::vector<double> fprime_, fsecond_, chi_;
    bool mixed_ys_ = false, mixed_zy_ = false, mixed_zs_ = false;
};

class OmegaField;

// One band's assembled beam.
struct Beam {
    int n = 0;
    double alpha = 0, beta = 0;
    double lambda = 0;
    int J = 0;
    Field3 envelope;    // c_0 + c_star (+ omega after modification)
    // smooth factorization for ring-free interpolation near the cutoff ramps:
    // envelope = chi_n(sigma) * w_factor + rest, with w_factor the unit-initial
    // transport solution (c_0 = chi * w exactly) and rest = c_star (+ omega)
    Field3 w_factor;
    Field3 rest;
    Field3 cstar;       // rest before the omega modification (transport part)
    Field3 residual_r;  // n^{-J alpha} T2 c_J: the telescoped L(envelope)
    double sup_c0 = 0, sup_cstar = 0, measured_K0 = 1.0;
    LadderReport ladder;
    std::shared_ptr<BeamContext> ctx;
    std::shared_ptr<OmegaField> omega;  // attached by modified_band
};

std::shared_ptr<BeamContext> make_beam_context(int n, const DomainSpec& spec,
                                               const GridResolution& res,
                                               const MetricField& metric,
                                               const EikonalData& eikonal,
                                               const SingularPotential& pot,
                                               const HierarchyConfig& cfg);

Beam assemble_band(const std::shared_ptr<BeamContext>& ctx);

// Max relative deviation between (i n^{2a} T1 + T2) w and the log-amplitude
// aware finite-difference application of the conjugated operator P.
double conjugation_residual(const BeamContext& ctx, const Field3& w, int probe_margin = 5);

// |g^{-1}(dphi, dsigma)| at the grid centre (the identity's cross term).
double phi_sigma_pairing(const BeamContext& ctx);

}  // namespace ucb
