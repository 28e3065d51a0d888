#include "ucb/bands.hpp"

#include <cmath>

namespace ucb {

double band_sigma_lo(int n) {
    const double m = n + 1;
    return (8.0 * m + 1.0) / (8.0 * m * m);
}

double band_sigma_hi(int n) {
    const double m = n - 1;
    return (8.0 * m - 1.0) / (8.0 * m * m);
}

BandDomain band_domain(int n, const DomainSpec& spec, const GridResolution& res) {
    if (n < 2) throw ConfigError("band index must be >= 2");
    BandDomain b;
    b.n = n;
    b.sigma_lo = band_sigma_lo(n);
    b.sigma_hi = band_sigma_hi(n);
    if (b.sigma_hi > spec.sigma0)
        throw BandOutsideDomain("band " + std::to_string(n) + " reaches sigma = " +
                                std::to_string(b.sigma_hi) + " beyond sigma0 = " +
                                std::to_string(spec.sigma0));
    b.grid.band_n = n;
    b.grid.nz = res.n_sigma;
    b.grid.ny = res.n_y;
    b.grid.ns = res.n_s;
    b.grid.z_lo = (b.sigma_lo - 1.0 / n) * n * static_cast<double>(n);
    b.grid.z_hi = (b.sigma_hi - 1.0 / n) * n * static_cast<double>(n);
    b.grid.y_lo = spec.ybar_box.lo[0];
    b.grid.y_hi = spec.ybar_box.hi[0];
    b.grid.s_lo = spec.s_minus;
    b.grid.s_hi = spec.s_plus;
    return b;
}

Theta make_theta() { return Theta(master_step()); }

// ---------------------------------------------------------------------------
// AmplitudeProfile
// ---------------------------------------------------------------------------

AmplitudeProfile::AmplitudeProfile(int n, const Theta& theta, int n_max_table)
    : n_(n), theta_(theta) {
    // (n^{-2} d_sigma)^k f_n = -n^2 [z theta(z)]^{(k)}, so the rescaled table
    // is sup_z |k theta^{(k-1)}(z) + z theta^{(k)}(z)| over the band's z-range.
    const double n2 = static_cast<double>(n) * n;
    const double z_lo = (band_sigma_lo(n) - 1.0 / n) * n2;
    const double z_hi = (band_sigma_hi(n) - 1.0 / n) * n2;
    table_.assign(static_cast<size_t>(n_max_table) + 1, 0.0);
    const int samples = 2048;
    for (int i = 0; i <= samples; ++i) {
        const double z = z_lo + (z_hi - z_lo) * i / samples;
        for (int k = 1; k <= n_max_table; ++k) {
            const double tkm1 = (k == 1) ? theta_(z) : theta_.derivative(z, k - 1);
            const double val = k * tkm1 + z * theta_.derivative(z, k);
            table_[static_cast<size_t>(k)] = std::max(table_[static_cast<size_t>(k)], std::abs(val));
        }
    }
}

double AmplitudeProfile::f(double sigma) const {
    const double n2 = static_cast<double>(n_) * n_;
    const double u = sigma - 1.0 / n_;
    return -n2 - n2 * n2 * u * theta_(n2 * u);
}

double AmplitudeProfile::df(double sigma, int order) const {
    const double n2 = static_cast<double>(n_) * n_;
    const double n4 = n2 * n2;
    const double z = n2 * (sigma - 1.0 / n_);
    switch (order) {
        case 1:
            return -n4 * (theta_(z) + z * theta_.derivative(z, 1));
        case 2:
            return -n4 * n2 * (2.0 * theta_.derivative(z, 1) + z * theta_.derivative(z, 2));
        case 3:
            return -n4 * n4 * (3.0 * theta_.derivative(z, 2) + z * theta_.derivative(z, 3));
        default:
            throw ConfigError("AmplitudeProfile::df supports orders 1..3");
    }
}

void AmplitudeProfile::assert_piecewise_bounds() const {
    const double n2 = static_cast<double>(n_) * n_;
    const double lo = band_sigma_lo(n_), hi = band_sigma_hi(n_);
    const int samples = 4096;
    for (int i = 0; i <= samples; ++i) {
        const double sigma = lo + (hi - lo) * i / samples;
        const double u = sigma - 1.0 / n_;
        const double fv = f(sigma);
        double bound;
        if (u <= -1.0 / (8.0 * n2))
            bound = -17.0 / 16.0 * n2;
        else if (u >= 1.0 / (8.0 * n2))
            bound = -9.0 / 8.0 * n2;
        else
            bound = -7.0 / 8.0 * n2;
        if (fv > bound + 1e-9 * n2)
            throw Error("amplitude bound violated at sigma=" + std::to_string(sigma));
    }
}

// ---------------------------------------------------------------------------
// CutoffProfile
// ---------------------------------------------------------------------------

CutoffProfile::CutoffProfile(int n, int n_max_table) : n_(n) {
    const double a = n + 1.0, b = n - 1.0;
    support_lo_ = 1.0 / a + 1.0 / (7.0 * a * a);
    plateau_lo_ = 1.0 / a + 1.0 / (6.0 * a * a);
    plateau_hi_ = 1.0 / b - 1.0 / (6.0 * b * b);
    support_hi_ = 1.0 / b - 1.0 / (7.0 * b * b);

    const double n2 = static_cast<double>(n) * n;
    const double ramp_lo = plateau_lo_ - support_lo_;
    const double ramp_hi = support_hi_ - plateau_hi_;
    const SmoothStep& step = master_step();
    sup_table_.assign(static_cast<size_t>(n_max_table) + 1, 0.0);
    sup_table_[0] = 1.0;
    for (int k = 1; k <= n_max_table; ++k) {
        const double ms = step.derivative_sup(k);
        sup_table_[static_cast<size_t>(k)] =
            ms * std::max(std::pow(ramp_lo, -k), std::pow(ramp_hi, -k));
    }
    (void)n2;
}

double CutoffProfile::chi(double sigma) const {
    const SmoothStep& step = master_step();
    if (sigma <= support_lo_ || sigma >= support_hi_) return 0.0;
    if (sigma < plateau_lo_) return step((sigma - support_lo_) / (plateau_lo_ - support_lo_));
    if (sigma <= plateau_hi_) return 1.0;
    return step((support_hi_ - sigma) / (support_hi_ - plateau_hi_));
}

double CutoffProfile::dchi(double sigma, int order) const {
    if (order == 0) return chi(sigma);
    const SmoothStep& step = master_step();
    if (sigma <= support_lo_ || sigma >= support_hi_) return 0.0;
    if (sigma < plateau_lo_) {
        const double w = plateau_lo_ - support_lo_;
        return step.derivative((sigma - support_lo_) / w, order) / std::pow(w, order);
    }
    if (sigma <= plateau_hi_) return 0.0;
    const double w = support_hi_ - plateau_hi_;
    return step.derivative((support_hi_ - sigma) / w, order) * std::pow(-1.0 / w, order);
}

std::vector<double> CutoffProfile::K_table() const {
    std::vector<double> K(sup_table_.size());
    const double n2 = static_cast<double>(n_) * n_;
    double p = 1.0;
    for (size_t k = 0; k < sup_table_.size(); ++k) {
        K[k] = sup_table_[k] / p;
        p *= n2;
    }
    return K;
}

}  // namespace ucb
