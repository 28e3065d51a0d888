#pragma once

#include <vector>

#include "ucb/chart.hpp"
#include "ucb/common.hpp"
#include "ucb/smoothstep.hpp"

namespace ucb {

// ---------------------------------------------------------------------------
// Structured tensor grid over one band: sigma-axis uniform in the rescaled
// variable z = n^2 (sigma - 1/n), s the fastest-varying index.
// ---------------------------------------------------------------------------

struct GridResolution {
    int n_sigma = 129;
    int n_y = 65;
    int n_s = 257;
};

struct Grid3 {
    int band_n = 0;
    int nz = 0, ny = 0, ns = 0;
    double z_lo = 0, z_hi = 0;  // rescaled sigma endpoints
    double y_lo = 0, y_hi = 0;
    double s_lo = 0, s_hi = 0;

    double dz() const { return (z_hi - z_lo) / (nz - 1); }
    double dy() const { return (y_hi - y_lo) / (ny - 1); }
    double ds() const { return (s_hi - s_lo) / (ns - 1); }
    double z(int i) const { return z_lo + i * dz(); }
    double sigma(int i) const { return 1.0 / band_n + z(i) / (static_cast<double>(band_n) * band_n); }
    double sigma_of_z(double zz) const {
        return 1.0 / band_n + zz / (static_cast<double>(band_n) * band_n);
    }
    double z_of_sigma(double sg) const {
        return (sg - 1.0 / band_n) * band_n * band_n;
    }
    double y(int j) const { return y_lo + j * dy(); }
    double s(int k) const { return s_lo + k * ds(); }
    // sigma spacing implied by the uniform z grid
    double dsigma() const { return dz() / (static_cast<double>(band_n) * band_n); }

    std::int64_t size() const {
        return static_cast<std::int64_t>(nz) * ny * ns;
    }
    std::int64_t flat(int i, int j, int k) const {
        return (static_cast<std::int64_t>(i) * ny + j) * ns + k;
    }
    ChartPoint point(int i, int j, int k) const { return {sigma(i), {y(j)}, s(k)}; }
};

struct Field3 {
    Grid3 grid;
    std::vector<complexd> v;

    explicit Field3(const Grid3& g = {}) : grid(g), v(static_cast<size_t>(g.size())) {}
    complexd& at(int i, int j, int k) { return v[static_cast<size_t>(grid.flat(i, j, k))]; }
    complexd at(int i, int j, int k) const { return v[static_cast<size_t>(grid.flat(i, j, k))]; }
    double sup_abs() const {
        double m = 0;
        for (const complexd& c : v) m = std::max(m, std::abs(c));
        return m;
    }
};

// ---------------------------------------------------------------------------
// Band decomposition
// ---------------------------------------------------------------------------

// Exact rational endpoints of Omega_n evaluated in floating point.
double band_sigma_lo(int n);  // 1/(n+1) + 1/(8(n+1)^2)
double band_sigma_hi(int n);  // 1/(n-1) - 1/(8(n-1)^2)

struct BandDomain {
    int n = 0;
    double sigma_lo = 0, sigma_hi = 0;
    Grid3 grid;
};

BandDomain band_domain(int n, const DomainSpec& spec, const GridResolution& res = {});

// f_n(sigma) = -n^2 - n^4 (sigma - 1/n) theta(n^2 (sigma - 1/n)) with analytic
// derivatives through order 3 and a measured rescaled-derivative table.
class AmplitudeProfile {
  public:
    AmplitudeProfile(int n, const Theta& theta, int n_max_table = 4);

    int n() const { return n_; }
    double f(double sigma) const;
    double df(double sigma, int order = 1) const;  // order <= 3 analytic

    // sup over the band of |(n^{-2} d_sigma)^k f_n| / n^2 (k >= 1)
    const std::vector<double>& rescaled_sup_table() const { return table_; }

    void assert_piecewise_bounds() const;  // the three-case upper bounds

  private:
    int n_;
    Theta theta_;
    std::vector<double> table_;
};

// chi_n: plateau on the 1/6-lines, support inside the 1/7-lines, built from
// the shared master step.
class CutoffProfile {
  public:
    CutoffProfile(int n, int n_max_table = 4);

    int n() const { return n_; }
    double support_lo() const { return support_lo_; }
    double support_hi() const { return support_hi_; }
    double plateau_lo() const { return plateau_lo_; }
    double plateau_hi() const { return plateau_hi_; }

    double chi(double sigma) const;
    double dchi(double sigma, int order) const;

    // measured sup |chi^{(N)}| and K_N = sup / n^{2N}
    const std::vector<double>& derivative_sup_table() const { return sup_table_; }
    std::vector<double> K_table() const;

  private:
    int n_;
    double support_lo_, support_hi_, plateau_lo_, plateau_hi_;
    std::vector<double> sup_table_;
};

Theta make_theta();

}  // namespace ucb
