#include "ucb/smoothstep.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ucb {

namespace {

// Derivatives of g(t) = -a / (t - t^2) as sums of terms c * u^{-k} * (u')^j
// with u = t - t^2 (u'' = -2, higher derivatives vanish).
struct RationalJet {
    // term key: (k, j) -> coefficient
    using Terms = std::map<std::pair<int, int>, double>;
    std::vector<Terms> deriv;  // deriv[m] holds g^{(m+1)} / (-a)

    explicit RationalJet(int max_order) {
        Terms g1;  // d/dt u^{-1} = -u^{-2} u'
        g1[{2, 1}] = -1.0;
        deriv.push_back(g1);
        for (int m = 1; m < max_order; ++m) {
            Terms next;
            for (const auto& [key, c] : deriv.back()) {
                const auto [k, j] = key;
                next[{k + 1, j + 1}] += -k * c;
                if (j > 0) next[{k, j - 1}] += -2.0 * j * c;
            }
            deriv.push_back(next);
        }
    }

    double eval(int order, double t, double a) const {
        const double u = t - t * t, up = 1.0 - 2.0 * t;
        double s = 0;
        for (const auto& [key, c] : deriv[order - 1]) {
            const auto [k, j] = key;
            s += c * std::pow(u, -k) * std::pow(up, j);
        }
        return -a * s;
    }
};

const RationalJet& rational_jet() {
    static RationalJet jet(9);
    return jet;
}

}  // namespace

SmoothStep::SmoothStep(double shape, int table_size) : a_(shape) {
    // cumulative Simpson over an even number of intervals
    if (table_size % 2 == 0) ++table_size;
    cdf_.resize(table_size);
    h_ = 1.0 / (table_size - 1);
    cdf_[0] = 0.0;
    for (int i = 2; i < table_size; i += 2) {
        const double t0 = (i - 2) * h_, t1 = (i - 1) * h_, t2 = i * h_;
        const double add = (h_ / 3.0) * (bump(t0) + 4.0 * bump(t1) + bump(t2));
        cdf_[i] = cdf_[i - 2] + add;
        cdf_[i - 1] = cdf_[i - 2] + 0.5 * add +
                      (h_ / 12.0) * (bump(t0) - bump(t2));  // 4th-order midpoint fill
    }
    inv_integral_ = 1.0 / cdf_.back();
}

double SmoothStep::bump(double t) const {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::exp(-a_ / (t - t * t));
}

double SmoothStep::bump_derivative(double t, int m) const {
    if (m == 0) return bump(t);
    if (t <= 0.0 || t >= 1.0) return 0.0;
    // complete Bell recursion: B^{(m)} = B * Y_m,
    // Y_{m+1} = sum_k C(m,k) Y_{m-k} g^{(k+1)}
    const auto& jet = rational_jet();
    std::vector<double> g(m + 1), Y(m + 1);
    for (int k = 1; k <= m; ++k) g[k] = jet.eval(k, t, a_);
    Y[0] = 1.0;
    for (int q = 1; q <= m; ++q) {
        double binom = 1.0;
        double acc = 0.0;
        for (int k = 0; k < q; ++k) {
            acc += binom * Y[q - 1 - k] * g[k + 1];
            binom = binom * (q - 1 - k) / (k + 1);
        }
        Y[q] = acc;
    }
    return bump(t) * Y[m];
}

double SmoothStep::operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double u = x / h_;
    const int i = std::min<int>(static_cast<int>(u), static_cast<int>(cdf_.size()) - 2);
    const double t = u - i;
    const double x0 = i * h_;
    const double f0 = cdf_[i], f1 = cdf_[i + 1];
    const double d0 = bump(x0) * h_, d1 = bump(x0 + h_) * h_;
    // cubic Hermite, exact endpoint derivatives
    const double t2 = t * t, t3 = t2 * t;
    const double v = (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * d0 +
                     (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * d1;
    return v * inv_integral_;
}

double SmoothStep::derivative(double x, int order) const {
    if (order <= 0) return (*this)(x);
    return bump_derivative(x, order - 1) * inv_integral_;
}

double SmoothStep::derivative_sup(int order) const {
    double sup = 0;
    const int n = 2049;
    for (int i = 0; i <= n; ++i)
        sup = std::max(sup, std::abs(derivative(static_cast<double>(i) / n, order)));
    return sup;
}

double Zeta::derivative(double z, int order) const {
    if (order == 0) return (*this)(z);
    if (z >= 0) {
        if (z <= 0.5 * eps_hi_ || z >= eps_hi_) return 0.0;  // plateau / zero tail
        const double scale = -2.0 / eps_hi_;
        double p = 1.0;
        for (int k = 0; k < order; ++k) p *= scale;
        return p * step_->derivative((eps_hi_ - z) / (0.5 * eps_hi_), order);
    }
    const double mprime = -eps_hi_ / eps_lo_;
    double p = 1.0;
    for (int k = 0; k < order; ++k) p *= mprime;
    return p * derivative(-z * eps_hi_ / eps_lo_, order);
}

const SmoothStep& master_step() {
    static SmoothStep step;
    return step;
}

}  // namespace ucb
