#pragma once

#include <vector>

#include "ucb/common.hpp"

namespace ucb {

// ---------------------------------------------------------------------------
// Master smooth step on [0,1]: step(x) = int_0^x B / int_0^1 B with the
// C-infinity bump B(t) = exp(-a / (t(1-t))), B = 0 outside (0,1).
//
// All theta/chi/zeta profiles are translations and dilations of this one
// function. The integral form keeps low-order derivatives in closed form
// (step' = B/I, step'' = B'/I, ...) and the shape parameter a controls the
// peak slope: a = 0.02 gives sup step' = 1.08, which keeps the cutoff
// derivative constants small.
// ---------------------------------------------------------------------------

class SmoothStep {
  public:
    explicit SmoothStep(double shape = 0.02, int table_size = 4097);

    double operator()(double x) const;   // in [0,1], clamped outside
    double derivative(double x, int order = 1) const;  // order >= 1

    // sup over [0,1] of |step^{(order)}|, from a dense sample; order <= 8.
    double derivative_sup(int order) const;

    double shape() const { return a_; }

  private:
    double bump(double t) const;
    // d^m/dt^m of bump, m <= 7, by recursion on B^{(m)} = (P_m B) with
    // rational P_m assembled numerically via nested differentiation of g'.
    double bump_derivative(double t, int m) const;

    double a_;
    double inv_integral_;
    std::vector<double> cdf_;  // antiderivative samples on uniform grid
    double h_;
};

// Fixed transition function theta of the amplitude profiles:
//   theta(z) = -1/2 for z <= -1/8, theta(z) = 1 for z >= 1/8, smooth and
//   non-decreasing in between; theta(0) = 1/4 for the symmetric master step.
class Theta {
  public:
    explicit Theta(const SmoothStep& step) : step_(&step) {}

    double operator()(double z) const { return -0.5 + 1.5 * (*step_)(4.0 * z + 0.5); }
    double derivative(double z, int order = 1) const {
        double p = 1.0;
        for (int k = 0; k < order; ++k) p *= 4.0;
        return 1.5 * p * step_->derivative(4.0 * z + 0.5, order);
    }
    double derivative_sup(int order) const {
        double p = 1.0;
        for (int k = 0; k < order; ++k) p *= 4.0;
        return 1.5 * p * step_->derivative_sup(order);
    }

  private:
    const SmoothStep* step_;
};

// Two-sided plateau cutoff zeta for the correction lobes:
//   zeta(z) = 1 for -eps_lo/2 <= z <= eps_hi/2, 0 for z <= -eps_lo or
//   z >= eps_hi. Symmetric when eps_lo == eps_hi.
class Zeta {
  public:
    Zeta(const SmoothStep& step, double eps_lo, double eps_hi)
        : step_(&step), eps_lo_(eps_lo), eps_hi_(eps_hi) {}

    double operator()(double z) const {
        if (z >= 0) {
            if (z <= 0.5 * eps_hi_) return 1.0;
            if (z >= eps_hi_) return 0.0;
            return (*step_)((eps_hi_ - z) / (0.5 * eps_hi_));
        }
        return (*this)(-z * eps_hi_ / eps_lo_);
    }
    double derivative(double z, int order) const;

    double eps_lo() const { return eps_lo_; }
    double eps_hi() const { return eps_hi_; }

  private:
    const SmoothStep* step_;
    double eps_lo_, eps_hi_;
};

// Shared default master step instance.
const SmoothStep& master_step();

}  // namespace ucb
