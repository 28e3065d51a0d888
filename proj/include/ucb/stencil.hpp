#pragma once

#include <vector>

#include "ucb/bands.hpp"
#include "ucb/common.hpp"

namespace ucb {

// Fornberg finite-difference weights for derivative order m at x0 over the
// given nodes.
Vec fd_weights(const Vec& nodes, double x0, int m);

// Derivative of a grid field along one axis (0 = sigma, 1 = ybar, 2 = s),
// in *coordinate* units (sigma derivatives include the band rescale factor).
// Interior: centered 5-point (4th order); edges: one-sided with enough nodes
// to keep the order.
void axis_derivative(const Field3& h, int axis, int der, Field3& out);
Field3 axis_derivative(const Field3& h, int axis, int der);

// Mixed second derivative d_a d_b (a != b) by composing first derivatives.
Field3 mixed_derivative(const Field3& h, int axis_a, int axis_b);

// 1-D interpolation helpers on the band grid
complexd interp_sigma_line(const Field3& h, double z, int j, int k, int points = 6,
                           int i_lo = 0, int i_hi = -1);

// full tricubic-style (separable Lagrange, 4 nodes/axis) interpolation
complexd interp_field(const Field3& h, double z, double y, double s, int points = 4);

}  // namespace ucb
