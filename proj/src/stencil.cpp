#include "ucb/stencil.hpp"

#include <algorithm>
#include <cmath>

namespace ucb {

Vec fd_weights(const Vec& nodes, double x0, int m) {
    // Fornberg (1988), generation of finite difference formulas
    const int n = static_cast<int>(nodes.size()) - 1;
    std::vector<Vec> c(static_cast<size_t>(m) + 1, Vec(nodes.size(), 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[static_cast<size_t>(i)] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[static_cast<size_t>(i)] - nodes[static_cast<size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[static_cast<size_t>(k)][static_cast<size_t>(i)] =
                        c1 *
                        (k * c[static_cast<size_t>(k) - 1][static_cast<size_t>(i) - 1] -
                         c5 * c[static_cast<size_t>(k)][static_cast<size_t>(i) - 1]) /
                        c2;
                c[0][static_cast<size_t>(i)] =
                    -c1 * c5 * c[0][static_cast<size_t>(i) - 1] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[static_cast<size_t>(k)][static_cast<size_t>(j)] =
                    (c4 * c[static_cast<size_t>(k)][static_cast<size_t>(j)] -
                     k * c[static_cast<size_t>(k) - 1][static_cast<size_t>(j)]) /
                    c3;
            c[0][static_cast<size_t>(j)] = c4 * c[0][static_cast<size_t>(j)] / c3;
        }
        c1 = c2;
    }
    Vec w = c[static_cast<size_t>(m)];
    if (m >= 1) {
        // annihilate constants exactly: the algebraic weight sum is zero, and
        // the rounding residue otherwise survives multiplication by n^{2 alpha}
        double sum = 0;
        size_t imax = 0;
        for (size_t q = 0; q < w.size(); ++q) {
            sum += w[q];
            if (std::abs(w[q]) > std::abs(w[imax])) imax = q;
        }
        w[imax] -= sum;
    }
    return w;
}

namespace {

struct AxisPlan {
    // per position: first stencil node index and weights
    std::vector<int> first;
    std::vector<Vec> weights;
};

AxisPlan make_plan(int npts, double step, int der) {
    AxisPlan plan;
    plan.first.resize(static_cast<size_t>(npts));
    plan.weights.resize(static_cast<size_t>(npts));
    const int interior_w = 5;
    const int edge_w = der == 2 ? 6 : 5;
    for (int i = 0; i < npts; ++i) {
        int w = interior_w;
        int first = i - interior_w / 2;
        if (first < 0 || first + interior_w > npts) {
            w = std::min(edge_w, npts);
            first = std::clamp(i - w / 2, 0, npts - w);
        }
        Vec nodes(static_cast<size_t>(w));
        for (int k = 0; k < w; ++k) nodes[static_cast<size_t>(k)] = (first + k) * step;
        plan.first[static_cast<size_t>(i)] = first;
        plan.weights[static_cast<size_t>(i)] = fd_weights(nodes, i * step, der);
    }
    return plan;
}

}  // namespace

void axis_derivative(const Field3& h, int axis, int der, Field3& out) {
    const Grid3& g = h.grid;
    out.grid = g;
    out.v.assign(h.v.size(), complexd(0));
    const int npts = axis == 0 ? g.nz : (axis == 1 ? g.ny : g.ns);
    // sigma axis: differentiate w.r.t. z then rescale by n^2 per order
    const double step = axis == 0 ? g.dz() : (axis == 1 ? g.dy() : g.ds());
    const AxisPlan plan = make_plan(npts, step, der);
    double rescale = 1.0;
    if (axis == 0) {
        const double n2 = static_cast<double>(g.band_n) * g.band_n;
        for (int q = 0; q < der; ++q) rescale *= n2;
    }

    parallel_for(static_cast<std::int64_t>(g.nz) * g.ny, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t ij = lo; ij < hi; ++ij) {
            const int i = static_cast<int>(ij / g.ny);
            const int j = static_cast<int>(ij % g.ny);
            for (int k = 0; k < g.ns; ++k) {
                const int pos = axis == 0 ? i : (axis == 1 ? j : k);
                const auto& w = plan.weights[static_cast<size_t>(pos)];
                const int first = plan.first[static_cast<size_t>(pos)];
                // subtract the center value so constants are annihilated
                // exactly; the weights sum to zero algebraically
                const complexd center = h.at(i, j, k);
                complexd acc(0);
                for (size_t q = 0; q < w.size(); ++q) {
                    const int p = first + static_cast<int>(q);
                    const complexd val = axis == 0 ? h.at(p, j, k)
                                       : axis == 1 ? h.at(i, p, k)
                                                   : h.at(i, j, p);
                    acc += w[q] * (val - center);
                }
                out.at(i, j, k) = acc * rescale;
            }
        }
    });
}

Field3 axis_derivative(const Field3& h, int axis, int der) {
    Field3 out(h.grid);
    axis_derivative(h, axis, der, out);
    return out;
}

Field3 mixed_derivative(const Field3& h, int axis_a, int axis_b) {
    Field3 tmp = axis_derivative(h, axis_b, 1);
    return axis_derivative(tmp, axis_a, 1);
}

namespace {

complexd lagrange_1d(const std::vector<complexd>& vals, const Vec& nodes, double x) {
    complexd acc(0);
    for (size_t i = 0; i < vals.size(); ++i) {
        double w = 1.0;
        for (size_t j = 0; j < vals.size(); ++j)
            if (j != i) w *= (x - nodes[j]) / (nodes[i] - nodes[j]);
        acc += w * vals[i];
    }
    return acc;
}

}  // namespace

complexd interp_sigma_line(const Field3& h, double z, int j, int k, int points, int i_lo,
                           int i_hi) {
    const Grid3& g = h.grid;
    if (i_hi < 0) i_hi = g.nz - 1;
    if (i_hi - i_lo + 1 < points) points = i_hi - i_lo + 1;
    const double fi = (z - g.z_lo) / g.dz();
    int first = std::clamp(static_cast<int>(std::floor(fi)) - points / 2 + 1, i_lo,
                           i_hi - points + 1);
    Vec nodes(static_cast<size_t>(points));
    std::vector<complexd> vals(static_cast<size_t>(points));
    for (int q = 0; q < points; ++q) {
        nodes[static_cast<size_t>(q)] = g.z(first + q);
        vals[static_cast<size_t>(q)] = h.at(first + q, j, k);
    }
    return lagrange_1d(vals, nodes, z);
}

complexd interp_field(const Field3& h, double z, double y, double s, int points) {
    const Grid3& g = h.grid;
    const double fj = (y - g.y_lo) / g.dy();
    const double fk = (s - g.s_lo) / g.ds();
    const int j0 = std::clamp(static_cast<int>(std::floor(fj)) - points / 2 + 1, 0, g.ny - points);
    const int k0 = std::clamp(static_cast<int>(std::floor(fk)) - points / 2 + 1, 0, g.ns - points);

    Vec ynodes(static_cast<size_t>(points)), snodes(static_cast<size_t>(points));
    for (int q = 0; q < points; ++q) {
        ynodes[static_cast<size_t>(q)] = g.y(j0 + q);
        snodes[static_cast<size_t>(q)] = g.s(k0 + q);
    }
    std::vector<complexd> along_y(static_cast<size_t>(points));
    for (int jq = 0; jq < points; ++jq) {
        std::vector<complexd> along_s(static_cast<size_t>(points));
        for (int kq = 0; kq < points; ++kq)
            along_s[static_cast<size_t>(kq)] = interp_sigma_line(h, z, j0 + jq, k0 + kq, points + 2);
        along_y[static_cast<size_t>(jq)] = lagrange_1d(along_s, snodes, s);
    }
    return lagrange_1d(along_y, ynodes, y);
}

}  // namespace ucb
