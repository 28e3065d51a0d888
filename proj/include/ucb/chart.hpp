#pragma once

#include <vector>

#include "ucb/common.hpp"

namespace ucb {

// Point in the adapted coordinates (sigma, ybar, s). ybar has length d-1.
struct ChartPoint {
    double sigma = 0;
    Vec ybar;
    double s = 0;

    int d() const { return static_cast<int>(ybar.size()) + 1; }

    // Flattened coordinate vector (sigma, ybar..., s), length d+1.
    Vec coords() const {
        Vec c;
        c.reserve(ybar.size() + 2);
        c.push_back(sigma);
        for (double y : ybar) c.push_back(y);
        c.push_back(s);
        return c;
    }

    static ChartPoint from_coords(const Vec& c) {
        ChartPoint p;
        p.sigma = c.front();
        p.ybar.assign(c.begin() + 1, c.end() - 1);
        p.s = c.back();
        return p;
    }
};

// Axis-aligned box in R^k.
struct Box {
    Vec lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Vec& y, double pad = 0.0) const {
        for (size_t i = 0; i < lo.size(); ++i)
            if (y[i] < lo[i] - pad || y[i] > hi[i] + pad) return false;
        return true;
    }
    double span(int axis) const { return hi[axis] - lo[axis]; }
};

// Omega = (0, sigma0) x I' x (s_minus, s_plus).
struct DomainSpec {
    double sigma0 = 0.12;
    double s_minus = -0.5;
    double s_plus = 0.5;
    Box ybar_box{{-1.0}, {1.0}};
    int d = 2;

    void validate() const {
        if (!(sigma0 > 0)) throw ConfigError("sigma0 must be positive");
        if (!(s_minus < 0 && 0 < s_plus)) throw ConfigError("(s_minus, s_plus) must contain 0");
        if (d < 2) throw ConfigError("d must be >= 2");
        if (ybar_box.dim() != d - 1) throw ConfigError("ybar_box dimension must be d-1");
        for (int i = 0; i < ybar_box.dim(); ++i)
            if (!(ybar_box.lo[i] < ybar_box.hi[i])) throw ConfigError("empty ybar_box");
    }

    bool contains(const ChartPoint& p) const {
        return p.sigma > 0 && p.sigma < sigma0 && p.s > s_minus && p.s < s_plus &&
               ybar_box.contains(p.ybar);
    }
};

}  // namespace ucb
