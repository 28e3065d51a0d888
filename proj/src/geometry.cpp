#include "ucb/geometry.hpp"
#include <memory>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ucb {

namespace {

ChartPoint shifted(const ChartPoint& p, int axis, double delta) {
    ChartPoint q = p;
    if (axis == 0)
        q.sigma += delta;
    else if (axis == static_cast<int>(p.ybar.size()) + 1)
        q.s += delta;
    else
        q.ybar[static_cast<size_t>(axis) - 1] += delta;
    return q;
}

// centered first-derivative weights
double fd1(const std::function<double(double)>& f, double h, int order) {
    if (order <= 2) return (f(h) - f(-h)) / (2 * h);
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
}

double fd2(const std::function<double(double)>& f, double f0, double h, int order) {
    if (order <= 2) return (f(h) - 2 * f0 + f(-h)) / (h * h);
    return (-f(2 * h) + 16 * f(h) - 30 * f0 + 16 * f(-h) - f(-2 * h)) / (12 * h * h);
}

}  // namespace

std::vector<Mat> MetricField::derivatives(const ChartPoint& p) const {
    if (deriv) return deriv(p);
    const int n = dimension;
    std::vector<Mat> out(static_cast<size_t>(n), Mat(n));
    for (int axis = 0; axis < n; ++axis) {
        const double h = fd_step;
        const Mat gp = eval_g(shifted(p, axis, h));
        const Mat gp2 = eval_g(shifted(p, axis, 2 * h));
        const Mat gm = eval_g(shifted(p, axis, -h));
        const Mat gm2 = eval_g(shifted(p, axis, -2 * h));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out[axis](i, j) = (-gp2(i, j) + 8 * gp(i, j) - 8 * gm(i, j) + gm2(i, j)) / (12 * h);
    }
    return out;
}

MetricData metric_at(const MetricField& metric, const ChartPoint& p) {
    if (metric.in_chart && !metric.in_chart(p))
        throw SingularMetric(metric.name + " evaluated outside its chart");
    MetricData md;
    md.g = metric.eval_g(p);
    md.det = md.g.invert(md.g_inv, 1e-14);
    if (std::abs(md.det) < 1e-14) throw SingularMetric("determinant below 1e-14");
    md.sqrt_abs_det = std::sqrt(std::abs(md.det));

    const auto ev = md.g.sym_eigenvalues();
    int negatives = 0;
    for (double e : ev) {
        if (e < 0) ++negatives;
        if (e == 0) throw SingularMetric("zero eigenvalue");
    }
    if (negatives != 1)
        throw SignatureError("expected exactly one negative eigenvalue, got " +
                             std::to_string(negatives));
    return md;
}

double partial(const ScalarField& h, const ChartPoint& p, int axis, const FdPlan& fd) {
    if (h.has_grad()) return h.grad(p)[static_cast<size_t>(axis)];
    const double step = fd.step_for(axis);
    return fd1([&](double d) { return h.eval(shifted(p, axis, d)); }, step, fd.order);
}

Vec gradient_components(const ScalarField& h, const ChartPoint& p, const FdPlan& fd) {
    if (h.has_grad()) return h.grad(p);
    const int n = p.d() + 1;
    Vec g(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a) g[static_cast<size_t>(a)] = partial(h, p, a, fd);
    return g;
}

double second_partial(const ScalarField& h, const ChartPoint& p, int axis_a, int axis_b,
                      const FdPlan& fd) {
    if (h.has_hess()) return h.hess(p)(axis_a, axis_b);
    if (axis_a == axis_b) {
        const double step = fd.step_for(axis_a);
        return fd2([&](double d) { return h.eval(shifted(p, axis_a, d)); }, h.eval(p), step,
                   fd.order);
    }
    const double ha = fd.step_for(axis_a);
    // mixed: difference the (possibly analytic) first derivative along axis_b
    return fd1(
        [&](double d) {
            const ChartPoint q = shifted(p, axis_a, d);
            return partial(h, q, axis_b, fd);
        },
        ha, fd.order);
}

Vec box_first_order_coeffs(const MetricField& metric, const ChartPoint& p) {
    const int n = metric.dimension;
    const MetricData md = metric_at(metric, p);
    const auto dg = metric.derivatives(p);

    // d_a g^{ab} = -g^{am} g^{bn} d_a g_{mn};  d_a log sqrt|g| = (1/2) g^{mn} d_a g_{mn}
    Vec b(static_cast<size_t>(n), 0.0);
    for (int beta = 0; beta < n; ++beta) {
        double acc = 0;
        for (int alpha = 0; alpha < n; ++alpha) {
            double dginv = 0;
            for (int m = 0; m < n; ++m)
                for (int nn = 0; nn < n; ++nn)
                    dginv -= md.g_inv(alpha, m) * md.g_inv(beta, nn) * dg[alpha](m, nn);
            double dlog = 0;
            for (int m = 0; m < n; ++m)
                for (int nn = 0; nn < n; ++nn) dlog += 0.5 * md.g_inv(m, nn) * dg[alpha](m, nn);
            acc += dginv + md.g_inv(alpha, beta) * dlog;
        }
        b[static_cast<size_t>(beta)] = acc;
    }
    return b;
}

double box_g(const MetricField& metric, const ScalarField& h, const ChartPoint& p,
             const FdPlan& fd) {
    const int n = metric.dimension;
    const MetricData md = metric_at(metric, p);
    const Vec b = box_first_order_coeffs(metric, p);

    double acc = 0;
    for (int a = 0; a < n; ++a) {
        acc += b[static_cast<size_t>(a)] * partial(h, p, a, fd);
        for (int c = 0; c < n; ++c) {
            const double gac = md.g_inv(a, c);
            if (gac == 0.0) continue;
            acc += gac * second_partial(h, p, a, c, fd);
        }
    }
    return acc;
}

Vec grad_g(const MetricField& metric, const ScalarField& h, const ChartPoint& p,
           const FdPlan& fd) {
    const MetricData md = metric_at(metric, p);
    return mat_vec(md.g_inv, gradient_components(h, p, fd));
}

double inverse_pairing(const MetricField& metric, const ScalarField& h1, const ScalarField& h2,
                       const ChartPoint& p, const FdPlan& fd) {
    const MetricData md = metric_at(metric, p);
    return bilinear(md.g_inv, gradient_components(h1, p, fd), gradient_components(h2, p, fd));
}

std::vector<Mat> christoffels(const MetricField& metric, const ChartPoint& p) {
    const int n = metric.dimension;
    const MetricData md = metric_at(metric, p);
    const auto dg = metric.derivatives(p);
    std::vector<Mat> gamma(static_cast<size_t>(n), Mat(n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                double acc = 0;
                for (int d = 0; d < n; ++d)
                    acc += 0.5 * md.g_inv(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
                gamma[static_cast<size_t>(a)](b, c) = acc;
            }
    return gamma;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

MetricField make_planar_conformal_metric(const Vec& kbar) {
    const int dm1 = static_cast<int>(kbar.size());
    const int n = dm1 + 2;
    double norm2 = 0;
    for (double k : kbar) norm2 += k * k;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12)
        throw NotUnit("kbar must be Euclidean-unit for the planar chart");

    Mat g(n);
    g(0, 0) = 1.0;
    for (int i = 0; i < dm1; ++i) {
        g(1 + i, 1 + i) = 1.0;
        g(1 + i, n - 1) = kbar[static_cast<size_t>(i)];
        g(n - 1, 1 + i) = kbar[static_cast<size_t>(i)];
    }
    g(n - 1, n - 1) = 0.0;

    MetricField m;
    m.dimension = n;
    m.name = "planar-conformal";
    m.eval_g = [g](const ChartPoint&) { return g; };
    m.deriv = [n](const ChartPoint&) { return std::vector<Mat>(static_cast<size_t>(n), Mat(n)); };
    return m;
}

MetricField make_pure_ads_conformal_metric() {
    MetricField m;
    m.dimension = 4;
    m.name = "pure-ads-conformal";
    // (sigma, ybar, s) = (chi, (theta, phi), tau)
    m.eval_g = [](const ChartPoint& p) {
        const double chi = p.sigma, theta = p.ybar[0];
        Mat g(4);
        const double c = std::cos(chi);
        g(0, 0) = 1.0;
        g(1, 1) = c * c;
        g(2, 2) = c * c * std::sin(theta) * std::sin(theta);
        g(3, 3) = -1.0;
        return g;
    };
    m.deriv = [](const ChartPoint& p) {
        const double chi = p.sigma, theta = p.ybar[0];
        std::vector<Mat> dg(4, Mat(4));
        const double c = std::cos(chi), s = std::sin(chi);
        const double st = std::sin(theta), ct = std::cos(theta);
        dg[0](1, 1) = -2.0 * c * s;
        dg[0](2, 2) = -2.0 * c * s * st * st;
        dg[1](2, 2) = c * c * 2.0 * st * ct;
        return dg;
    };
    m.in_chart = [](const ChartPoint& p) {
        const double chi = p.sigma, theta = p.ybar[0];
        return chi > 0.0 && std::abs(std::cos(chi)) > 1e-7 && std::abs(std::sin(theta)) > 1e-7;
    };
    return m;
}

MetricField make_fg_metric(const std::vector<Mat>& rho_power_coeffs) {
    if (rho_power_coeffs.empty()) throw ConfigError("fg-generic needs at least g^(0)");
    const int d = rho_power_coeffs.front().dim();
    const int n = d + 1;
    MetricField m;
    m.dimension = n;
    m.name = "fg-generic";
    auto coeffs = rho_power_coeffs;
    // block layout: row/col 0 is sigma=rho; the boundary block is ordered
    // (ybar..., s) with s the boundary time-like direction (last index).
    m.eval_g = [coeffs, n](const ChartPoint& p) {
        Mat g(n);
        g(0, 0) = 1.0;
        double rp = 1.0;
        for (const Mat& G : coeffs) {
            for (int i = 0; i < n - 1; ++i)
                for (int j = 0; j < n - 1; ++j) g(1 + i, 1 + j) += rp * G(i, j);
            rp *= p.sigma;
        }
        return g;
    };
    m.deriv = [coeffs, n](const ChartPoint& p) {
        std::vector<Mat> dg(static_cast<size_t>(n), Mat(n));
        double rp = 1.0;
        for (size_t k = 1; k < coeffs.size(); ++k) {
            for (int i = 0; i < n - 1; ++i)
                for (int j = 0; j < n - 1; ++j)
                    dg[0](1 + i, 1 + j) += static_cast<double>(k) * rp * coeffs[k](i, j);
            rp *= p.sigma;
        }
        return dg;
    };
    return m;
}

MetricField load_metric_file(const std::string& path) {
    // Format (whitespace separated):
    //   dim <d+1>
    //   grid <n_sigma> <sigma_lo> <sigma_hi> <n_y> <y_lo> <y_hi> <n_s> <s_lo> <s_hi>
    //   then n_sigma*n_y*n_s rows of (d+1)(d+2)/2 upper-triangle components,
    //   sigma fastest.
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open metric file " + path);
    std::string tok;
    int n = 0;
    in >> tok >> n;
    if (tok != "dim" || n < 3 || n > 4) throw IoFailure("bad metric file header");
    int ns[3];
    double lo[3], hi[3];
    in >> tok;
    if (tok != "grid") throw IoFailure("bad metric file grid line");
    for (int a = 0; a < 3; ++a) in >> ns[a] >> lo[a] >> hi[a];
    const int ncomp = n * (n + 1) / 2;
    const size_t total = static_cast<size_t>(ns[0]) * ns[1] * ns[2];
    auto vals = std::make_shared<std::vector<double>>(total * ncomp);
    for (double& v : *vals)
        if (!(in >> v)) throw IoFailure("metric file truncated");

    struct Axes {
        int ns[3];
        double lo[3], hi[3];
    } ax;
    for (int a = 0; a < 3; ++a) {
        ax.ns[a] = ns[a];
        ax.lo[a] = lo[a];
        ax.hi[a] = hi[a];
    }

    MetricField m;
    m.dimension = n;
    m.name = "file:" + path;
    m.fd_step = 1e-5;
    m.eval_g = [vals, ax, n, ncomp](const ChartPoint& p) {
        // trilinear interpolation; ybar collapsed to its first axis for files
        const double x[3] = {p.sigma, p.ybar.empty() ? 0.0 : p.ybar[0], p.s};
        int idx[3];
        double w[3];
        for (int a = 0; a < 3; ++a) {
            const double t = (x[a] - ax.lo[a]) / (ax.hi[a] - ax.lo[a]) * (ax.ns[a] - 1);
            int i = static_cast<int>(std::floor(t));
            i = std::max(0, std::min(i, ax.ns[a] - 2));
            idx[a] = i;
            w[a] = t - i;
        }
        auto at = [&](int di, int dj, int dk, int comp) {
            const size_t flat = (static_cast<size_t>(idx[2] + dk) * ax.ns[1] + (idx[1] + dj)) *
                                    ax.ns[0] +
                                (idx[0] + di);
            return (*vals)[flat * ncomp + comp];
        };
        Mat g(n);
        int comp = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j, ++comp) {
                double v = 0;
                for (int di = 0; di < 2; ++di)
                    for (int dj = 0; dj < 2; ++dj)
                        for (int dk = 0; dk < 2; ++dk)
                            v += at(di, dj, dk, comp) * (di ? w[0] : 1 - w[0]) *
                                 (dj ? w[1] : 1 - w[1]) * (dk ? w[2] : 1 - w[2]);
                g(i, j) = v;
                g(j, i) = v;
            }
        return g;
    };
    return m;
}

MetricField metric_by_name(const std::string& name, const Vec& kbar) {
    if (name == "planar-conformal") return make_planar_conformal_metric(kbar);
    if (name == "pure-ads-conformal") return make_pure_ads_conformal_metric();
    if (name.rfind("file:", 0) == 0) return load_metric_file(name.substr(5));
    throw ConfigError("unknown metric name: " + name +
                      " (fg-generic requires coefficient tables, use make_fg_metric)");
}

}  // namespace ucb
