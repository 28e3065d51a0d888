#include "ucb/eikonal.hpp"
#include <memory>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace ucb {

// ---------------------------------------------------------------------------
// planar closed form
// ---------------------------------------------------------------------------

EikonalData planar_eikonal(const Vec& kbar) {
    double norm2 = 0;
    for (double k : kbar) norm2 += k * k;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) throw NotUnit("|kbar| must be 1");

    const int dm1 = static_cast<int>(kbar.size());
    EikonalData e;
    e.kbar = kbar;
    e.phi.eval = [kbar](const ChartPoint& p) {
        double acc = 0;
        for (size_t i = 0; i < kbar.size(); ++i) acc += kbar[i] * p.ybar[i];
        return 0.5 * acc;
    };
    e.phi.grad = [kbar, dm1](const ChartPoint&) {
        Vec g(static_cast<size_t>(dm1) + 2, 0.0);
        for (int i = 0; i < dm1; ++i) g[static_cast<size_t>(i) + 1] = 0.5 * kbar[static_cast<size_t>(i)];
        return g;
    };
    e.phi.hess = [dm1](const ChartPoint&) { return Mat(dm1 + 2); };
    e.sigma_field.eval = [](const ChartPoint& p) { return p.sigma; };
    e.sigma_field.grad = [dm1](const ChartPoint&) {
        Vec g(static_cast<size_t>(dm1) + 2, 0.0);
        g[0] = 1.0;
        return g;
    };
    e.sigma_field.hess = [dm1](const ChartPoint&) { return Mat(dm1 + 2); };

    // ambient (rho, xbar, t) <-> adapted (sigma, ybar, s): s = t, ybar = xbar - t kbar
    e.adapted_from_ambient = [kbar](const Vec& a) {
        ChartPoint p;
        p.sigma = a[0];
        const double t = a.back();
        p.ybar.resize(kbar.size());
        for (size_t i = 0; i < kbar.size(); ++i) p.ybar[i] = a[i + 1] - t * kbar[i];
        p.s = t;
        return p;
    };
    e.ambient_from_adapted = [kbar](const ChartPoint& p) {
        Vec a(kbar.size() + 2);
        a[0] = p.sigma;
        for (size_t i = 0; i < kbar.size(); ++i) a[i + 1] = p.ybar[i] + p.s * kbar[i];
        a.back() = p.s;
        return a;
    };
    return e;
}

ScalarField pure_ads_explicit_phi(const Vec& kbar2) {
    // chart (sigma, ybar, s) = (chi, (theta, phi), tau)
    ScalarField f;
    f.eval = [kbar2](const ChartPoint& p) {
        const double chi = p.sigma, theta = p.ybar[0], ph = p.ybar[1], tau = p.s;
        const double w1 = std::sin(theta) * std::cos(ph);
        const double w2 = std::sin(theta) * std::sin(ph);
        const double wd = std::cos(theta);
        const double denom = std::cos(tau) - std::cos(chi) * wd;
        return (std::cos(chi) * (kbar2[0] * w1 + kbar2[1] * w2) - std::sin(tau)) / (2.0 * denom);
    };
    return f;
}

// ---------------------------------------------------------------------------
// verification
// ---------------------------------------------------------------------------

EikonalCertification verify_eikonal(const EikonalData& data, const MetricField& metric,
                                    const DomainSpec& spec, int n_per_axis,
                                    const SingularPotential* pot, double tol, int n_max,
                                    double sigma_floor_frac) {
    EikonalCertification cert;
    cert.tol = tol;
    cert.min_sigma_pairing = 1e300;
    cert.min_sigma_margin = 1e300;
    cert.phi_derivative_sup.assign(static_cast<size_t>(n_max) + 1,
                                   std::vector<double>(static_cast<size_t>(n_max) + 1, 0.0));

    const int dim = metric.dimension;
    FdPlan fd;
    fd.order = 4;
    fd.steps.assign(static_cast<size_t>(dim), 0.0);
    fd.steps[0] = 1e-4 * spec.sigma0;
    for (int i = 0; i < dim - 2; ++i) fd.steps[static_cast<size_t>(i) + 1] = 1e-4 * spec.ybar_box.span(i);
    fd.steps[static_cast<size_t>(dim) - 1] = 1e-4 * (spec.s_plus - spec.s_minus);

    const double gamma = pot ? pot->gamma : 0.0;
    const double C = pot ? pot->C : 0.0;

    const double slo = spec.sigma0 * sigma_floor_frac, shi = spec.sigma0 * (1.0 - sigma_floor_frac);
    const double pad = 0.02;
    for (int i = 0; i < n_per_axis; ++i)
        for (int j = 0; j < n_per_axis; ++j)
            for (int k = 0; k < n_per_axis; ++k) {
                ChartPoint p;
                p.sigma = slo + (shi - slo) * i / (n_per_axis - 1);
                p.ybar.resize(static_cast<size_t>(spec.d) - 1);
                for (int a = 0; a < spec.d - 1; ++a) {
                    const double lo = spec.ybar_box.lo[a] + pad * spec.ybar_box.span(a);
                    const double hi = spec.ybar_box.hi[a] - pad * spec.ybar_box.span(a);
                    p.ybar[static_cast<size_t>(a)] = lo + (hi - lo) * j / (n_per_axis - 1);
                }
                const double sspan = spec.s_plus - spec.s_minus;
                p.s = spec.s_minus + pad * sspan + (1 - 2 * pad) * sspan * k / (n_per_axis - 1);

                const MetricData md = metric_at(metric, p);
                const Vec dphi = gradient_components(data.phi, p, fd);
                cert.max_null_residual =
                    std::max(cert.max_null_residual, std::abs(bilinear(md.g_inv, dphi, dphi)));

                if (data.gauge_checkable) {
                    const Vec gp = mat_vec(md.g_inv, dphi);
                    for (int a = 0; a < dim; ++a) {
                        const double target = (a == dim - 1) ? 1.0 : 0.0;
                        cert.max_gauge_residual =
                            std::max(cert.max_gauge_residual, std::abs(2.0 * gp[static_cast<size_t>(a)] - target));
                    }
                }

                const Vec dsg = gradient_components(data.sigma_field, p, fd);
                const double pairing = bilinear(md.g_inv, dsg, dsg);
                cert.min_sigma_pairing = std::min(cert.min_sigma_pairing, pairing);
                if (pot)
                    cert.min_sigma_margin =
                        std::min(cert.min_sigma_margin, pairing - C * std::pow(p.sigma, gamma));
            }

    // finite-order regularity proxy: sup |d_sigma^k nabla^l phi| on a coarse sample
    const int nc = 9;
    for (int i = 0; i < nc; ++i)
        for (int k = 0; k < nc; ++k) {
            ChartPoint p;
            p.sigma = slo + (shi - slo) * i / (nc - 1);
            p.ybar.assign(static_cast<size_t>(spec.d) - 1, 0.0);
            const double sspan = spec.s_plus - spec.s_minus;
            p.s = spec.s_minus + pad * sspan + (1 - 2 * pad) * sspan * k / (nc - 1);
            for (int ks = 0; ks <= n_max; ++ks)
                for (int l = 0; l + ks <= n_max; ++l) {
                    // nested centered differences of phi, sigma-order ks and s-order l
                    std::function<double(const ChartPoint&, int, int)> rec =
                        [&](const ChartPoint& q, int ko, int lo) -> double {
                        if (ko > 0) {
                            const double h = fd.steps[0];
                            ChartPoint qp = q, qm = q;
                            qp.sigma += h;
                            qm.sigma -= h;
                            return (rec(qp, ko - 1, lo) - rec(qm, ko - 1, lo)) / (2 * h);
                        }
                        if (lo > 0) {
                            const double h = fd.steps.back();
                            ChartPoint qp = q, qm = q;
                            qp.s += h;
                            qm.s -= h;
                            return (rec(qp, ko, lo - 1) - rec(qm, ko, lo - 1)) / (2 * h);
                        }
                        return data.phi.eval(q);
                    };
                    cert.phi_derivative_sup[static_cast<size_t>(ks)][static_cast<size_t>(l)] = std::max(
                        cert.phi_derivative_sup[static_cast<size_t>(ks)][static_cast<size_t>(l)],
                        std::abs(rec(p, ks, l)));
                }
        }

    cert.null_pass = cert.max_null_residual <= tol;
    cert.gauge_pass = !data.gauge_checkable || cert.max_gauge_residual <= tol;
    cert.sigma_pass = !pot || cert.min_sigma_margin >= -tol;
    return cert;
}

// ---------------------------------------------------------------------------
// bump deformation
// ---------------------------------------------------------------------------

void BumpProfile::validate() const {
    if (!(sigma1 > 0)) throw ConfigError("bump sigma1 must be positive");
    for (int i = 0; i < inner_box.dim(); ++i)
        if (!(outer_box.lo[i] < inner_box.lo[i] && inner_box.hi[i] < outer_box.hi[i]))
            throw ConfigError("inner box must be strictly inside outer box");
}

namespace {
// 0 inside the inner interval, 1 outside the outer one, smooth monotone ramp between
double ramp01(double y, double bi_lo, double bi_hi, double bo_lo, double bo_hi) {
    if (y >= bi_lo && y <= bi_hi) return 0.0;
    if (y < bi_lo) return (bi_lo - y) / (bi_lo - bo_lo);
    return (y - bi_hi) / (bo_hi - bi_hi);
}
}  // namespace

double BumpProfile::psi(const Vec& ybar) const {
    const SmoothStep& step = master_step();
    double r = 0.0;
    for (int i = 0; i < inner_box.dim(); ++i)
        r = std::max(r, ramp01(ybar[static_cast<size_t>(i)], inner_box.lo[i], inner_box.hi[i],
                               outer_box.lo[i], outer_box.hi[i]));
    return sigma1 * step(r);
}

Vec BumpProfile::dpsi(const Vec& ybar) const {
    // centered difference; psi is built from the flat-ended master step, so the
    // max() seam sits where the derivative vanishes
    Vec g(ybar.size(), 0.0);
    const double h = 1e-6;
    for (size_t i = 0; i < ybar.size(); ++i) {
        Vec yp = ybar, ym = ybar;
        yp[i] += h;
        ym[i] -= h;
        g[i] = (psi(yp) - psi(ym)) / (2 * h);
    }
    return g;
}

EikonalData deform_sigma(const EikonalData& data, const BumpProfile& bump,
                         const MetricField& metric, const DomainSpec& spec) {
    bump.validate();
    EikonalData out = data;
    const ScalarField base = data.sigma_field;
    out.sigma_field.eval = [base, bump](const ChartPoint& p) {
        return base.eval(p) - bump.psi(p.ybar);
    };
    if (base.has_grad()) {
        out.sigma_field.grad = [base, bump](const ChartPoint& p) {
            Vec g = base.grad(p);
            const Vec dp = bump.dpsi(p.ybar);
            for (size_t i = 0; i < dp.size(); ++i) g[i + 1] -= dp[i];
            return g;
        };
        out.sigma_field.hess = {};
    } else {
        out.sigma_field.grad = {};
        out.sigma_field.hess = {};
    }

    // measure g^{-1}(dsigma~, dsigma~) on the region sigma~ > 0 near sigma~ = 0
    FdPlan fd;
    fd.order = 4;
    fd.step = 1e-5;
    double cprime = 1e300;
    const int ns = 21;
    for (int i = 0; i < ns; ++i)
        for (int j = 0; j < ns; ++j)
            for (int k = 0; k < ns; ++k) {
                ChartPoint p;
                p.ybar.resize(static_cast<size_t>(spec.d) - 1);
                const double span = 3.0 * spec.ybar_box.span(0);
                for (int a = 0; a < spec.d - 1; ++a)
                    p.ybar[static_cast<size_t>(a)] = -0.5 * span + span * j / (ns - 1);
                p.s = spec.s_minus + (spec.s_plus - spec.s_minus) * (k + 1.0) / (ns + 1.0);
                const double st = 0.02 * spec.sigma0 + 0.5 * spec.sigma0 * i / (ns - 1);
                p.sigma = st + bump.psi(p.ybar);  // so sigma~ = st > 0
                if (p.sigma >= spec.sigma0) continue;
                const MetricData md = metric_at(metric, p);
                const Vec dsg = gradient_components(out.sigma_field, p, fd);
                cprime = std::min(cprime, bilinear(md.g_inv, dsg, dsg));
            }
    if (!(cprime > 0))
        throw DeformationNotTimelike("measured lower bound " + std::to_string(cprime));
    out.certification.min_sigma_pairing = cprime;
    return out;
}

// ---------------------------------------------------------------------------
// geodesics
// ---------------------------------------------------------------------------

namespace {

struct GeodesicRhs {
    const MetricField* metric;

    // y = (x, v); returns (v, -Gamma v v)
    Vec operator()(const Vec& y) const {
        const int n = metric->dimension;
        ChartPoint p = ChartPoint::from_coords(Vec(y.begin(), y.begin() + n));
        const auto gamma = christoffels(*metric, p);
        Vec dy(2 * static_cast<size_t>(n));
        for (int a = 0; a < n; ++a) dy[static_cast<size_t>(a)] = y[static_cast<size_t>(n + a)];
        for (int a = 0; a < n; ++a) {
            double acc = 0;
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    acc += gamma[static_cast<size_t>(a)](b, c) * y[static_cast<size_t>(n + b)] *
                           y[static_cast<size_t>(n + c)];
            dy[static_cast<size_t>(n + a)] = -acc;
        }
        return dy;
    }
};

// Dormand-Prince 5(4) step
bool dopri_step(const GeodesicRhs& f, Vec& y, double& t, double& h, const OdeOptions& opts) {
    static const double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
    static const double a21 = 1. / 5;
    static const double a31 = 3. / 40, a32 = 9. / 40;
    static const double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
    static const double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561,
                        a54 = -212. / 729;
    static const double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247,
                        a64 = 49. / 176, a65 = -5103. / 18656;
    static const double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192, b5 = -2187. / 6784,
                        b6 = 11. / 84;
    static const double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920, e5 = -17253. / 339200,
                        e6 = 22. / 525, e7 = -1. / 40;
    (void)c2;
    (void)c3;
    (void)c4;
    (void)c5;

    const size_t n = y.size();
    auto axpy = [&](const Vec& base, std::initializer_list<std::pair<double, const Vec*>> terms,
                    double hh) {
        Vec r = base;
        for (const auto& [co, v] : terms)
            for (size_t i = 0; i < n; ++i) r[i] += hh * co * (*v)[i];
        return r;
    };

    const Vec k1 = f(y);
    const Vec k2 = f(axpy(y, {{a21, &k1}}, h));
    const Vec k3 = f(axpy(y, {{a31, &k1}, {a32, &k2}}, h));
    const Vec k4 = f(axpy(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, h));
    const Vec k5 = f(axpy(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h));
    const Vec k6 = f(axpy(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h));
    const Vec y5 = axpy(y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, h);
    const Vec k7 = f(y5);

    double err = 0;
    for (size_t i = 0; i < n; ++i) {
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                              e7 * k7[i]);
        const double sc = opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
        err = std::max(err, std::abs(e) / sc);
    }
    if (err <= 1.0) {
        t += h;
        y = y5;
        h = std::min(opts.max_step, h * std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
        return true;
    }
    h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
    if (h < opts.min_step) throw GeodesicBlowup("step size underflow");
    return false;
}

}  // namespace

std::vector<GeodesicStep> integrate_geodesic(const MetricField& metric, const Vec& x0,
                                             const Vec& v0, const std::vector<double>& t_out,
                                             const OdeOptions& opts,
                                             const std::function<bool(const Vec&)>& inside) {
    const int n = metric.dimension;
    GeodesicRhs rhs{&metric};
    std::vector<GeodesicStep> out;

    const bool backward = !t_out.empty() && t_out.back() < 0;
    Vec y(2 * static_cast<size_t>(n));
    for (int a = 0; a < n; ++a) {
        y[static_cast<size_t>(a)] = x0[static_cast<size_t>(a)];
        y[static_cast<size_t>(n + a)] = v0[static_cast<size_t>(a)] * (backward ? -1.0 : 1.0);
    }
    double t = 0;
    double h = opts.max_step / 4;

    for (double target : t_out) {
        const double tt = backward ? -target : target;
        bool alive = true;
        while (t < tt - 1e-15) {
            double hs = std::min(h, tt - t);
            const Vec y_save = y;
            const double t_save = t;
            double htry = hs;
            bool ok = false;
            for (int it = 0; it < 60 && !ok; ++it) {
                y = y_save;
                t = t_save;
                ok = dopri_step(rhs, y, t, htry, opts);
                if (ok && htry > hs) h = htry;
                if (!ok) hs = std::min(hs, htry);
            }
            if (!ok) throw GeodesicBlowup("no accepted step after 60 tries");
            Vec x(y.begin(), y.begin() + n);
            if (inside && !inside(x)) {
                alive = false;
                break;
            }
        }
        if (!alive) break;
        GeodesicStep st;
        st.s = target;
        st.x.assign(y.begin(), y.begin() + n);
        st.v.assign(y.begin() + n, y.end());
        if (backward)
            for (double& c : st.v) c = -c;
        ChartPoint p = ChartPoint::from_coords(st.x);
        const MetricData md = metric_at(metric, p);
        st.null_residual = std::abs(bilinear(md.g, st.v, st.v));
        out.push_back(std::move(st));
    }
    return out;
}

MetricField make_planar_ambient_metric(int d) {
    // coordinates (rho, xbar, t); metric drho^2 + dxbar^2 - dt^2
    const int n = d + 1;
    Mat g(n);
    g(0, 0) = 1.0;
    for (int i = 1; i < n - 1; ++i) g(i, i) = 1.0;
    g(n - 1, n - 1) = -1.0;
    MetricField m;
    m.dimension = n;
    m.name = "planar-ambient";
    m.eval_g = [g](const ChartPoint&) { return g; };
    m.deriv = [n](const ChartPoint&) { return std::vector<Mat>(static_cast<size_t>(n), Mat(n)); };
    return m;
}

SectionConstruction construct_eikonal_from_section(const MetricField& ambient_metric,
                                                   const SectionSpec& section,
                                                   const OdeOptions& opts) {
    const int n = ambient_metric.dimension;
    auto height = section.height ? section.height : [](double) { return 0.0; };
    auto fol = section.foliation ? section.foliation : [](double x) { return x; };
    auto fol_d = section.foliation_deriv ? section.foliation_deriv : [](double) { return 1.0; };

    SectionConstruction sc;
    sc.family.n_rho = section.n_rho;
    sc.family.n_x = section.n_x;
    for (int i = 0; i < section.n_rho; ++i)
        sc.family.rho_samples.push_back(section.rho_lo + (section.rho0 - section.rho_lo) * i /
                                                             std::max(1, section.n_rho - 1));
    for (int j = 0; j < section.n_x; ++j)
        sc.family.x_samples.push_back(section.x_lo + (section.x_hi - section.x_lo) * j /
                                                         std::max(1, section.n_x - 1));

    std::vector<double> s_out;
    for (int k = 1; k <= section.n_s; ++k) s_out.push_back(section.s_max * k / section.n_s);
    sc.family.s_grid_step = section.s_max / section.n_s;

    // launch loop
    for (int i = 0; i < section.n_rho; ++i)
        for (int j = 0; j < section.n_x; ++j) {
            const double rho = sc.family.rho_samples[static_cast<size_t>(i)];
            const double xc = sc.family.x_samples[static_cast<size_t>(j)];
            Vec x0(static_cast<size_t>(n), 0.0);
            x0[0] = rho;
            x0[1] = xc;
            x0[static_cast<size_t>(n) - 1] = height(xc);

            const ChartPoint p0 = ChartPoint::from_coords(x0);
            const MetricData md = metric_at(ambient_metric, p0);

            // conormal of Sigma: dt - h'(x) dx^1 (rho direction tangent)
            Vec nu(static_cast<size_t>(n), 0.0);
            nu[static_cast<size_t>(n) - 1] = 1.0;
            const double hp = (height(xc + 1e-6) - height(xc - 1e-6)) / 2e-6;
            nu[1] = -hp;
            Vec T = mat_vec(md.g_inv, nu);
            const double tt = bilinear(md.g, T, T);
            if (!(tt < 0)) throw SectionNotSpacelike("normal not timelike at launch point");
            for (double& c : T) c /= std::sqrt(-tt);
            if (T[static_cast<size_t>(n) - 1] < 0)
                for (double& c : T) c = -c;

            // E: project grad(x^1) onto T Sigma, normalize
            Vec dx1(static_cast<size_t>(n), 0.0);
            dx1[1] = fol_d(xc);
            Vec E = mat_vec(md.g_inv, dx1);
            const double et = bilinear(md.g, E, T);
            for (size_t a = 0; a < E.size(); ++a) E[a] += et * T[a];  // g(T,T) = -1
            const double ee = bilinear(md.g, E, E);
            if (!(ee > 0)) throw SectionNotSpacelike("foliation normal not spacelike");
            for (double& c : E) c /= std::sqrt(ee);
            double kappa = 0;
            for (size_t a = 0; a < E.size(); ++a) kappa += dx1[a] * E[a];
            if (kappa < 0) {
                for (double& c : E) c = -c;
                kappa = -kappa;
            }

            Vec N(static_cast<size_t>(n));
            for (size_t a = 0; a < N.size(); ++a) N[a] = T[a] + E[a];

            GeodesicTrajectory traj;
            traj.launch_i = i;
            traj.launch_j = j;
            traj.kappa = kappa;

            // s = s' / (2 kappa): integrate to s' targets = 2 kappa s_k
            std::vector<double> fwd, bwd;
            for (double s : s_out) fwd.push_back(2 * kappa * s);
            for (double s : s_out) bwd.push_back(-2 * kappa * s);

            GeodesicStep origin;
            origin.s = 0;
            origin.x = x0;
            origin.v = N;
            origin.null_residual = std::abs(bilinear(md.g, N, N));
            traj.forward.push_back(origin);
            auto f = integrate_geodesic(ambient_metric, x0, N, fwd, opts, section.inside);
            for (size_t k = 0; k < f.size(); ++k) {
                f[k].s = s_out[k];
                traj.forward.push_back(f[k]);
            }
            traj.backward.push_back(origin);
            auto b = integrate_geodesic(ambient_metric, x0, N, bwd, opts, section.inside);
            for (size_t k = 0; k < b.size(); ++k) {
                b[k].s = -s_out[k];
                traj.backward.push_back(b[k]);
            }
            sc.family.trajectories.push_back(std::move(traj));
        }

    // transversal jacobian log-determinant by differencing adjacent launches
    sc.caustics.epsilon_caustic = 1e-3;
    sc.caustics.jacobian_log_min = 1e300;
    sc.caustics.jacobian_log_max = -1e300;
    auto traj_at = [&](int i, int j) -> GeodesicTrajectory& {
        return sc.family.trajectories[static_cast<size_t>(i) * section.n_x + j];
    };
    const double drho = sc.family.rho_samples.size() > 1
                            ? sc.family.rho_samples[1] - sc.family.rho_samples[0]
                            : 1.0;
    const double dx = sc.family.x_samples.size() > 1
                          ? sc.family.x_samples[1] - sc.family.x_samples[0]
                          : 1.0;

    for (int i = 0; i < section.n_rho; ++i)
        for (int j = 0; j < section.n_x; ++j) {
            GeodesicTrajectory& tr = traj_at(i, j);
            const int im = std::max(0, i - 1), ip = std::min(section.n_rho - 1, i + 1);
            const int jm = std::max(0, j - 1), jp = std::min(section.n_x - 1, j + 1);
            double det0 = 0;
            for (int dir = 0; dir < 2; ++dir) {
                auto& arm = dir == 0 ? tr.forward : tr.backward;
                for (size_t k = 0; k < arm.size(); ++k) {
                    auto& a_ip = dir == 0 ? traj_at(ip, j).forward : traj_at(ip, j).backward;
                    auto& a_im = dir == 0 ? traj_at(im, j).forward : traj_at(im, j).backward;
                    auto& a_jp = dir == 0 ? traj_at(i, jp).forward : traj_at(i, jp).backward;
                    auto& a_jm = dir == 0 ? traj_at(i, jm).forward : traj_at(i, jm).backward;
                    if (k >= a_ip.size() || k >= a_im.size() || k >= a_jp.size() ||
                        k >= a_jm.size())
                        break;
                    Mat M(n);
                    for (int a = 0; a < n; ++a) {
                        M(a, 0) = (a_ip[k].x[static_cast<size_t>(a)] - a_im[k].x[static_cast<size_t>(a)]) /
                                  ((ip - im) * drho);
                        M(a, 1) = (a_jp[k].x[static_cast<size_t>(a)] - a_jm[k].x[static_cast<size_t>(a)]) /
                                  ((jp - jm) * dx);
                        // remaining columns: velocity and (for n = 4) an s-transversal filler
                        M(a, n - 1) = arm[k].v[static_cast<size_t>(a)];
                        if (n == 4) M(a, 2) = (a == 2) ? 1.0 : 0.0;
                    }
                    Mat inv;
                    double det;
                    try {
                        det = M.invert(inv, 0.0);
                    } catch (const SingularMetric&) {
                        det = 0.0;
                    }
                    if (k == 0 && dir == 0) det0 = det;
                    const double jl = (det0 != 0 && det / det0 > 0) ? std::log(std::abs(det / det0))
                                                                    : -1e300;
                    arm[k].jacobian_log = jl;
                    sc.caustics.jacobian_log_min = std::min(sc.caustics.jacobian_log_min, jl);
                    sc.caustics.jacobian_log_max = std::max(sc.caustics.jacobian_log_max, jl);
                    sc.caustics.max_null_residual =
                        std::max(sc.caustics.max_null_residual, arm[k].null_residual);
                    if (jl < std::log(sc.caustics.epsilon_caustic)) {
                        tr.caustic = true;
                        ++sc.caustics.flagged_trajectories;
                        arm.resize(k >= 5 ? k - 5 + 1 : 1);  // 5-cell safety margin
                        break;
                    }
                }
            }
            tr.s_max = tr.forward.empty() ? 0 : tr.forward.back().s;
            tr.s_min = tr.backward.empty() ? 0 : tr.backward.back().s;
        }

    double smin = -1e300, smax = 1e300;
    for (auto& tr : sc.family.trajectories) {
        smax = std::min(smax, tr.s_max);
        smin = std::max(smin, tr.s_min);
    }
    sc.caustics.s_min_surviving = smin;
    sc.caustics.s_max_surviving = smax;

    // adapted eikonal data: phi = foliation(ybar), sigma = coordinate
    EikonalData e;
    e.phi.eval = [fol](const ChartPoint& p) { return fol(p.ybar[0]); };
    e.sigma_field.eval = [](const ChartPoint& p) { return p.sigma; };
    e.gauge_checkable = true;

    // fan interpolation: ambient point from adapted coordinates (cubic in launch
    // indices and linear in s between stored steps)
    auto family = std::make_shared<GeodesicFamily>(sc.family);
    const double rho_lo = section.rho_lo, rho_hi = section.rho0;
    const double x_lo = section.x_lo, x_hi = section.x_hi;
    const int n_rho = section.n_rho, n_x = section.n_x;
    auto fan = [family, rho_lo, rho_hi, x_lo, x_hi, n_rho, n_x, n](const ChartPoint& p) -> Vec {
        const double fi = (p.sigma - rho_lo) / (rho_hi - rho_lo) * (n_rho - 1);
        const double fj = (p.ybar[0] - x_lo) / (x_hi - x_lo) * (n_x - 1);
        const double fs = std::abs(p.s) / family->s_grid_step;
        const bool fwdside = p.s >= 0;
        auto sample = [&](int i, int j, int k) -> const Vec& {
            i = std::clamp(i, 0, n_rho - 1);
            j = std::clamp(j, 0, n_x - 1);
            const auto& tr = family->trajectories[static_cast<size_t>(i) * n_x + j];
            const auto& arm = fwdside ? tr.forward : tr.backward;
            const int kk = std::clamp(k, 0, static_cast<int>(arm.size()) - 1);
            return arm[static_cast<size_t>(kk)].x;
        };
        auto cubic = [](double t, const double v[4]) {
            // Catmull-Rom
            return v[1] + 0.5 * t *
                              (v[2] - v[0] +
                               t * (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3] +
                                    t * (3 * (v[1] - v[2]) + v[3] - v[0])));
        };
        const int i0 = static_cast<int>(std::floor(fi)), j0 = static_cast<int>(std::floor(fj)),
                  k0 = static_cast<int>(std::floor(fs));
        const double ti = fi - i0, tj = fj - j0, ts = fs - k0;
        Vec out(static_cast<size_t>(n));
        for (int a = 0; a < n; ++a) {
            double vi[4];
            for (int ii = 0; ii < 4; ++ii) {
                double vj[4];
                for (int jj = 0; jj < 4; ++jj) {
                    double vk[4];
                    for (int kk = 0; kk < 4; ++kk)
                        vk[kk] = sample(i0 + ii - 1, j0 + jj - 1, k0 + kk - 1)[static_cast<size_t>(a)];
                    vj[jj] = cubic(ts, vk);
                }
                vi[ii] = cubic(tj, vj);
            }
            out[static_cast<size_t>(a)] = cubic(ti, vi);
        }
        return out;
    };
    e.ambient_from_adapted = fan;

    // pullback metric on the adapted chart via the fan Jacobian
    MetricField pulled;
    pulled.dimension = n;
    pulled.name = ambient_metric.name + "-adapted";
    const MetricField amb = ambient_metric;
    const double hs[3] = {0.25 * (rho_hi - rho_lo) / std::max(1, n_rho - 1),
                          0.25 * (x_hi - x_lo) / std::max(1, n_x - 1),
                          0.25 * sc.family.s_grid_step};
    pulled.eval_g = [fan, amb, n, hs](const ChartPoint& p) {
        Mat J(n);  // J(a, A): d ambient^a / d adapted^A
        for (int A = 0; A < n; ++A) {
            ChartPoint pp = p, pm = p;
            const double h = hs[std::min(A, 2)];
            if (A == 0) {
                pp.sigma += h;
                pm.sigma -= h;
            } else if (A == n - 1) {
                pp.s += h;
                pm.s -= h;
            } else {
                pp.ybar[static_cast<size_t>(A) - 1] += h;
                pm.ybar[static_cast<size_t>(A) - 1] -= h;
            }
            const Vec xp = fan(pp), xm = fan(pm);
            for (int a = 0; a < n; ++a)
                J(a, A) = (xp[static_cast<size_t>(a)] - xm[static_cast<size_t>(a)]) / (2 * h);
        }
        const Mat g_amb = amb.eval_g(ChartPoint::from_coords(fan(p)));
        Mat g(n);
        for (int A = 0; A < n; ++A)
            for (int B = 0; B < n; ++B) {
                double acc = 0;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) acc += J(a, A) * g_amb(a, b) * J(b, B);
                g(A, B) = acc;
            }
        return g;
    };
    sc.adapted_metric = pulled;
    sc.eikonal = e;
    return sc;
}

void dump_family_csv(const GeodesicFamily& family, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path);
    out << "p_index,s,coords,velocity,null_residual,jacobian_log\n";
    int idx = 0;
    for (const auto& tr : family.trajectories) {
        auto emit = [&](const GeodesicStep& st) {
            out << idx << ',' << st.s << ',';
            for (size_t a = 0; a < st.x.size(); ++a) out << (a ? " " : "") << st.x[a];
            out << ',';
            for (size_t a = 0; a < st.v.size(); ++a) out << (a ? " " : "") << st.v[a];
            out << ',' << st.null_residual << ',' << st.jacobian_log << '\n';
        };
        for (auto it = tr.backward.rbegin(); it != tr.backward.rend(); ++it) emit(*it);
        for (size_t k = 1; k < tr.forward.size(); ++k) emit(tr.forward[k]);
        ++idx;
    }
}

}  // namespace ucb
