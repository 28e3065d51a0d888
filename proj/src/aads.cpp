#include "ucb/aads.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace ucb {

namespace {

double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// conformal reduction
// ---------------------------------------------------------------------------

ConformalOperator conjugate_operator(double mu, int d, const MetricField& gbar,
                                     const DomainSpec& spec) {
    ConformalOperator op;
    op.mu = mu;
    op.d = d;
    op.xi_singular = mu - (d * d - 1.0) / 4.0;
    const double b = (d - 1.0) / 2.0;

    // singular metric g = sigma^{-2} gbar with analytic derivatives
    MetricField g;
    g.dimension = gbar.dimension;
    g.name = gbar.name + "-singular";
    const MetricField base = gbar;
    g.eval_g = [base](const ChartPoint& p) {
        Mat m = base.eval_g(p);
        const double w = 1.0 / (p.sigma * p.sigma);
        for (int i = 0; i < m.dim(); ++i)
            for (int j = 0; j < m.dim(); ++j) m(i, j) *= w;
        return m;
    };
    g.deriv = [base](const ChartPoint& p) {
        std::vector<Mat> dg = base.derivatives(p);
        const Mat m = base.eval_g(p);
        const double w = 1.0 / (p.sigma * p.sigma);
        for (int a = 0; a < m.dim(); ++a)
            for (int i = 0; i < m.dim(); ++i)
                for (int j = 0; j < m.dim(); ++j) {
                    dg[static_cast<size_t>(a)](i, j) *= w;
                    if (a == 0)
                        dg[static_cast<size_t>(a)](i, j) += -2.0 / (p.sigma * p.sigma * p.sigma) * m(i, j);
                }
        return dg;
    };

    // P_mu w := sigma^{-(b+2)} (box_g + mu)(sigma^b w); V := P_mu w - box_gbar w
    //           - sigma^{-2} xi_singular w, extracted on test functions
    std::vector<std::function<double(const ChartPoint&)>> tests = {
        [](const ChartPoint&) { return 1.0; },
        [](const ChartPoint& p) { return 1.0 + 0.3 * std::sin(p.ybar[0]) * std::cos(p.s); },
        [](const ChartPoint& p) { return 1.0 + 0.2 * p.sigma + 0.1 * p.ybar[0] * p.s; }};

    const auto g_shared = std::make_shared<MetricField>(g);
    const auto base_shared = std::make_shared<MetricField>(base);
    const double xi_sing = op.xi_singular;
    const int dims = gbar.dimension;
    auto v_on = [g_shared, base_shared, b, mu, xi_sing,
                 dims](const std::function<double(const ChartPoint&)>& w, const ChartPoint& p) {
        ScalarField lifted;
        lifted.eval = [w, b](const ChartPoint& q) { return std::pow(q.sigma, b) * w(q); };
        ScalarField plain;
        plain.eval = w;
        FdPlan fd;
        fd.order = 4;
        // 2nd-derivative rounding floor eps/h^2 wants h near (eps)^{1/6}
        fd.steps.assign(static_cast<size_t>(dims), 2e-3);
        fd.steps[0] = 2e-3 * p.sigma;
        const double boxed =
            box_g(*g_shared, lifted, p, fd) + mu * std::pow(p.sigma, b) * w(p);
        const double pbar = std::pow(p.sigma, -(b + 2.0)) * boxed;
        const double remainder = pbar - box_g(*base_shared, plain, p, fd) -
                                 xi_sing / (p.sigma * p.sigma) * w(p);
        return remainder / w(p);
    };

    // cross-check the extraction across the three test functions
    double worst = 0;
    for (int i = 0; i < 6; ++i)
        for (int k = 0; k < 4; ++k) {
            ChartPoint p;
            p.sigma = 0.25 + 0.6 * spec.sigma0 * i / 5.0;
            p.sigma = std::min(p.sigma, 0.9);
            p.ybar.assign(static_cast<size_t>(spec.d) - 1, 0.2 * k - 0.3);
            p.s = 0.1 * k - 0.2;
            const double v0 = v_on(tests[0], p);
            for (int q = 1; q < 3; ++q)
                worst = std::max(worst, std::abs(v_on(tests[static_cast<size_t>(q)], p) - v0));
        }
    op.max_v_dev = worst;
    if (worst > 1e-7)
        throw VExtractionInconsistent("V extraction spread " + std::to_string(worst));

    auto w0 = tests[0];
    op.V = [v_on, w0](const ChartPoint& p) { return v_on(w0, p); };

    for (double floor : {0.5, 0.25, 0.125, 0.0625}) {
        double sup = 0;
        for (int i = 0; i < 9; ++i) {
            ChartPoint p;
            p.sigma = floor * (1.0 + i / 9.0);
            p.ybar.assign(static_cast<size_t>(spec.d) - 1, 0.0);
            p.s = 0.05 * i - 0.2;
            sup = std::max(sup, std::abs(op.V(p)));
        }
        op.v_sup_by_sigma.emplace_back(floor, sup);
    }
    return op;
}

// ---------------------------------------------------------------------------
// pure AdS charts
// ---------------------------------------------------------------------------

Vec pure_to_planar(double tau, double chi, const Vec& omega, double eps) {
    const int d = static_cast<int>(omega.size());
    if (std::abs(tau) > M_PI / 2 - eps || omega[static_cast<size_t>(d) - 1] >= 0)
        throw OutsideRegion("point not in M_{P,eps}");
    const double denom = std::cos(tau) - std::cos(chi) * omega[static_cast<size_t>(d) - 1];
    Vec out(static_cast<size_t>(d) + 1);
    out[0] = std::sin(tau) / denom;                       // t
    out[1] = std::sin(chi) / denom;                       // rho
    for (int j = 0; j < d - 1; ++j)
        out[static_cast<size_t>(j) + 2] = std::cos(chi) * omega[static_cast<size_t>(j)] / denom;
    return out;
}

double omega_d_from_planar(double t, double rho, const Vec& xbar) {
    double x2 = 0;
    for (double c : xbar) x2 += c * c;
    const double A = rho * rho - 1.0 + x2 - t * t;
    const double B = rho * rho + 1.0 + x2 - t * t;
    return A / std::sqrt(B * B + 4.0 * t * t - 4.0 * rho * rho);
}

ChartBounds measure_chart_bounds(double eps, int n_samples) {
    ChartBounds cb;
    for (int q = 1; q <= n_samples; ++q) {
        const double tau = (M_PI / 2 - eps) * (2.0 * halton(q, 2) - 1.0);
        const double chi = 1e-3 + (M_PI / 2 - 2e-3) * halton(q, 3);
        const double th = M_PI / 2 + (M_PI / 2 - 1e-3) * halton(q, 5);  // omega^d < 0
        const double ph = 2.0 * M_PI * halton(q, 7);
        const Vec omega = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                           std::cos(th)};
        const double denom = std::cos(tau) - std::cos(chi) * omega[2];
        cb.min_denominator = std::min(cb.min_denominator, denom);
        const Vec pl = pure_to_planar(tau, chi, omega, eps * 0.999);
        const double coord =
            std::abs(pl[0]) + pl[1] + std::sqrt(pl[2] * pl[2] + pl[3] * pl[3]);
        cb.coord_sup = std::max(cb.coord_sup, coord);
    }
    cb.measured_c = cb.coord_sup * eps;
    return cb;
}

double verify_embedding(int n_samples, double eps, std::uint64_t seed) {
    double worst = 0;
    const double h = 1e-6;
    for (int q = 1; q <= n_samples; ++q) {
        const std::uint64_t idx = seed + static_cast<std::uint64_t>(q);
        const double tau = -1.0 + 2.0 * halton(idx, 2);
        const double chi = 0.3 + 0.9 * halton(idx, 3);
        const double wd = -1.0 + 0.9 * halton(idx, 5);  // omega^d in (-1, -0.1)
        const double ph = 2.0 * M_PI * halton(idx, 7);
        const double sth = std::sqrt(1.0 - wd * wd);
        const double theta = std::acos(wd);

        // intrinsic coordinates q = (tau, chi, theta, phi)
        auto embed = [&](const Vec& c) {
            const Vec omega = {std::sin(c[2]) * std::cos(c[3]), std::sin(c[2]) * std::sin(c[3]),
                               std::cos(c[2])};
            return pure_to_planar(c[0], c[1], omega, eps);
        };
        const Vec c0 = {tau, chi, theta, ph};
        // numeric Jacobian, centered differences
        Mat J(4);
        for (int a = 0; a < 4; ++a) {
            Vec cp = c0, cm = c0;
            cp[static_cast<size_t>(a)] += h;
            cm[static_cast<size_t>(a)] -= h;
            const Vec xp = embed(cp), xm = embed(cm);
            for (int i = 0; i < 4; ++i)
                J(i, a) = (xp[static_cast<size_t>(i)] - xm[static_cast<size_t>(i)]) / (2 * h);
        }
        // g_plan = rho^{-2} (drho^2 - dt^2 + dxbar^2) at the image, coordinate
        // order (t, rho, x1, x2)
        const Vec x = embed(c0);
        const double rho = x[1];
        Mat gp(4);
        gp(0, 0) = -1.0 / (rho * rho);
        gp(1, 1) = 1.0 / (rho * rho);
        gp(2, 2) = 1.0 / (rho * rho);
        gp(3, 3) = 1.0 / (rho * rho);
        // pullback
        Mat pb(4);
        for (int a = 0; a < 4; ++a)
            for (int b2 = 0; b2 < 4; ++b2) {
                double acc = 0;
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j) acc += J(i, a) * gp(i, j) * J(j, b2);
                pb(a, b2) = acc;
            }
        // exact g_AdS in (tau, chi, theta, phi)
        const double s2 = std::sin(chi) * std::sin(chi);
        Mat ga(4);
        ga(0, 0) = -1.0 / s2;
        ga(1, 1) = 1.0 / s2;
        ga(2, 2) = std::cos(chi) * std::cos(chi) / s2;
        ga(3, 3) = std::cos(chi) * std::cos(chi) * sth * sth / s2;
        double scale = 0;
        for (int a = 0; a < 4; ++a) scale = std::max(scale, std::abs(ga(a, a)));
        for (int a = 0; a < 4; ++a)
            for (int b2 = 0; b2 < 4; ++b2) {
                const double exact = ga(a, b2);
                const double dev = std::abs(pb(a, b2) - exact) /
                                   std::max(std::abs(exact), 1e-3 * scale);
                worst = std::max(worst, dev);
            }
    }
    return worst;
}

SupportVerdict support_in_half_space(double eps, double delta, double rho0, const Vec& kbar) {
    SupportVerdict v;
    const ChartBounds cb = measure_chart_bounds(eps, 4000);
    double t_sup = 0;
    for (int q = 1; q <= 4000; ++q) {
        const double tau = (M_PI / 2 - eps) * (2.0 * halton(q, 2) - 1.0);
        const double chi = 1e-3 + (M_PI / 2 - 2e-3) * halton(q, 3);
        const double th = M_PI / 2 + (M_PI / 2 - 1e-3) * halton(q, 5);
        const double ph = 2.0 * M_PI * halton(q, 7);
        const Vec omega = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                           std::cos(th)};
        const Vec pl = pure_to_planar(tau, chi, omega, eps * 0.999);
        t_sup = std::max(t_sup, std::abs(pl[0]));
    }
    v.measured_c1 = t_sup;
    (void)cb;

    // maximize omega^d over the tube { |t| <= t_sup, |xbar - t kbar| <= delta eps,
    // rho <= rho0 } by dense sampling plus local pattern refinement
    auto omega_d = [&](double t, double rho, double u1, double u2) {
        const Vec xbar = {t * kbar[0] + u1, t * kbar[1] + u2};
        double x2 = 0;
        for (double c : xbar) x2 += c * c;
        v.max_x2_minus_t2 = std::max(v.max_x2_minus_t2, std::abs(x2 - t * t));
        return omega_d_from_planar(t, rho, xbar);
    };
    const double r_u = delta * eps;
    double best = -1e300;
    double bt = 0, br = rho0, bu1 = 0, bu2 = 0;
    const int N = 17;
    for (int it = 0; it < N; ++it)
        for (int ir = 1; ir <= 4; ++ir)
            for (int iu = 0; iu < 9; ++iu)
                for (int jv = 0; jv < 9; ++jv) {
                    const double t = -t_sup + 2.0 * t_sup * it / (N - 1);
                    const double rho = rho0 * ir / 4.0;
                    const double u1 = -r_u + 2.0 * r_u * iu / 8.0;
                    const double u2 = -r_u + 2.0 * r_u * jv / 8.0;
                    if (u1 * u1 + u2 * u2 > r_u * r_u) continue;
                    const double w = omega_d(t, rho, u1, u2);
                    if (w > best) {
                        best = w;
                        bt = t;
                        br = rho;
                        bu1 = u1;
                        bu2 = u2;
                    }
                }
    // pattern refinement
    double step_t = t_sup / (N - 1), step_r = rho0 / 4, step_u = r_u / 8;
    for (int round = 0; round < 40; ++round) {
        bool improved = false;
        for (int dt = -1; dt <= 1; ++dt)
            for (int dr = -1; dr <= 1; ++dr)
                for (int du = -1; du <= 1; ++du)
                    for (int dv = -1; dv <= 1; ++dv) {
                        const double t = std::clamp(bt + dt * step_t, -t_sup, t_sup);
                        const double rho = std::clamp(br + dr * step_r, 1e-6, rho0);
                        double u1 = bu1 + du * step_u, u2 = bu2 + dv * step_u;
                        const double un = std::sqrt(u1 * u1 + u2 * u2);
                        if (un > r_u) {
                            u1 *= r_u / un;
                            u2 *= r_u / un;
                        }
                        const double w = omega_d(t, rho, u1, u2);
                        if (w > best) {
                            best = w;
                            bt = t;
                            br = rho;
                            bu1 = u1;
                            bu2 = u2;
                            improved = true;
                        }
                    }
        if (!improved) {
            step_t *= 0.5;
            step_r *= 0.5;
            step_u *= 0.5;
        }
    }
    v.max_omega_d = best;
    v.margin = -best;
    v.pass = best < 0;
    v.c2 = delta > 0 ? v.max_x2_minus_t2 / delta : 0;
    return v;
}

// ---------------------------------------------------------------------------
// GNCC
// ---------------------------------------------------------------------------

GnccResult gncc_check(const BoundaryData& bd) {
    GnccResult res;
    res.margin = 1e300;
    const double dt = (bd.t_hi - bd.t_lo) / (bd.nt - 1);
    const double dx = (bd.x_hi - bd.x_lo) / (bd.nx - 1);

    auto g0_at = [&](int it, int ix) -> const Mat& { return bd.g0[static_cast<size_t>(bd.idx(it, ix))]; };
    auto eta_at = [&](int it, int ix) { return bd.eta[static_cast<size_t>(bd.idx(it, ix))]; };

    for (int it = 2; it < bd.nt - 2; ++it)
        for (int ix = 2; ix < bd.nx - 2; ++ix) {
            const Mat& g0 = g0_at(it, ix);
            const double det = g0(0, 0) * g0(1, 1) - g0(0, 1) * g0(1, 0);
            if (!(det < 0)) throw NotLorentzian("boundary metric determinant >= 0");

            // metric derivatives and Christoffels by centered differences
            Mat dg[2];
            dg[0] = Mat(2);
            dg[1] = Mat(2);
            for (int a2 = 0; a2 < 2; ++a2)
                for (int b2 = 0; b2 < 2; ++b2) {
                    dg[0](a2, b2) = (g0_at(it + 1, ix)(a2, b2) - g0_at(it - 1, ix)(a2, b2)) /
                                    (2 * dt);
                    dg[1](a2, b2) = (g0_at(it, ix + 1)(a2, b2) - g0_at(it, ix - 1)(a2, b2)) /
                                    (2 * dx);
                }
            Mat ginv;
            g0.invert(ginv, 0.0);
            double gamma[2][2][2];
            for (int a2 = 0; a2 < 2; ++a2)
                for (int b2 = 0; b2 < 2; ++b2)
                    for (int c2 = 0; c2 < 2; ++c2) {
                        double acc = 0;
                        for (int d2 = 0; d2 < 2; ++d2)
                            acc += 0.5 * ginv(a2, d2) *
                                   (dg[b2](d2, c2) + dg[c2](d2, b2) - dg[d2](b2, c2));
                        gamma[a2][b2][c2] = acc;
                    }

            // eta first and second derivatives
            const double e_t = (eta_at(it + 1, ix) - eta_at(it - 1, ix)) / (2 * dt);
            const double e_x = (eta_at(it, ix + 1) - eta_at(it, ix - 1)) / (2 * dx);
            const double e_tt =
                (eta_at(it + 1, ix) - 2 * eta_at(it, ix) + eta_at(it - 1, ix)) / (dt * dt);
            const double e_xx =
                (eta_at(it, ix + 1) - 2 * eta_at(it, ix) + eta_at(it, ix - 1)) / (dx * dx);
            const double e_tx = (eta_at(it + 1, ix + 1) - eta_at(it + 1, ix - 1) -
                                 eta_at(it - 1, ix + 1) + eta_at(it - 1, ix - 1)) /
                                (4 * dt * dx);
            const double grad[2] = {e_t, e_x};
            double hess[2][2] = {{e_tt, e_tx}, {e_tx, e_xx}};
            for (int a2 = 0; a2 < 2; ++a2)
                for (int b2 = 0; b2 < 2; ++b2)
                    for (int c2 = 0; c2 < 2; ++c2) hess[a2][b2] -= gamma[c2][a2][b2] * grad[c2];

            // null directions Z = (1, zeta): g_tt + 2 g_tx zeta + g_xx zeta^2 = 0
            const double A = g0(1, 1), B = 2 * g0(0, 1), C = g0(0, 0);
            const double disc = B * B - 4 * A * C;
            if (!(disc > 0)) throw NotLorentzian("no real null directions");
            const double zetas[2] = {(-B + std::sqrt(disc)) / (2 * A),
                                     (-B - std::sqrt(disc)) / (2 * A)};
            const Mat& g2 = bd.g2[static_cast<size_t>(bd.idx(it, ix))];
            const double eta_v = eta_at(it, ix);
            for (double zeta : zetas) {
                const double Z[2] = {1.0, zeta};
                double form = 0;
                for (int a2 = 0; a2 < 2; ++a2)
                    for (int b2 = 0; b2 < 2; ++b2)
                        form += (hess[a2][b2] - eta_v * g2(a2, b2)) * Z[a2] * Z[b2];
                const double znorm = Z[0] * Z[0] + Z[1] * Z[1];  // Euclidean reference
                res.margin = std::min(res.margin, form / znorm);
            }
        }

    for (int it = 0; it < bd.nt; ++it)
        for (int ix = 0; ix < bd.nx; ix += bd.nx - 1)
            res.eta_boundary_max = std::max(res.eta_boundary_max, std::abs(eta_at(it, ix)));
    for (int ix = 0; ix < bd.nx; ++ix)
        for (int it = 0; it < bd.nt; it += bd.nt - 1)
            res.eta_boundary_max = std::max(res.eta_boundary_max, std::abs(eta_at(it, ix)));
    return res;
}

BoundaryData make_flat_boundary(int nt, int nx,
                                const std::function<double(double, double)>& eta) {
    BoundaryData bd;
    bd.nt = nt;
    bd.nx = nx;
    bd.t_lo = -1;
    bd.t_hi = 1;
    bd.x_lo = -1;
    bd.x_hi = 1;
    Mat mink(2);
    mink(0, 0) = -1;
    mink(1, 1) = 1;
    bd.g0.assign(static_cast<size_t>(nt) * nx, mink);
    bd.g2.assign(static_cast<size_t>(nt) * nx, Mat(2));
    bd.eta.resize(static_cast<size_t>(nt) * nx);
    for (int it = 0; it < nt; ++it)
        for (int ix = 0; ix < nx; ++ix)
            bd.eta[static_cast<size_t>(bd.idx(it, ix))] = eta(bd.t(it), bd.x(ix));
    return bd;
}

// ---------------------------------------------------------------------------
// Klein-Gordon fidelity
// ---------------------------------------------------------------------------

KgCertifyReport kg_certify(const GluedCounterexample& glued, double mu, int probes_per_band) {
    KgCertifyReport rep;
    rep.mu = mu;

    for (const Beam& beam : glued.beams) {
        const Grid3& g = beam.envelope.grid;
        const int d = 2;
        const double b = (d - 1.0) / 2.0;
        const double lambda = beam.lambda;

        const Field3& env = beam.envelope;
        const Field3 dz = axis_derivative(env, 0, 1);
        const Field3 dy = axis_derivative(env, 1, 1);
        const Field3 box_env = beam.ctx->apply_box(env);  // flat box_gbar
        const Field3 ds_rest = axis_derivative(beam.rest, 2, 1);

        const CutoffProfile& chi = beam.ctx->cutoff();
        int placed = 0;
        for (int i = 5; i < g.nz - 5 && placed < probes_per_band; ++i) {
            const double sigma = g.sigma(i);
            if (sigma <= chi.plateau_lo() || sigma >= chi.plateau_hi()) continue;
            if (glued.bands_at(sigma).size() != 1) continue;
            const int j = 5 + (placed * 37) % std::max(1, g.ny - 10);
            const int k = 5 + (placed * 61 + i * 13) % std::max(1, g.ns - 10);
            ++placed;
            const ChartPoint p = g.point(i, j, k);

            // G' = f_n + b log sigma + i lambda phi; flat planar gbar
            const double fp = beam.ctx->amplitude().df(sigma, 1) + b / sigma;
            const double fpp = beam.ctx->amplitude().df(sigma, 2) - b / (sigma * sigma);
            Vec dphi = beam.ctx->eikonal().phi.grad(p);
            const MetricData md = metric_at(beam.ctx->metric(), p);

            // g_plan = sigma^{-2} gbar: box_{g_plan} h = sigma^2 box_gbar h
            //   - (d - 1) sigma (gbar^{sigma beta} d_beta h)
            const complexd envv = env.at(i, j, k);
            const complexd restv = beam.rest.at(i, j, k);
            const complexd denv[3] = {dz.at(i, j, k), dy.at(i, j, k),
                                      ds_rest.at(i, j, k)};  // box_phi = 0 flat
            complexd dG[3];
            for (int a = 0; a < 3; ++a)
                dG[a] = complexd(a == 0 ? fp : 0.0, lambda * dphi[static_cast<size_t>(a)]);
            complexd pair_GG(0), pair_Gw(0);
            double grad_sigma_G = 0;
            complexd grad_sigma_env(0);
            for (int a = 0; a < 3; ++a)
                for (int b2 = 0; b2 < 3; ++b2) {
                    pair_GG += md.g_inv(a, b2) * dG[a] * dG[b2];
                    if (a == 0) {
                        grad_sigma_env += md.g_inv(0, b2) * denv[b2];
                    }
                }
            // the i lambda d_s part of pair_Gw enters through the rest-split
            pair_Gw = fp * grad_sigma_env +
                      complexd(0, 0.5 * lambda) * denv[2];  // 2 grad phi = d_s
            grad_sigma_G = fp;  // gbar^{sigma beta} dG_beta real part

            const complexd sigma2_box =
                box_env.at(i, j, k) + 2.0 * pair_Gw + (pair_GG + md.g_inv(0, 0) * fpp) * envv;
            // box_{g_plan}(e^G env) e^{-G} = sigma^2 [above] - (d-1) sigma (dG_sigma env + d_sigma env)
            const complexd first_order =
                -(d - 1.0) * sigma * (complexd(grad_sigma_G, lambda * dphi[0]) * envv +
                                      denv[0]);
            const complexd lhs = sigma * sigma * sigma2_box + first_order + mu * envv;

            // rhs: (sigma^2 a) env with a from the construction
            const AValue a = evaluate_a(glued, p);
            const complexd rhs = sigma * sigma * a.a * envv;

            const double term_scale = std::abs(sigma * sigma * box_env.at(i, j, k)) +
                                      std::abs(sigma * sigma * pair_GG * envv) +
                                      std::abs(first_order) + std::abs(mu * envv) +
                                      std::abs(sigma * sigma * 2.0 * pair_Gw);
            const double denom = std::abs(lhs) + std::abs(rhs) + 3e-8 * term_scale;
            rep.worst_rel_residual = std::max(rep.worst_rel_residual,
                                              std::abs(lhs - rhs) / denom);
            ++rep.n_probes;
            (void)restv;
        }
    }
    return rep;
}

}  // namespace ucb
