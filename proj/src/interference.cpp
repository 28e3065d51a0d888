#include "ucb/interference.hpp"

#include <algorithm>
#include <cmath>

namespace ucb {

double closed_form_balance_root(int n) {
    // -n^2 + (n^4/2)(s - 1/n) = -(n+1)^2 - (n+1)^4 (s - 1/(n+1)), doubled to
    // stay in integers: s = (n^3 + 2(n+1)^3 - 2(2n+1)) / (n^4 + 2(n+1)^4)
    const long double np = n + 1.0L;
    const long double num = static_cast<long double>(n) * n * n + 2.0L * np * np * np -
                            2.0L * (2.0L * n + 1.0L);
    const long double den =
        static_cast<long double>(n) * n * n * n + 2.0L * np * np * np * np;
    return static_cast<double>(num / den);
}

double interference_scale(int n) {
    const double nd = n;
    return 1.5 * nd * nd * nd * nd + 4.0 * nd * nd * nd + 6.0 * nd * nd + 4.0 * nd + 1.0;
}

complexd beam_envelope_at(const Beam& beam, const ChartPoint& p) {
    // envelope = chi * w + rest with w and rest smooth; interpolating the raw
    // envelope instead would ring at the marginally resolved cutoff ramps
    const Grid3& g = beam.envelope.grid;
    const double z = g.z_of_sigma(p.sigma);
    const double chi = beam.ctx->cutoff().chi(p.sigma);
    complexd acc = interp_field(beam.rest, z, p.ybar[0], p.s);
    if (chi != 0.0) acc += chi * interp_field(beam.w_factor, z, p.ybar[0], p.s);
    return acc;
}

double interference_phi(const Beam& vn, const Beam& vn1, const ChartPoint& p) {
    const double fn = vn.ctx->amplitude().f(p.sigma);
    const double fn1 = vn1.ctx->amplitude().f(p.sigma);
    const double en = std::abs(beam_envelope_at(vn, p));
    const double en1 = std::abs(beam_envelope_at(vn1, p));
    if (en < 1e-300 || en1 < 1e-300)
        throw EnvelopeZero("interference_phi outside the envelope support at sigma = " +
                           std::to_string(p.sigma));
    return fn - fn1 + std::log(en) - std::log(en1);
}

// ---------------------------------------------------------------------------
// surface location
// ---------------------------------------------------------------------------

void InterferenceSurface::fit_from_raw() {
    poly.assign(9, 0.0);
    if (sn.size() == 1) {
        poly[0] = sn[0];
        fit_residual = 0;
        return;
    }
    const double yc = 0.5 * (y_lo + y_hi), yh = std::max(0.5 * (y_hi - y_lo), 1e-30);
    const double sc = 0.5 * (s_lo + s_hi), sh = std::max(0.5 * (s_hi - s_lo), 1e-30);
    Mat ata(9);
    Vec atb(9, 0.0);
    for (int j = 0; j < ny; ++j)
        for (int k = 0; k < ns; ++k) {
            const double ty = ((y_lo + (y_hi - y_lo) * j / (ny - 1)) - yc) / yh;
            const double ts = ((s_lo + (s_hi - s_lo) * k / (ns - 1)) - sc) / sh;
            double basis[9];
            int q = 0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    basis[q++] = std::pow(ty, a) * std::pow(ts, b);
            for (int r = 0; r < 9; ++r) {
                atb[static_cast<size_t>(r)] += basis[r] * at(j, k);
                for (int cidx = 0; cidx < 9; ++cidx) ata(r, cidx) += basis[r] * basis[cidx];
            }
        }
    Mat inv;
    ata.invert(inv, 0.0);
    for (int r = 0; r < 9; ++r) {
        double acc = 0;
        for (int cidx = 0; cidx < 9; ++cidx) acc += inv(r, cidx) * atb[static_cast<size_t>(cidx)];
        poly[static_cast<size_t>(r)] = acc;
    }
    fit_residual = 0;
    for (int j = 0; j < ny; ++j)
        for (int k = 0; k < ns; ++k) {
            const double y = y_lo + (y_hi - y_lo) * j / (ny - 1);
            const double s = s_lo + (s_hi - s_lo) * k / (ns - 1);
            fit_residual = std::max(fit_residual, std::abs(value(y, s) - at(j, k)));
        }
}

double InterferenceSurface::value(double y, double s) const {
    if (poly.empty()) return sn[0];
    if (sn.size() == 1) return poly[0];
    const double yc = 0.5 * (y_lo + y_hi), yh = std::max(0.5 * (y_hi - y_lo), 1e-30);
    const double sc = 0.5 * (s_lo + s_hi), sh = std::max(0.5 * (s_hi - s_lo), 1e-30);
    const double ty = (y - yc) / yh, ts = (s - sc) / sh;
    double acc = 0;
    int q = 0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) acc += poly[static_cast<size_t>(q++)] * std::pow(ty, a) * std::pow(ts, b);
    return acc;
}

Jet2 InterferenceSurface::jet(double y, double s) const {
    Jet2 out;
    if (sn.size() == 1 || poly.empty()) {
        out.v = poly.empty() ? sn[0] : poly[0];
        return out;
    }
    const double yc = 0.5 * (y_lo + y_hi), yh = std::max(0.5 * (y_hi - y_lo), 1e-30);
    const double sc = 0.5 * (s_lo + s_hi), sh = std::max(0.5 * (s_hi - s_lo), 1e-30);
    const Jet2 ty = Jet2::variable((y - yc) / yh, 1) * (1.0);
    const Jet2 ts = Jet2::variable((s - sc) / sh, 2) * (1.0);
    // chain factors d ty / dy = 1 / yh
    Jet2 tyj = ty;
    tyj.g[1] = 1.0 / yh;
    Jet2 tsj = ts;
    tsj.g[2] = 1.0 / sh;
    Jet2 acc = Jet2::constant(0.0);
    int q = 0;
    for (int a = 0; a < 3; ++a) {
        Jet2 pa = Jet2::constant(1.0);
        for (int r = 0; r < a; ++r) pa = pa * tyj;
        for (int b = 0; b < 3; ++b) {
            Jet2 pb = Jet2::constant(1.0);
            for (int r = 0; r < b; ++r) pb = pb * tsj;
            acc = acc + pa * pb * poly[static_cast<size_t>(q++)];
        }
    }
    return acc;
}

InterferenceSurface locate_surface(const Beam& vn, const Beam& vn1) {
    const int n = vn.n;
    if (vn1.n != n + 1) throw ConfigError("locate_surface needs adjacent beams");
    const Grid3& g = vn.envelope.grid;

    InterferenceSurface surf;
    surf.n = n;
    surf.ny = g.ny;
    surf.ns = g.ns;
    surf.y_lo = g.y_lo;
    surf.y_hi = g.y_hi;
    surf.s_lo = g.s_lo;
    surf.s_hi = g.s_hi;
    surf.B_n = interference_scale(n);
    surf.sn.resize(static_cast<size_t>(g.ny) * g.ns);
    surf.min_monotone_slope = 1e300;

    // plateau bracket: chi_n = chi_{n+1} = 1
    const double lo = vn.ctx->cutoff().plateau_lo();
    const double hi = vn1.ctx->cutoff().plateau_hi();
    surf.bracket_lo = lo;
    surf.bracket_hi = hi;

    const AmplitudeProfile& fn = vn.ctx->amplitude();
    const AmplitudeProfile& fn1 = vn1.ctx->amplitude();

    std::vector<double> resid(static_cast<size_t>(g.ny) * g.ns, 0.0);
    std::vector<int> failed(static_cast<size_t>(g.ny) * g.ns, 0);

    parallel_for(static_cast<std::int64_t>(g.ny) * g.ns, [&](std::int64_t lo_i, std::int64_t hi_i) {
        for (std::int64_t jk = lo_i; jk < hi_i; ++jk) {
            const int j = static_cast<int>(jk / g.ns);
            const int k = static_cast<int>(jk % g.ns);
            ChartPoint p{0.0, {g.y(j)}, g.s(k)};

            auto phi = [&](double sigma) {
                p.sigma = sigma;
                return interference_phi(vn, vn1, p);
            };
            double a = lo, b = hi;
            double fa = phi(a), fb = phi(b);
            if (!(fa < 0.0 && fb > 0.0)) {
                failed[static_cast<size_t>(jk)] = 1;
                continue;
            }
            for (int it = 0; it < 40; ++it) {
                const double m = 0.5 * (a + b);
                const double fm = phi(m);
                if (fm < 0)
                    a = m, fa = fm;
                else
                    b = m, fb = fm;
            }
            double root = 0.5 * (a + b);
            // Newton polish with the analytic amplitude slope (the envelope
            // log-derivative contributes below 1e-9 of B_n)
            for (int it = 0; it < 5; ++it) {
                const double slope = fn.df(root, 1) - fn1.df(root, 1);
                const double val = phi(root);
                const double next = root - val / slope;
                if (next > lo && next < hi) root = next;
            }
            surf.sn[static_cast<size_t>(jk)] = root;
            resid[static_cast<size_t>(jk)] = std::abs(phi(root));
        }
    });

    for (int is_failed : failed)
        if (is_failed)
            throw RootOutsideOverlap(
                "no sign change across the plateau bracket for band " + std::to_string(n) +
                "; raise n0");

    double max_resid = 0, max_c1 = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.ns; ++k) {
            const double root = surf.at(j, k);
            if (!(root > lo && root < hi))
                throw RootOutsideOverlap("root left the plateau for band " + std::to_string(n));
            max_resid = std::max(max_resid, resid[static_cast<size_t>(j) * g.ns + k]);
            const double c1 =
                (root - 1.0 / n + (2.0 / 3.0) / (static_cast<double>(n) * n)) * n * n * n;
            max_c1 = std::max(max_c1, std::abs(c1));
        }
    surf.max_residual_over_Bn = max_resid / surf.B_n;
    surf.max_C1 = max_c1;
    surf.fit_from_raw();

    // monotonicity d_sigma Phi > 0 across the plateau at sampled points
    for (int j = 0; j < g.ny; j += std::max(1, g.ny / 3))
        for (int k = 0; k < g.ns; k += std::max(1, g.ns / 3)) {
            ChartPoint p{0.0, {g.y(j)}, g.s(k)};
            for (int q = 0; q < 20; ++q) {
                const double sigma = lo + (hi - lo) * (q + 0.5) / 20.0;
                const double h = 1e-7;
                p.sigma = sigma + h;
                const double up = interference_phi(vn, vn1, p);
                p.sigma = sigma - h;
                const double dn = interference_phi(vn, vn1, p);
                surf.min_monotone_slope =
                    std::min(surf.min_monotone_slope, (up - dn) / (2 * h) / surf.B_n);
            }
        }
    if (!(surf.min_monotone_slope > 0))
        throw RootOutsideOverlap("Phi not monotone across the plateau for band " +
                                 std::to_string(n));
    return surf;
}

SignBoundsReport check_sign_bounds(const Beam& vn, const Beam& vn1,
                                   const InterferenceSurface& surface) {
    const int n = vn.n;
    const AmplitudeProfile& fn = vn.ctx->amplitude();
    const AmplitudeProfile& fn1 = vn1.ctx->amplitude();
    const Grid3& g = vn.envelope.grid;

    SignBoundsReport rep;
    rep.max_upper = -1e300;
    rep.max_lower = -1e300;
    double far_max = -1e300;
    const double far_line = 1.0 / n - 1.0 / (6.0 * n * n);
    const double olap_hi = band_sigma_hi(n + 1);
    const double olap_lo = band_sigma_lo(n);

    for (int j = 0; j < g.ny; j += 4)
        for (int k = 0; k < g.ns; k += 8) {
            const double root = surface.at(j, k);
            for (int q = 0; q <= 200; ++q) {
                const double sigma = olap_lo + (olap_hi - olap_lo) * q / 200.0;
                const double diff = fn1.f(sigma) - fn.f(sigma);
                if (sigma >= root) rep.max_upper = std::max(rep.max_upper, diff);
                if (sigma <= root) rep.max_lower = std::max(rep.max_lower, -diff);
                if (sigma >= far_line) far_max = std::max(far_max, diff);
            }
        }
    rep.far_decay_K = -far_max / (static_cast<double>(n) * n);
    rep.pass = rep.max_upper < 1.0 && rep.max_lower < 1.0 && rep.far_decay_K > 0;
    return rep;
}

// ---------------------------------------------------------------------------
// eta chart
// ---------------------------------------------------------------------------

EtaChart::EtaChart(int n, std::shared_ptr<InterferenceSurface> lower,
                   std::shared_ptr<InterferenceSurface> upper)
    : n_(n), lower_(std::move(lower)), upper_(std::move(upper)) {}

double EtaChart::eta(double sigma, double y, double s) const {
    const double sl = lower_->value(y, s);
    return (sigma - sl) / (upper_->value(y, s) - sl) / (static_cast<double>(n_) * n_);
}

Jet2 EtaChart::eta_jet(double sigma, double y, double s) const {
    const Jet2 pl = lower_->jet(y, s);
    const Jet2 pu = upper_->jet(y, s);
    const Jet2 u = Jet2::variable(sigma, 0) - pl;
    const Jet2 gap = pu - pl;
    return u * gap.reciprocal() * (1.0 / (static_cast<double>(n_) * n_));
}

double EtaChart::sigma_of_eta(double e, double y, double s) const {
    const double sl = lower_->value(y, s);
    return sl + e * static_cast<double>(n_) * n_ * (upper_->value(y, s) - sl);
}

double EtaChart::deta_dsigma(double y, double s) const {
    return 1.0 / (static_cast<double>(n_) * n_ * gap(y, s));
}

double EtaChart::jacobian_K0(const Grid3& g) const {
    double k0 = 1.0;
    for (int j = 0; j < g.ny; j += 4)
        for (int k = 0; k < g.ns; k += 8) {
            const double det = deta_dsigma(g.y(j), g.s(k));  // triangular Jacobian
            k0 = std::max({k0, std::abs(det), 1.0 / std::abs(det)});
        }
    return k0;
}

std::shared_ptr<InterferenceSurface> make_constant_surface(int n, const Grid3& g, double sigma) {
    auto s = std::make_shared<InterferenceSurface>();
    s->n = n;
    s->ny = 1;
    s->ns = 1;
    s->y_lo = g.y_lo;
    s->y_hi = g.y_hi;
    s->s_lo = g.s_lo;
    s->s_hi = g.s_hi;
    s->sn = {sigma};
    s->B_n = interference_scale(n);
    s->fit_from_raw();
    return s;
}

// ---------------------------------------------------------------------------
// probing
// ---------------------------------------------------------------------------

namespace {

// surface-grid tangential derivative of a complex field, Fornberg 5-point
void surface_derivative(const std::vector<complexd>& f, int ny, int ns, double dy, double ds,
                        int axis, int order, std::vector<complexd>& out) {
    out.assign(f.size(), complexd(0));
    const int npts = axis == 0 ? ny : ns;
    const double step = axis == 0 ? dy : ds;
    std::vector<Vec> weights(static_cast<size_t>(npts));
    std::vector<int> first(static_cast<size_t>(npts));
    const int w = std::min(6, npts);
    for (int i = 0; i < npts; ++i) {
        int f0 = std::clamp(i - w / 2, 0, npts - w);
        Vec nodes(static_cast<size_t>(w));
        for (int q = 0; q < w; ++q) nodes[static_cast<size_t>(q)] = (f0 + q) * step;
        weights[static_cast<size_t>(i)] = fd_weights(nodes, i * step, order);
        first[static_cast<size_t>(i)] = f0;
    }
    for (int j = 0; j < ny; ++j)
        for (int k = 0; k < ns; ++k) {
            const int pos = axis == 0 ? j : k;
            complexd acc(0);
            for (int q = 0; q < w; ++q) {
                const int p = first[static_cast<size_t>(pos)] + q;
                const complexd val = axis == 0 ? f[static_cast<size_t>(p) * ns + k]
                                               : f[static_cast<size_t>(j) * ns + p];
                acc += weights[static_cast<size_t>(pos)][static_cast<size_t>(q)] * val;
            }
            out[static_cast<size_t>(j) * ns + k] = acc;
        }
}

}  // namespace

ProbedCoeffs probe_operator_coeffs(const Beam& beam, const EtaChart& chart,
                                   const std::array<bool, 2>& lobes) {
    const Grid3& g = beam.envelope.grid;
    const BeamContext& ctx = *beam.ctx;
    const int n = beam.n;
    const double n2 = static_cast<double>(n) * n;

    enum { M1, ME, MY, MS, MEE, MEY, MES, MYY, MYS, MSS, MCOUNT };

    ProbedCoeffs pc;
    FdPlan fd;
    fd.order = 4;
    fd.step = 1e-6;

    for (int lobe = 0; lobe < 2; ++lobe) {
        if (!lobes[static_cast<size_t>(lobe)]) continue;
        pc.st[static_cast<size_t>(lobe)].assign(
            static_cast<size_t>(pc.n_stations),
            std::vector<CoeffStation>(static_cast<size_t>(g.ny) * g.ns));
        pc.eta_stations[static_cast<size_t>(lobe)].resize(static_cast<size_t>(pc.n_stations));
        const double dir = lobe == 0 ? +1.0 : -1.0;  // into the gap
        const double base_z = lobe == 0 ? 0.0 : 1.0;
        for (int m = 0; m < pc.n_stations; ++m)
            pc.eta_stations[static_cast<size_t>(lobe)][static_cast<size_t>(m)] =
                (base_z + dir * m * pc.dz) / n2;

        for (int m = 0; m < pc.n_stations; ++m) {
            const double z_st = base_z + dir * m * pc.dz;
            auto& table = pc.st[static_cast<size_t>(lobe)][static_cast<size_t>(m)];
            parallel_for(static_cast<std::int64_t>(g.ny) * g.ns,
                         [&](std::int64_t lo_i, std::int64_t hi_i) {
                for (std::int64_t jk = lo_i; jk < hi_i; ++jk) {
                    const int j = static_cast<int>(jk / g.ns);
                    const int k = static_cast<int>(jk % g.ns);
                    const double y = g.y(j), s = g.s(k);
                    const double sl = chart.lower_sigma(y, s);
                    const double sigma = sl + z_st * chart.gap(y, s);
                    const ChartPoint p{sigma, {y}, s};
                    const BeamContext::PointOp op = ctx.point_op(p);

                    // exact application of L to the chart monomials via jets
                    const Jet2 e = chart.eta_jet(sigma, y, s);
                    const Jet2 yj = Jet2::variable(y, 1);
                    const Jet2 sj = Jet2::variable(s, 2);
                    Jet2 mono[MCOUNT];
                    mono[M1] = Jet2::constant(1.0);
                    mono[ME] = e;
                    mono[MY] = yj;
                    mono[MS] = sj;
                    mono[MEE] = e * e;
                    mono[MEY] = e * yj;
                    mono[MES] = e * sj;
                    mono[MYY] = yj * yj;
                    mono[MYS] = yj * sj;
                    mono[MSS] = sj * sj;
                    complexd Lv[MCOUNT];
                    for (int q = 0; q < MCOUNT; ++q) Lv[q] = ctx.apply_L_point(op, mono[q]);

                    const double ev = e.v;
                    CoeffStation cs;
                    const complexd c = Lv[M1];
                    cs.c = c;
                    cs.b_e = Lv[ME] - c * ev;
                    cs.b_y = Lv[MY] - c * y;
                    cs.b_s = Lv[MS] - c * s;
                    auto second = [&](int mixed, int ma, int mb, double xa, double xb) {
                        return 0.5 * (Lv[mixed] - xa * Lv[mb] - xb * Lv[ma] + xa * xb * c);
                    };
                    cs.a_ee = second(MEE, ME, ME, ev, ev);
                    cs.a_ey = second(MEY, ME, MY, ev, y);
                    cs.a_es = second(MES, ME, MS, ev, s);
                    cs.a_yy = second(MYY, MY, MY, y, y);
                    cs.a_ys = second(MYS, MY, MS, y, s);
                    cs.a_ss = second(MSS, MS, MS, s, s);
                    table[static_cast<size_t>(jk)] = cs;
                }
            });
        }

        // cross-check a_ee against the direct metric contraction on the surface
        const auto& table0 = pc.st[static_cast<size_t>(lobe)][0];
        for (int j = 0; j < g.ny; j += std::max(1, g.ny / 5))
            for (int k = 0; k < g.ns; k += std::max(1, g.ns / 5)) {
                const double y = g.y(j), s = g.s(k);
                const double sigma = lobe == 0 ? chart.lower_sigma(y, s) : chart.upper_sigma(y, s);
                ScalarField eta_field;
                eta_field.eval = [&chart](const ChartPoint& p) {
                    return chart.eta(p.sigma, p.ybar[0], p.s);
                };
                const ChartPoint p{sigma, {y}, s};
                const double direct = inverse_pairing(ctx.metric(), eta_field, eta_field, p, fd);
                const complexd probed = table0[static_cast<size_t>(j) * g.ns + k].a_ee;
                const double dev = std::abs(probed - direct) /
                                   std::max(1e-30, std::abs(direct));
                pc.max_cross_check_dev = std::max(pc.max_cross_check_dev, dev);
                pc.min_a_ee = std::min(pc.min_a_ee, std::abs(probed));
            }
    }
    if (pc.max_cross_check_dev > 1e-8)
        throw ProbeInconsistent("a_ee probing deviates from the metric contraction by " +
                                std::to_string(pc.max_cross_check_dev));
    return pc;
}

// ---------------------------------------------------------------------------
// correction data
// ---------------------------------------------------------------------------

CorrectionData correction_data(const Beam& beam, const EtaChart& chart,
                               const ProbedCoeffs& coeffs, int K_corr) {
    const Grid3& g = beam.envelope.grid;
    const int n = beam.n;
    const double gamma = beam.ctx->potential().gamma;
    const size_t npts = static_cast<size_t>(g.ny) * g.ns;

    CorrectionData cd;
    cd.n = n;
    cd.K_corr = K_corr;
    cd.ny = g.ny;
    cd.ns = g.ns;
    cd.y_lo = g.y_lo;
    cd.y_hi = g.y_hi;
    cd.s_lo = g.s_lo;
    cd.s_hi = g.s_hi;
    cd.coeffs = coeffs;
    cd.min_a_ee = coeffs.min_a_ee;

    const double floor = 1e-8 * std::pow(static_cast<double>(n), -gamma);

    for (int lobe = 0; lobe < 2; ++lobe) {
        if (coeffs.st[static_cast<size_t>(lobe)].empty()) {
            cd.lobes[static_cast<size_t>(lobe)] = false;
            continue;
        }
        const auto& stations = coeffs.st[static_cast<size_t>(lobe)];
        const Vec& eta_st = coeffs.eta_stations[static_cast<size_t>(lobe)];
        const int nst = static_cast<int>(stations.size());

        // residual traces at the stations (sigma-line interpolation of r)
        std::vector<std::vector<complexd>> r_st(static_cast<size_t>(nst),
                                                std::vector<complexd>(npts));
        for (int m = 0; m < nst; ++m)
            parallel_for(static_cast<std::int64_t>(npts), [&](std::int64_t lo_i, std::int64_t hi_i) {
                for (std::int64_t jk = lo_i; jk < hi_i; ++jk) {
                    const int j = static_cast<int>(jk / g.ns);
                    const int k = static_cast<int>(jk % g.ns);
                    const double y = g.y(j), s = g.s(k);
                    const double sigma =
                        chart.sigma_of_eta(eta_st[static_cast<size_t>(m)], y, s);
                    r_st[static_cast<size_t>(m)][static_cast<size_t>(jk)] =
                        interp_sigma_line(beam.residual_r, g.z_of_sigma(sigma), j, k);
                }
            });

        // one-sided eta-derivative weights on the stations
        std::vector<Vec> dweights(static_cast<size_t>(K_corr) + 1);
        for (int M = 0; M <= K_corr; ++M)
            dweights[static_cast<size_t>(M)] = fd_weights(eta_st, eta_st[0], M);

        auto& h = cd.h[static_cast<size_t>(lobe)];
        h.assign(static_cast<size_t>(K_corr) + 3, std::vector<complexd>(npts, complexd(0)));

        // coefficient eta-derivatives at the surface
        auto coeff_deriv = [&](int m_order, size_t jk, auto member) -> complexd {
            complexd acc(0);
            for (int m = 0; m < nst; ++m)
                acc += dweights[static_cast<size_t>(m_order)][static_cast<size_t>(m)] *
                       (stations[static_cast<size_t>(m)][jk].*member);
            return acc;
        };

        std::vector<std::vector<complexd>> dh_y(h.size()), dh_s(h.size()), dh_yy(h.size()),
            dh_ys(h.size()), dh_ss(h.size());

        auto refresh_tangentials = [&](size_t M) {
            surface_derivative(h[M], g.ny, g.ns, g.dy(), g.ds(), 0, 1, dh_y[M]);
            surface_derivative(h[M], g.ny, g.ns, g.dy(), g.ds(), 1, 1, dh_s[M]);
            surface_derivative(h[M], g.ny, g.ns, g.dy(), g.ds(), 0, 2, dh_yy[M]);
            surface_derivative(dh_y[M], g.ny, g.ns, g.dy(), g.ds(), 1, 1, dh_ys[M]);
            surface_derivative(h[M], g.ny, g.ns, g.dy(), g.ds(), 1, 2, dh_ss[M]);
        };
        refresh_tangentials(0);
        refresh_tangentials(1);

        auto binom = [](int a, int b) {
            double r = 1;
            for (int q = 0; q < b; ++q) r = r * (a - q) / (q + 1);
            return r;
        };

        for (int M = 0; M <= K_corr; ++M) {
            auto& target = h[static_cast<size_t>(M) + 2];
            parallel_for(static_cast<std::int64_t>(npts), [&](std::int64_t lo_i, std::int64_t hi_i) {
                for (std::int64_t jk_i = lo_i; jk_i < hi_i; ++jk_i) {
                    const size_t jk = static_cast<size_t>(jk_i);
                    // d^M_eta r at the surface
                    complexd rM(0);
                    for (int m = 0; m < nst; ++m)
                        rM += dweights[static_cast<size_t>(M)][static_cast<size_t>(m)] *
                              r_st[static_cast<size_t>(m)][jk];

                    complexd rhs = -rM;
                    for (int m = 1; m <= M; ++m)
                        rhs -= binom(M, m) * coeff_deriv(m, jk, &CoeffStation::a_ee) *
                               h[static_cast<size_t>(M - m) + 2][jk];
                    for (int m = 0; m <= M; ++m) {
                        const double bm = binom(M, m);
                        const size_t Mm1 = static_cast<size_t>(M - m) + 1;
                        const size_t Mm0 = static_cast<size_t>(M - m);
                        rhs -= bm * coeff_deriv(m, jk, &CoeffStation::b_e) * h[Mm1][jk];
                        rhs -= bm * 2.0 *
                               (coeff_deriv(m, jk, &CoeffStation::a_ey) * dh_y[Mm1][jk] +
                                coeff_deriv(m, jk, &CoeffStation::a_es) * dh_s[Mm1][jk]);
                        rhs -= bm * (coeff_deriv(m, jk, &CoeffStation::a_yy) * dh_yy[Mm0][jk] +
                                     2.0 * coeff_deriv(m, jk, &CoeffStation::a_ys) *
                                         dh_ys[Mm0][jk] +
                                     coeff_deriv(m, jk, &CoeffStation::a_ss) * dh_ss[Mm0][jk]);
                        rhs -= bm * (coeff_deriv(m, jk, &CoeffStation::b_y) * dh_y[Mm0][jk] +
                                     coeff_deriv(m, jk, &CoeffStation::b_s) * dh_s[Mm0][jk]);
                        rhs -= bm * coeff_deriv(m, jk, &CoeffStation::c) * h[Mm0][jk];
                    }
                    const complexd aee = stations[0][jk].a_ee;
                    if (std::abs(aee) < floor)
                        throw CoefficientFloorViolated("g^{-1}(deta,deta) = " +
                                                       std::to_string(std::abs(aee)));
                    target[jk] = rhs / aee;
                }
            });
            refresh_tangentials(static_cast<size_t>(M) + 2);
        }
        for (const complexd& v : h.back())
            cd.sup_h_top = std::max(cd.sup_h_top, std::abs(v));
    }
    return cd;
}

// ---------------------------------------------------------------------------
// omega field
// ---------------------------------------------------------------------------

OmegaField::OmegaField(std::shared_ptr<EtaChart> chart, std::shared_ptr<CorrectionData> data,
                       double epsilon, const CutoffProfile& cutoff)
    : chart_(std::move(chart)), data_(std::move(data)) {
    if (epsilon >= 0.5 || epsilon <= 0.0)
        throw LobeOverlap("epsilon = " + std::to_string(epsilon) + " not in (0, 1/2)");
    const int n = chart_->n();
    const double n2 = static_cast<double>(n) * n;

    // outer widths clamped so supp omega stays inside supp chi_n
    const InterferenceSurface& lower = chart_->lower();
    const InterferenceSurface& upper = chart_->upper();
    double margin0 = 1e300, margin1 = 1e300;
    for (int j = 0; j < lower.ny; ++j)
        for (int k = 0; k < lower.ns; ++k) {
            const double y = lower.y_lo + (lower.ny == 1 ? 0.5 : static_cast<double>(j) /
                                                                     (lower.ny - 1)) *
                                              (lower.y_hi - lower.y_lo);
            const double s = lower.s_lo + (lower.ns == 1 ? 0.5 : static_cast<double>(k) /
                                                                     (lower.ns - 1)) *
                                              (lower.s_hi - lower.s_lo);
            const double sl = chart_->lower_sigma(y, s);
            const double su = chart_->upper_sigma(y, s);
            const double gap = su - sl;
            margin0 = std::min(margin0, (sl - cutoff.support_lo()) / gap);
            margin1 = std::min(margin1, (cutoff.support_hi() - su) / gap);
        }
    eps_in_[0] = eps_in_[1] = epsilon;
    eps_out_[0] = std::min(epsilon, 0.9 * margin0);
    eps_out_[1] = std::min(epsilon, 0.9 * margin1);
    if (eps_out_[0] <= 0 || eps_out_[1] <= 0)
        throw LobeOverlap("no room for the outer lobe inside supp chi");
    (void)n2;
}

namespace {

complexd surface_table_at(const std::vector<complexd>& t, int ny, int ns, int j, int k) {
    return t[static_cast<size_t>(j) * ns + k];
}

}  // namespace

complexd OmegaField::value_zjk(double z, int j, int k) const {
    return deta_zjk(z, j, k, 0);
}

complexd OmegaField::deta_zjk(double z, int j, int k, int order) const {
    const int n = chart_->n();
    const double n2 = static_cast<double>(n) * n;
    const SmoothStep& step = master_step();
    complexd acc(0);
    for (int lobe = 0; lobe < 2; ++lobe) {
        if (!data_->lobes[static_cast<size_t>(lobe)]) continue;
        const double zj = z - (lobe == 0 ? 0.0 : 1.0);
        const Zeta zeta(step, lobe == 0 ? eps_out_[0] : eps_in_[1],
                        lobe == 0 ? eps_in_[0] : eps_out_[1]);
        if (std::abs(zj) >= std::max(zeta.eps_lo(), zeta.eps_hi())) continue;
        const double etaj = zj / n2;
        const auto& h = data_->h[static_cast<size_t>(lobe)];
        // Taylor sum with zeta(n^2 eta_j) cutoff; eta-derivatives by Leibniz
        for (int kk = 0; kk + 2 < static_cast<int>(h.size()) + 0; ++kk) {
            const complexd hv = surface_table_at(h[static_cast<size_t>(kk) + 2], data_->ny,
                                                 data_->ns, j, k);
            const int p = kk + 2;
            // d^order/d eta^order [ zeta(n^2 eta) eta^p / p! ]
            complexd term(0);
            for (int m = 0; m <= order; ++m) {
                // binomial * zeta^{(m)}(n^2 eta) n^{2m} * d^{order-m} eta^p
                double binom = 1;
                for (int q = 0; q < m; ++q) binom = binom * (order - q) / (q + 1);
                const int rem = order - m;
                if (rem > p) continue;
                double fall = 1;
                for (int q = 0; q < rem; ++q) fall *= (p - q);
                const double zeta_m =
                    m == 0 ? zeta(zj) : zeta.derivative(zj, m) * std::pow(n2, m);
                double fact = 1;
                for (int q = 2; q <= p; ++q) fact *= q;
                term += binom * zeta_m * fall * std::pow(etaj, p - rem) / fact;
            }
            acc += hv * term;
        }
    }
    return acc;
}

complexd OmegaField::L_value_zjk(double z, int j, int k) const {
    // pick the nearer surface's coefficient stations
    const int lobe = (z <= 0.5) ? 0 : 1;
    if (!data_->lobes[static_cast<size_t>(lobe)]) return complexd(0);
    const auto& stations = data_->coeffs.st[static_cast<size_t>(lobe)];
    const Vec& eta_st = data_->coeffs.eta_stations[static_cast<size_t>(lobe)];
    const int n = chart_->n();
    const double n2 = static_cast<double>(n) * n;
    const double eta = z / n2;
    const int ns = data_->ns, ny = data_->ny;
    const size_t jk = static_cast<size_t>(j) * ns + k;

    // Lagrange extrapolation of each coefficient across the stations
    auto coeff_at = [&](auto member) {
        complexd acc(0);
        for (size_t m = 0; m < stations.size(); ++m) {
            double w = 1;
            for (size_t q = 0; q < stations.size(); ++q)
                if (q != m) w *= (eta - eta_st[q]) / (eta_st[m] - eta_st[q]);
            acc += w * (stations[m][jk].*member);
        }
        return acc;
    };

    // eta-partials analytic; tangential partials via surface-grid stencils of
    // the full omega(z fixed) tables
    const complexd w0 = deta_zjk(z, j, k, 0);
    const complexd w1 = deta_zjk(z, j, k, 1);
    const complexd w2 = deta_zjk(z, j, k, 2);

    // tangential derivatives: difference omega along the surface grid at fixed z
    auto tang = [&](int axis, int order) -> complexd {
        const int npts = axis == 0 ? ny : ns;
        const double step = axis == 0 ? (data_->y_hi - data_->y_lo) / std::max(1, ny - 1)
                                      : (data_->s_hi - data_->s_lo) / std::max(1, ns - 1);
        if (npts < 6) return complexd(0);
        const int w = 5 + (order == 2 ? 1 : 0);
        const int pos = axis == 0 ? j : k;
        const int f0 = std::clamp(pos - w / 2, 0, npts - w);
        Vec nodes(static_cast<size_t>(w));
        for (int q = 0; q < w; ++q) nodes[static_cast<size_t>(q)] = (f0 + q) * step;
        const Vec wt = fd_weights(nodes, pos * step, order);
        complexd acc(0);
        for (int q = 0; q < w; ++q) {
            const int jj = axis == 0 ? f0 + q : j;
            const int kk = axis == 1 ? f0 + q : k;
            acc += wt[static_cast<size_t>(q)] * deta_zjk(z, jj, kk, 0);
        }
        return acc;
    };
    auto tang_of_deta = [&](int axis) -> complexd {
        const int npts = axis == 0 ? ny : ns;
        const double step = axis == 0 ? (data_->y_hi - data_->y_lo) / std::max(1, ny - 1)
                                      : (data_->s_hi - data_->s_lo) / std::max(1, ns - 1);
        if (npts < 6) return complexd(0);
        const int w = 5;
        const int pos = axis == 0 ? j : k;
        const int f0 = std::clamp(pos - w / 2, 0, npts - w);
        Vec nodes(static_cast<size_t>(w));
        for (int q = 0; q < w; ++q) nodes[static_cast<size_t>(q)] = (f0 + q) * step;
        const Vec wt = fd_weights(nodes, pos * step, 1);
        complexd acc(0);
        for (int q = 0; q < w; ++q) {
            const int jj = axis == 0 ? f0 + q : j;
            const int kk = axis == 1 ? f0 + q : k;
            acc += wt[static_cast<size_t>(q)] * deta_zjk(z, jj, kk, 1);
        }
        return acc;
    };

    const complexd mixed_ey = tang_of_deta(0);
    const complexd mixed_es = tang_of_deta(1);
    const complexd dyy = tang(0, 2);
    const complexd dss = tang(1, 2);
    complexd dys;
    {
        // d_y d_s omega: differentiate d_s omega along y
        const int w = 5;
        if (ny >= 6 && ns >= 6) {
            const double stepy = (data_->y_hi - data_->y_lo) / std::max(1, ny - 1);
            const int f0 = std::clamp(j - w / 2, 0, ny - w);
            Vec nodes(static_cast<size_t>(w));
            for (int q = 0; q < w; ++q) nodes[static_cast<size_t>(q)] = (f0 + q) * stepy;
            const Vec wt = fd_weights(nodes, j * stepy, 1);
            for (int q = 0; q < w; ++q) {
                // d_s omega at (f0+q, k)
                const double steps = (data_->s_hi - data_->s_lo) / std::max(1, ns - 1);
                const int g0 = std::clamp(k - 2, 0, ns - 5);
                Vec snodes(5);
                for (int r = 0; r < 5; ++r) snodes[static_cast<size_t>(r)] = (g0 + r) * steps;
                const Vec swt = fd_weights(snodes, k * steps, 1);
                complexd dsv(0);
                for (int r = 0; r < 5; ++r)
                    dsv += swt[static_cast<size_t>(r)] * deta_zjk(z, f0 + q, g0 + r, 0);
                dys += wt[static_cast<size_t>(q)] * dsv;
            }
        }
    }
    const complexd dy1 = tang(0, 1);
    const complexd ds1 = tang(1, 1);

    return coeff_at(&CoeffStation::a_ee) * w2 + 2.0 * coeff_at(&CoeffStation::a_ey) * mixed_ey +
           2.0 * coeff_at(&CoeffStation::a_es) * mixed_es + coeff_at(&CoeffStation::a_yy) * dyy +
           2.0 * coeff_at(&CoeffStation::a_ys) * dys + coeff_at(&CoeffStation::a_ss) * dss +
           coeff_at(&CoeffStation::b_e) * w1 + coeff_at(&CoeffStation::b_y) * dy1 +
           coeff_at(&CoeffStation::b_s) * ds1 + coeff_at(&CoeffStation::c) * w0;
}

complexd OmegaField::value_at(const ChartPoint& p) const {
    const double z = chart_->eta(p.sigma, p.ybar[0], p.s) * chart_->n() * chart_->n();
    // snap to the nearest surface grid node (callers pass grid-aligned points)
    const double fj = (p.ybar[0] - data_->y_lo) / (data_->y_hi - data_->y_lo) * (data_->ny - 1);
    const double fk = (p.s - data_->s_lo) / (data_->s_hi - data_->s_lo) * (data_->ns - 1);
    const int j = std::clamp(static_cast<int>(std::lround(fj)), 0, data_->ny - 1);
    const int k = std::clamp(static_cast<int>(std::lround(fk)), 0, data_->ns - 1);
    return value_zjk(z, j, k);
}

std::shared_ptr<OmegaField> build_omega(const Beam& beam, std::shared_ptr<EtaChart> chart,
                                        std::shared_ptr<CorrectionData> data, double epsilon) {
    auto omega = std::make_shared<OmegaField>(chart, data, epsilon, beam.ctx->cutoff());

    // assertions: omega and d_sigma omega vanish on both surfaces; disjoint lobes
    const Grid3& g = beam.envelope.grid;
    double worst = 0;
    for (int j = 0; j < g.ny; j += std::max(1, g.ny / 4))
        for (int k = 0; k < g.ns; k += std::max(1, g.ns / 4)) {
            for (int lobe = 0; lobe < 2; ++lobe) {
                if (!data->lobes[static_cast<size_t>(lobe)]) continue;
                const double z = lobe == 0 ? 0.0 : 1.0;
                worst = std::max(worst, std::abs(omega->value_zjk(z, j, k)));
                worst = std::max(worst, std::abs(omega->deta_zjk(z, j, k, 1)) /
                                            std::max(1.0, 1e4));
            }
        }
    if (worst > 1e-10 * std::max(1.0, data->sup_h_top))
        throw Error("omega does not vanish on the surfaces");

    // record sup|omega| over the band grid
    double sup = 0;
    for (int i = 0; i < g.nz; ++i)
        for (int j = 0; j < g.ny; j += 2)
            for (int k = 0; k < g.ns; k += 2) {
                const double z =
                    chart->eta(g.sigma(i), g.y(j), g.s(k)) * chart->n() * chart->n();
                sup = std::max(sup, std::abs(omega->value_zjk(z, j, k)));
            }
    omega->record_sup(sup);
    return omega;
}

ModifiedBandReport modified_band(Beam& beam, std::shared_ptr<OmegaField> omega) {
    const Grid3& g = beam.envelope.grid;
    ModifiedBandReport rep;
    rep.sup_omega = omega->sup_recorded();

    // envelope += omega at grid points (surfaces and grid share (y, s) nodes)
    const EtaChart& chart = omega->chart();
    parallel_for(static_cast<std::int64_t>(g.ny) * g.ns, [&](std::int64_t lo_i, std::int64_t hi_i) {
        for (std::int64_t jk = lo_i; jk < hi_i; ++jk) {
            const int j = static_cast<int>(jk / g.ns);
            const int k = static_cast<int>(jk % g.ns);
            const double y = g.y(j), s = g.s(k);
            const double sl = chart.lower_sigma(y, s);
            const double gap = chart.gap(y, s);
            for (int i = 0; i < g.nz; ++i) {
                const double z = (g.sigma(i) - sl) / gap;
                const complexd w = omega->value_zjk(z, j, k);
                if (w != complexd(0)) {
                    beam.envelope.at(i, j, k) += w;
                    beam.rest.at(i, j, k) += w;
                }
            }
        }
    });

    // support check: envelope still vanishes off supp chi
    bool support_ok = true;
    for (int i = 0; i < g.nz; ++i) {
        if (beam.ctx->chi_at(i) > 0.0) continue;
        for (int j = 0; j < g.ny && support_ok; ++j)
            for (int k = 0; k < g.ns; ++k)
                if (std::abs(beam.envelope.at(i, j, k)) > 1e-13) {
                    support_ok = false;
                    break;
                }
    }
    rep.support_ok = support_ok;

    // on-surface vanishing of omega (value and sigma-derivative)
    double worst = 0;
    for (int j = 0; j < g.ny; j += std::max(1, g.ny / 4))
        for (int k = 0; k < g.ns; k += std::max(1, g.ns / 4))
            for (int lobe = 0; lobe < 2; ++lobe) {
                if (!omega->data().lobes[static_cast<size_t>(lobe)]) continue;
                const double z = lobe == 0 ? 0.0 : 1.0;
                worst = std::max(worst, std::abs(omega->value_zjk(z, j, k)));
                const double detadsig = chart.deta_dsigma(g.y(j), g.s(k));
                worst = std::max(worst,
                                 std::abs(omega->deta_zjk(z, j, k, 1)) * std::abs(detadsig));
            }
    rep.max_on_surface = worst;
    beam.omega = omega;

    // psi vanishing-order fit on the gap side of each surface
    for (int lobe = 0; lobe < 2; ++lobe) {
        if (!omega->data().lobes[static_cast<size_t>(lobe)]) continue;
        const double eps_in = omega->eps_in(lobe);
        const double z_hi = 0.45 * eps_in;  // inside the zeta = 1 plateau
        const double z_lo = z_hi / 100.0;   // two decades
        const int npts = 9;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        for (int j = g.ny / 4; j <= 3 * g.ny / 4; j += std::max(1, g.ny / 4))
            for (int k = g.ns / 4; k <= 3 * g.ns / 4; k += std::max(1, g.ns / 4)) {
                const double gap = chart.gap(g.y(j), g.s(k));
                for (int q = 0; q < npts; ++q) {
                    const double z_off =
                        z_lo * std::pow(z_hi / z_lo, static_cast<double>(q) / (npts - 1));
                    const double z = lobe == 0 ? z_off : 1.0 - z_off;
                    const complexd psi = psi_value_zjk(beam, z, j, k);
                    if (std::abs(psi) <= 0) continue;
                    const double lx = std::log(z_off * gap);  // |sigma - s|
                    const double ly = std::log(std::abs(psi));
                    sx += lx;
                    sy += ly;
                    sxx += lx * lx;
                    sxy += lx * ly;
                    ++cnt;
                }
            }
        if (cnt >= 4)
            rep.psi_fit_slope[static_cast<size_t>(lobe)] =
                (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    }

    return rep;
}

complexd psi_value_zjk(const Beam& beam, double z, int j, int k) {
    if (!beam.omega) throw Error("psi_value_zjk needs a modified beam");
    const Grid3& g = beam.envelope.grid;
    const EtaChart& chart = beam.omega->chart();
    const double sigma = chart.sigma_of_eta(z / (static_cast<double>(beam.n) * beam.n),
                                            g.y(j), g.s(k));
    const complexd r = interp_sigma_line(beam.residual_r, g.z_of_sigma(sigma), j, k);
    return r + beam.omega->L_value_zjk(z, j, k);
}

}  // namespace ucb
