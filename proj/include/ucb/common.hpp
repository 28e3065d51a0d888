#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ucb {

using complexd = std::complex<double>;

// ---------------------------------------------------------------------------
// Error taxonomy. Every operation that can fail throws one of these; reports
// carry pass/fail flags instead where the contract says so.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define UCB_DEFINE_ERROR(Name)                                                 \
    struct Name : Error {                                                      \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}   \
    }

UCB_DEFINE_ERROR(SingularMetric);
UCB_DEFINE_ERROR(SignatureError);
UCB_DEFINE_ERROR(StencilOutOfDomain);
UCB_DEFINE_ERROR(NotUnit);
UCB_DEFINE_ERROR(DeformationNotTimelike);
UCB_DEFINE_ERROR(SectionNotSpacelike);
UCB_DEFINE_ERROR(GeodesicBlowup);
UCB_DEFINE_ERROR(BandOutsideDomain);
UCB_DEFINE_ERROR(OdeToleranceFailure);
UCB_DEFINE_ERROR(EnvelopeZero);
UCB_DEFINE_ERROR(RootOutsideOverlap);
UCB_DEFINE_ERROR(ProbeInconsistent);
UCB_DEFINE_ERROR(CoefficientFloorViolated);
UCB_DEFINE_ERROR(LobeOverlap);
UCB_DEFINE_ERROR(OutsideBands);
UCB_DEFINE_ERROR(OutsideRegion);
UCB_DEFINE_ERROR(VExtractionInconsistent);
UCB_DEFINE_ERROR(NotLorentzian);
UCB_DEFINE_ERROR(IoFailure);
UCB_DEFINE_ERROR(ConfigError);

#undef UCB_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Small dense matrices (dimension d+1 <= ~5). Row-major.
// ---------------------------------------------------------------------------

class Mat {
  public:
    Mat() = default;
    explicit Mat(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0.0) {}

    int dim() const { return n_; }
    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

    static Mat identity(int n) {
        Mat m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Mat operator*(const Mat& o) const {
        Mat r(n_);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k) {
                const double aik = (*this)(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < n_; ++j) r(i, j) += aik * o(k, j);
            }
        return r;
    }

    // LU with partial pivoting; returns det and writes inverse. Throws
    // SingularMetric when |det| underflows the floor.
    double invert(Mat& inv, double det_floor = 1e-14) const;

    // Eigenvalue signs of a symmetric matrix via Jacobi iteration; used for
    // the Lorentzian signature check.
    std::vector<double> sym_eigenvalues() const;

  private:
    int n_ = 0;
    std::vector<double> a_;
};

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec mat_vec(const Mat& m, const Vec& v) {
    Vec r(v.size(), 0.0);
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) r[i] += m(i, j) * v[j];
    return r;
}

// g(v, w) for a metric matrix
inline double bilinear(const Mat& g, const Vec& v, const Vec& w) {
    double s = 0;
    for (int i = 0; i < g.dim(); ++i)
        for (int j = 0; j < g.dim(); ++j) s += g(i, j) * v[i] * w[j];
    return s;
}

// ---------------------------------------------------------------------------
// Second-order forward-mode jet in 3 chart variables (sigma, ybar, s): value,
// gradient, and symmetric Hessian. Enough to apply a second-order operator to
// analytic test functions exactly.
// ---------------------------------------------------------------------------

struct Jet2 {
    double v = 0;
    double g[3] = {0, 0, 0};
    double h[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

    static Jet2 constant(double c) {
        Jet2 j;
        j.v = c;
        return j;
    }
    static Jet2 variable(double value, int axis) {
        Jet2 j;
        j.v = value;
        j.g[axis] = 1.0;
        return j;
    }

    Jet2 operator+(const Jet2& o) const {
        Jet2 r = *this;
        r.v += o.v;
        for (int a = 0; a < 3; ++a) r.g[a] += o.g[a];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) r.h[a][b] += o.h[a][b];
        return r;
    }
    Jet2 operator-(const Jet2& o) const {
        Jet2 r = *this;
        r.v -= o.v;
        for (int a = 0; a < 3; ++a) r.g[a] -= o.g[a];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) r.h[a][b] -= o.h[a][b];
        return r;
    }
    Jet2 operator*(const Jet2& o) const {
        Jet2 r;
        r.v = v * o.v;
        for (int a = 0; a < 3; ++a) r.g[a] = g[a] * o.v + v * o.g[a];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                r.h[a][b] = h[a][b] * o.v + g[a] * o.g[b] + g[b] * o.g[a] + v * o.h[a][b];
        return r;
    }
    Jet2 operator*(double c) const {
        Jet2 r = *this;
        r.v *= c;
        for (int a = 0; a < 3; ++a) r.g[a] *= c;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) r.h[a][b] *= c;
        return r;
    }
    // reciprocal 1/x with x.v != 0
    Jet2 reciprocal() const {
        Jet2 r;
        const double iv = 1.0 / v;
        r.v = iv;
        for (int a = 0; a < 3; ++a) r.g[a] = -g[a] * iv * iv;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                r.h[a][b] = (2.0 * g[a] * g[b] * iv - h[a][b]) * iv * iv;
        return r;
    }
};

// ---------------------------------------------------------------------------
// parallel_for: static chunking over [0, n). Deterministic regardless of the
// thread count because chunks never share accumulation state; reductions are
// combined in index order by the caller.
// ---------------------------------------------------------------------------

int default_thread_count();
void set_thread_count(int n);

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace ucb
