#include "ucb/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

namespace ucb {

double Mat::invert(Mat& inv, double det_floor) const {
    const int n = n_;
    Mat lu = *this;
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    double det = 1.0;

    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::abs(lu(col, col));
        for (int r = col + 1; r < n; ++r) {
            const double v = std::abs(lu(r, col));
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(lu(col, j), lu(piv, j));
            std::swap(perm[col], perm[piv]);
            det = -det;
        }
        const double d = lu(col, col);
        if (std::abs(d) < 1e-300) throw SingularMetric("zero pivot in metric inversion");
        det *= d;
        for (int r = col + 1; r < n; ++r) {
            const double f = lu(r, col) / d;
            lu(r, col) = f;
            for (int j = col + 1; j < n; ++j) lu(r, j) -= f * lu(col, j);
        }
    }
    if (std::abs(det) < det_floor)
        throw SingularMetric("|det g| = " + std::to_string(std::abs(det)) + " below floor");

    inv = Mat(n);
    for (int rhs = 0; rhs < n; ++rhs) {
        // Solve L U x = e_rhs with the recorded permutation.
        Vec b(n, 0.0);
        for (int i = 0; i < n; ++i) b[i] = (perm[i] == rhs) ? 1.0 : 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) b[i] -= lu(i, j) * b[j];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) b[i] -= lu(i, j) * b[j];
            b[i] /= lu(i, i);
        }
        for (int i = 0; i < n; ++i) inv(i, rhs) = b[i];
    }
    return det;
}

std::vector<double> Mat::sym_eigenvalues() const {
    const int n = n_;
    Mat a = *this;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

namespace {
std::atomic<int> g_threads{0};
}

int default_thread_count() {
    int t = g_threads.load();
    if (t > 0) return t;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_thread_count(int n) { g_threads.store(n); }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body) {
    const int nt = std::min<std::int64_t>(default_thread_count(), std::max<std::int64_t>(n, 1));
    if (nt <= 1 || n < 128) {
        body(0, n);
        return;
    }
    std::vector<std::thread> workers;
    const std::int64_t chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        const std::int64_t lo = t * chunk, hi = std::min<std::int64_t>(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& w : workers) w.join();
}

}  // namespace ucb
