#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dnls {

using cd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// ---------------------------------------------------------------------------
// Thread pool with a deterministic parallel_for: tasks write to caller-indexed
// slots, so reduction order never depends on scheduling.
// ---------------------------------------------------------------------------

class ThreadPool {
public:
    static ThreadPool& instance();

    void set_threads(int n);
    int threads() const { return n_threads_; }

    // Runs fn(i) for i in [0, n). Blocks until done. Exceptions are rethrown.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

private:
    ThreadPool();
    int n_threads_ = 1;
    std::mutex mtx_;
};

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    ThreadPool::instance().parallel_for(n, fn);
}

// ---------------------------------------------------------------------------
// Deterministic RNG helpers
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed ^ 0x9e3779b97f4a7c15ull); }

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline cd complex_gaussian(Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    return cd(g(rng), g(rng)) / std::sqrt(2.0);
}

// Halton low-discrepancy sequence in [0,1)^d.
inline double halton(std::size_t index, int base) {
    double f = 1.0, r = 0.0;
    std::size_t i = index + 1;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Least-squares line through (x_i, y_i).
inline SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need >= 2 matched points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) throw std::invalid_argument("fit_line: degenerate abscissae");
    SlopeFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

inline SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0 || y[i] <= 0)
            throw std::invalid_argument("fit_loglog: nonpositive sample");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return fit_line(lx, ly);
}

// C^2 smooth step: 0 at u<=0, 1 at u>=1.
inline double smootherstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

// Radial cutoff profile: 1 for r <= 1, 0 for r >= 2, C^2 in between.
inline double radial_cutoff(double r) { return 1.0 - smootherstep(r - 1.0); }

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace dnls
