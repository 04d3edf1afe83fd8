#pragma once

#include "dnlslab/common.hpp"

namespace dnls {

// ---------------------------------------------------------------------------
// TimeSeries: samples of a Hilbert-space surrogate (scalars, or field tiles
// flattened to vectors with an inner-product weight) at increasing times.
// ---------------------------------------------------------------------------
class TimeSeries {
public:
    TimeSeries() = default;
    TimeSeries(std::vector<double> times, std::vector<std::vector<cd>> samples,
               double inner_weight = 1.0);

    static TimeSeries scalars(std::vector<double> times, std::vector<cd> values);
    // samples at t_m = m/M
    static TimeSeries scalars_uniform(std::vector<cd> values);

    int sample_count() const { return static_cast<int>(a_.size()); }
    int segments() const { return sample_count() - 1; }
    const std::vector<double>& times() const { return t_; }
    const std::vector<cd>& sample(int m) const { return a_[m]; }
    double inner_weight() const { return w_; }
    std::size_t sample_dim() const { return a_.empty() ? 0 : a_[0].size(); }

    double sample_norm(int m) const;
    double increment_norm_sq(int i, int j) const;

    // series with a zero sample prepended (constants then score their size)
    TimeSeries with_zero_prepended() const;

    TimeSeries& operator+=(const TimeSeries& o);
    friend TimeSeries operator+(TimeSeries a, const TimeSeries& b) { return a += b; }
    TimeSeries reversed() const;

private:
    std::vector<double> t_;
    std::vector<std::vector<cd>> a_;
    double w_ = 1.0;
};

// Exact discrete 2-variation via dynamic programming over all subsequences:
// best[j] = max_{i<j} (best[i] + ||a_j - a_i||^2), returns sqrt(best over ends).
double v2_norm(const TimeSeries& a);

// Exhaustive oracle, M <= 16 segments.
double v2_norm_bruteforce(const TimeSeries& a);

enum class BesovFlavor { L1, Linf };

// Discrete homogeneous Besov-1/2 over dyadic shifts:
// d_j = (sum_m ||a(t_{m+2^j}) - a(t_m)||^2 * 2^{-j})^{1/2}, sliding m.
double besov_half_norm(const TimeSeries& a, BesovFlavor flavor);

// Right-endpoint cumulative primitive g_m = dt * sum_{j<=m} f_j (g_{-1} = 0 convention),
// matching the plain-Riemann pairing of du2_lower.
TimeSeries primitive(const TimeSeries& f);

// Certified lower bound of ||f||_{DU^2}: max over a dictionary of v with
// v2_norm(v) <= 1 of |sum_m <f(t_m), v(t_m)> dt|.
double du2_lower(const TimeSeries& f, const std::vector<TimeSeries>& dictionary);

// Default dictionary: unit steps at every interior breakpoint (directions
// chosen to maximize the pairing) plus the normalized series itself.
std::vector<TimeSeries> du2_default_dictionary(const TimeSeries& f);

// Upper proxy: besov_half_norm(primitive(f), l1). Relies on the standard
// embedding B^{1/2}_{2,1} into U^2 (proxy assumption; see NormReport flags).
double du2_upper(const TimeSeries& f);

struct Du2Bracket {
    double lo = 0.0;
    double hi = 0.0;
};

Du2Bracket du2_bracket(const TimeSeries& f);

} // namespace dnls
