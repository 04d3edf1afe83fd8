#include "dnlslab/variation.hpp"

#include <algorithm>
#include <numeric>

namespace dnls {

TimeSeries::TimeSeries(std::vector<double> times, std::vector<std::vector<cd>> samples,
                       double inner_weight)
    : t_(std::move(times)), a_(std::move(samples)), w_(inner_weight) {
    if (a_.empty()) throw std::invalid_argument("TimeSeries: need >= 1 sample");
    if (t_.size() != a_.size()) throw std::invalid_argument("TimeSeries: times/samples mismatch");
    for (std::size_t m = 1; m < t_.size(); ++m)
        if (!(t_[m] > t_[m - 1])) throw std::invalid_argument("TimeSeries: times must increase");
    for (const auto& s : a_)
        if (s.size() != a_[0].size())
            throw std::invalid_argument("TimeSeries: all samples must have the same shape");
    if (!(w_ > 0)) throw std::invalid_argument("TimeSeries: inner weight must be positive");
}

TimeSeries TimeSeries::scalars(std::vector<double> times, std::vector<cd> values) {
    std::vector<std::vector<cd>> samples;
    samples.reserve(values.size());
    for (cd v : values) samples.push_back({v});
    return TimeSeries(std::move(times), std::move(samples));
}

TimeSeries TimeSeries::scalars_uniform(std::vector<cd> values) {
    const int M = static_cast<int>(values.size()) - 1;
    if (M < 0) throw std::invalid_argument("TimeSeries: need >= 1 sample");
    std::vector<double> times(values.size());
    for (std::size_t m = 0; m < values.size(); ++m)
        times[m] = M == 0 ? 0.0 : static_cast<double>(m) / M;
    return scalars(std::move(times), std::move(values));
}

double TimeSeries::sample_norm(int m) const {
    double s = 0;
    for (cd z : a_[m]) s += std::norm(z);
    return std::sqrt(w_ * s);
}

double TimeSeries::increment_norm_sq(int i, int j) const {
    const auto& ai = a_[i];
    const auto& aj = a_[j];
    double s = 0;
    for (std::size_t d = 0; d < ai.size(); ++d) s += std::norm(aj[d] - ai[d]);
    return w_ * s;
}

TimeSeries TimeSeries::with_zero_prepended() const {
    std::vector<double> t(t_.size() + 1);
    t[0] = t_.front() - (t_.size() > 1 ? t_[1] - t_[0] : 1.0);
    std::copy(t_.begin(), t_.end(), t.begin() + 1);
    std::vector<std::vector<cd>> a(a_.size() + 1);
    a[0].assign(sample_dim(), cd(0, 0));
    std::copy(a_.begin(), a_.end(), a.begin() + 1);
    return TimeSeries(std::move(t), std::move(a), w_);
}

TimeSeries& TimeSeries::operator+=(const TimeSeries& o) {
    if (o.sample_count() != sample_count() || o.sample_dim() != sample_dim() || o.w_ != w_)
        throw std::invalid_argument("TimeSeries: shape mismatch in +=");
    for (int m = 0; m < sample_count(); ++m)
        for (std::size_t d = 0; d < a_[m].size(); ++d) a_[m][d] += o.a_[m][d];
    return *this;
}

TimeSeries TimeSeries::reversed() const {
    std::vector<double> t(t_.size());
    for (std::size_t m = 0; m < t_.size(); ++m)
        t[m] = t_.front() + t_.back() - t_[t_.size() - 1 - m];
    std::vector<std::vector<cd>> a(a_.rbegin(), a_.rend());
    return TimeSeries(std::move(t), std::move(a), w_);
}

// ---------------------------------------------------------------------------

double v2_norm(const TimeSeries& a) {
    const int n = a.sample_count();
    if (n < 2) return 0.0;
    // Gram-based increments: ||a_j - a_i||^2 = n_i + n_j - 2 Re <a_i, a_j>
    std::vector<double> best(n, 0.0);
    double global = 0.0;
    for (int j = 1; j < n; ++j) {
        double bj = 0.0;
        for (int i = 0; i < j; ++i) {
            const double cand = best[i] + a.increment_norm_sq(i, j);
            if (cand > bj) bj = cand;
        }
        best[j] = bj;
        global = std::max(global, bj);
    }
    return std::sqrt(global);
}

double v2_norm_bruteforce(const TimeSeries& a) {
    const int n = a.sample_count();
    if (n < 2) return 0.0;
    if (n > 17) throw std::invalid_argument("v2_norm_bruteforce: refused for M > 16");
    double global = 0.0;
    const std::uint32_t subsets = 1u << n;
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
        if (std::popcount(mask) < 2) continue;
        double sum = 0.0;
        int prev = -1;
        for (int m = 0; m < n; ++m) {
            if (!(mask & (1u << m))) continue;
            if (prev >= 0) sum += a.increment_norm_sq(prev, m);
            prev = m;
        }
        global = std::max(global, sum);
    }
    return std::sqrt(global);
}

double besov_half_norm(const TimeSeries& a, BesovFlavor flavor) {
    const int M = a.segments();
    if (M < 1) return 0.0;
    double l1 = 0.0, linf = 0.0;
    for (int shift = 1; shift <= M; shift *= 2) {
        double s = 0.0;
        for (int m = 0; m + shift <= M; ++m) s += a.increment_norm_sq(m, m + shift);
        const double dj = std::sqrt(s / shift);
        l1 += dj;
        linf = std::max(linf, dj);
    }
    return flavor == BesovFlavor::L1 ? l1 : linf;
}

TimeSeries primitive(const TimeSeries& f) {
    const int n = f.sample_count();
    const auto& t = f.times();
    const double dt = n > 1 ? t[1] - t[0] : 1.0;
    std::vector<std::vector<cd>> g(n);
    std::vector<cd> acc(f.sample_dim(), cd(0, 0));
    for (int m = 0; m < n; ++m) {
        for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += dt * f.sample(m)[d];
        g[m] = acc;
    }
    return TimeSeries(t, std::move(g), f.inner_weight());
}

double du2_lower(const TimeSeries& f, const std::vector<TimeSeries>& dictionary) {
    if (dictionary.empty()) throw std::invalid_argument("du2_lower: empty dictionary");
    const int n = f.sample_count();
    const auto& t = f.times();
    const double dt = n > 1 ? t[1] - t[0] : 1.0;
    double best = 0.0;
    for (const TimeSeries& v : dictionary) {
        if (v.sample_count() != n || v.sample_dim() != f.sample_dim())
            throw std::invalid_argument("du2_lower: dictionary element shape mismatch");
        const double vnorm = v2_norm(v);
        if (vnorm > 1.01)
            throw std::invalid_argument("du2_lower: dictionary element with v2_norm > 1 (" +
                                        std::to_string(vnorm) + ", dim " +
                                        std::to_string(v.sample_dim()) + ", w " +
                                        std::to_string(v.inner_weight()) + ")");
        cd pair(0, 0);
        for (int m = 0; m < n; ++m) {
            const auto& fm = f.sample(m);
            const auto& vm = v.sample(m);
            cd s(0, 0);
            for (std::size_t d = 0; d < fm.size(); ++d) s += fm[d] * std::conj(vm[d]);
            pair += s * dt;
        }
        // renormalizing by the measured v2 keeps the bound certified under roundoff
        best = std::max(best, std::abs(pair) * f.inner_weight() / std::max(1.0, vnorm));
    }
    return best;
}

std::vector<TimeSeries> du2_default_dictionary(const TimeSeries& f) {
    const int n = f.sample_count();
    const auto& t = f.times();
    const double dt = n > 1 ? t[1] - t[0] : 1.0;
    std::vector<TimeSeries> dict;

    // steps at every interior breakpoint, direction chosen to maximize the pairing:
    // for the step 1_{m>=b} hhat, the pairing is <hhat, dt * sum_{m>=b} f_m>, maximized
    // by hhat = tail / ||tail||.
    std::vector<cd> tail(f.sample_dim(), cd(0, 0));
    std::vector<std::vector<cd>> tails(n);
    for (int m = n - 1; m >= 1; --m) {
        for (std::size_t d = 0; d < tail.size(); ++d) tail[d] += dt * f.sample(m)[d];
        tails[m] = tail;
    }
    for (int b = 1; b < n; ++b) {
        double tn = 0;
        for (cd z : tails[b]) tn += std::norm(z);
        tn = std::sqrt(f.inner_weight() * tn);
        if (tn < 1e-300) continue;
        std::vector<std::vector<cd>> samples(n);
        std::vector<cd> dir(tails[b]);
        for (auto& z : dir) z /= tn; // unit norm in the weighted inner product
        for (int m = 0; m < n; ++m)
            samples[m] = m >= b ? dir : std::vector<cd>(f.sample_dim(), cd(0, 0));
        dict.emplace_back(t, std::move(samples), f.inner_weight());
    }

    // the test series itself, normalized; skipped when its variation is at the
    // roundoff floor of the sample scale (normalizing noise is not meaningful)
    const double fv = v2_norm(f);
    double sample_scale = 0;
    for (int m = 0; m < n; ++m) sample_scale = std::max(sample_scale, f.sample_norm(m));
    if (fv > 1e-10 * sample_scale && fv > 1e-300) {
        std::vector<std::vector<cd>> samples(n);
        for (int m = 0; m < n; ++m) {
            samples[m] = f.sample(m);
            for (auto& z : samples[m]) z /= fv;
        }
        dict.emplace_back(t, std::move(samples), f.inner_weight());
    }

    if (dict.empty()) {
        // zero input: a single unit step keeps the dictionary non-empty
        std::vector<std::vector<cd>> samples(n, std::vector<cd>(f.sample_dim(), cd(0, 0)));
        if (n >= 2 && f.sample_dim() >= 1) {
            const double unit = 1.0 / std::sqrt(f.inner_weight());
            for (int m = n / 2; m < n; ++m) samples[m][0] = unit;
        }
        dict.emplace_back(t, std::move(samples), f.inner_weight());
    }
    return dict;
}

double du2_upper(const TimeSeries& f) { return besov_half_norm(primitive(f), BesovFlavor::L1); }

Du2Bracket du2_bracket(const TimeSeries& f) {
    return Du2Bracket{du2_lower(f, du2_default_dictionary(f)), du2_upper(f)};
}

} // namespace dnls
