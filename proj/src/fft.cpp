#include "dnlslab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace dnls::fft {

namespace {

// FFTW planning is not thread-safe; executions on distinct arrays are.
std::mutex plan_mutex;

struct PlanKey {
    int rank, n0, n1, sign;
    bool operator<(const PlanKey& o) const {
        return std::tie(rank, n0, n1, sign) < std::tie(o.rank, o.n0, o.n1, o.sign);
    }
};

fftw_plan get_plan(int rank, int n0, int n1, int sign) {
    static std::map<PlanKey, fftw_plan> cache;
    std::lock_guard<std::mutex> lk(plan_mutex);
    const PlanKey key{rank, n0, n1, sign};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    // Plan on scratch storage with FFTW_ESTIMATE: deterministic and leaves
    // caller data untouched. Executions use fftw_execute_dft on real buffers.
    std::vector<cd> scratch(static_cast<std::size_t>(n0) * (rank == 2 ? n1 : 1));
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = rank == 2 ? fftw_plan_dft_2d(n1, n0, p, p, sign, FFTW_ESTIMATE)
                               : fftw_plan_dft_1d(n0, p, p, sign, FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("fftw planning failed");
    cache.emplace(key, plan);
    return plan;
}

void run(std::vector<cd>& data, int rank, int n0, int n1, int sign) {
    const std::size_t total = static_cast<std::size_t>(n0) * (rank == 2 ? n1 : 1);
    if (data.size() != total) throw std::invalid_argument("fft: size mismatch");
    fftw_plan plan = get_plan(rank, n0, n1, sign);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
    if (sign == FFTW_BACKWARD) {
        const double scale = 1.0 / static_cast<double>(total);
        for (auto& v : data) v *= scale;
    }
}

} // namespace

void forward(std::vector<cd>& data, int dim, int n_per_axis) {
    run(data, dim, n_per_axis, n_per_axis, FFTW_FORWARD);
}

void inverse(std::vector<cd>& data, int dim, int n_per_axis) {
    run(data, dim, n_per_axis, n_per_axis, FFTW_BACKWARD);
}

void forward_1d(std::vector<cd>& data) {
    run(data, 1, static_cast<int>(data.size()), 1, FFTW_FORWARD);
}

void inverse_1d(std::vector<cd>& data) {
    run(data, 1, static_cast<int>(data.size()), 1, FFTW_BACKWARD);
}

} // namespace dnls::fft
