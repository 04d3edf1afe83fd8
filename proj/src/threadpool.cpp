#include "dnlslab/common.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>

namespace dnls {

ThreadPool& ThreadPool::instance() {
    static ThreadPool pool;
    return pool;
}

ThreadPool::ThreadPool() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DNLS_LAB_THREADS")) {
        const int k = std::atoi(env);
        if (k > 0) n = k;
    }
    n_threads_ = n > 0 ? n : 1;
}

void ThreadPool::set_threads(int n) {
    if (n < 1) throw std::invalid_argument("set_threads: need n >= 1");
    n_threads_ = n;
}

void ThreadPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const int workers = static_cast<int>(std::min<std::size_t>(n_threads_, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mtx;
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mtx);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> ts;
    ts.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) ts.emplace_back(work);
    work();
    for (auto& t : ts) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace dnls
