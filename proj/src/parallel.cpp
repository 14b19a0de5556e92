#include "nck/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdint>

namespace nck::par {

namespace {
int g_threads = 1;
}

int max_threads() { return g_threads; }

void set_threads(int n) {
    if (n < 1) n = 1;
    g_threads = n;
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
}

double pairwise_sum(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    if (n <= 16) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace detail {

void parallel_fill(std::size_t n, double* out, const std::function<double(std::size_t)>& f) {
#ifdef _OPENMP
    if (g_threads > 1 && n > 256) {
        const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < sn; ++i) out[i] = f(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
}

}  // namespace detail

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body) {
#ifdef _OPENMP
    if (g_threads > 1 && n > 1) {
        const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < sn; ++i) body(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace nck::par
