#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nck::par {

int max_threads();
void set_threads(int n);

// Fixed-order pairwise reduction of a materialized buffer. Every parallel
// kernel below first fills values[i] = f(i) (each index independent) and
// then reduces in this order, so results are bit-identical at any thread
// count.
double pairwise_sum(std::span<const double> values);

namespace detail {
void parallel_fill(std::size_t n, double* out, const std::function<double(std::size_t)>& f);
}

template <class F>
std::vector<double> materialize(std::size_t n, F&& f) {
    std::vector<double> values(n);
    detail::parallel_fill(n, values.data(), std::function<double(std::size_t)>(std::forward<F>(f)));
    return values;
}

template <class F>
double sum_indexed(std::size_t n, F&& f) {
    auto values = materialize(n, std::forward<F>(f));
    return pairwise_sum(values);
}

// Serial reference for sum_indexed; same buffer + reduction order, so the
// two agree bitwise. Kept for tests and the benchmark target.
template <class F>
double sum_indexed_serial(std::size_t n, F&& f) {
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = f(i);
    return pairwise_sum(values);
}

struct MaxResult {
    double value;
    std::size_t index;
};

// Deterministic argmax: values materialized in parallel, scanned serially
// (first index wins ties).
template <class F>
MaxResult max_indexed(std::size_t n, F&& f) {
    auto values = materialize(n, std::forward<F>(f));
    MaxResult r{values[0], 0};
    for (std::size_t i = 1; i < n; ++i)
        if (values[i] > r.value) r = {values[i], i};
    return r;
}

template <class F>
MaxResult max_indexed_serial(std::size_t n, F&& f) {
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = f(i);
    MaxResult r{values[0], 0};
    for (std::size_t i = 1; i < n; ++i)
        if (values[i] > r.value) r = {values[i], i};
    return r;
}

// Parallel for over independent work items (no reduction).
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace nck::par
