#include <doctest.h>

#include <cmath>

#include "nck/parallel.hpp"
#include "nck/rng.hpp"

using namespace nck;

TEST_CASE("pairwise sum matches long-double reference") {
    Rng rng(1);
    std::vector<double> xs(100001);
    for (auto& x : xs) x = rng.normal() * 1e6;
    long double ref = 0.0L;
    for (double x : xs) ref += static_cast<long double>(x);
    const double got = par::pairwise_sum(xs);
    CHECK(std::abs(got - static_cast<double>(ref)) <=
          1e-9 * std::abs(static_cast<double>(ref)) + 1e-6);
}

TEST_CASE("parallel kernels match serial reference bitwise") {
    auto f = [](std::size_t i) { return std::cos(0.001 * static_cast<double>(i)); };
    const std::size_t n = 100000;
    const double serial = par::sum_indexed_serial(n, f);
    for (int threads : {1, 2, 4, 8}) {
        par::set_threads(threads);
        CHECK(par::sum_indexed(n, f) == serial);
    }
    const auto smax = par::max_indexed_serial(n, f);
    for (int threads : {1, 3, 7}) {
        par::set_threads(threads);
        const auto pmax = par::max_indexed(n, f);
        CHECK(pmax.value == smax.value);
        CHECK(pmax.index == smax.index);
    }
    par::set_threads(1);
}

TEST_CASE("max ties resolve to the first index") {
    auto f = [](std::size_t i) { return (i == 10 || i == 20) ? 5.0 : 0.0; };
    CHECK(par::max_indexed(100, f).index == 10);
}
