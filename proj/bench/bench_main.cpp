// Compares the serial reference kernels against their OpenMP versions on the
// workloads that dominate the checks: Monte-Carlo risk evaluation, the 2-D
// quadrature stack, and the c_q grid scan.

#include <chrono>
#include <cstdio>

#include "nck/parallel.hpp"
#include "nck/pairs.hpp"
#include "nck/theory.hpp"

using namespace nck;

namespace {

template <class F>
double time_ms(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void row(const char* name, double serial_ms, double parallel_ms, double check) {
    std::printf("%-28s %10.1f ms %10.1f ms   x%.2f   (checksum %.12g)\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms, check);
}

}  // namespace

int main(int argc, char** argv) {
    int threads = 4;
    if (argc > 1) threads = std::atoi(argv[1]);

    const auto spec = PotentialSpec::quadratic_ou_1d(1.0);
    const auto contrast = ContrastSpec::matched_ou(spec, 0.1);
    const double eta = 0.1;

    std::printf("serial reference vs OpenMP (%d threads); results must match bitwise\n\n",
                threads);

    // 1. Monte-Carlo population risk of the oracle on 10^6 pairs
    const auto samples = make_pair_samples(spec, contrast, eta, 1000000, 7);
    const auto h = oracle_classifier(spec, contrast, eta);
    double serial_v = 0.0, parallel_v = 0.0;
    par::set_threads(1);
    const double t_risk_s = time_ms([&] { serial_v = population_risk_on(h, samples).mean; });
    par::set_threads(threads);
    const double t_risk_p = time_ms([&] { parallel_v = population_risk_on(h, samples).mean; });
    if (serial_v != parallel_v) {
        std::printf("MISMATCH in mc risk: %.17g vs %.17g\n", serial_v, parallel_v);
        return 1;
    }
    row("mc population risk 1e6", t_risk_s, t_risk_p, serial_v);

    // 2. c_q grid scan at 401 x 401
    CqResult cq_s{}, cq_p{};
    par::set_threads(1);
    const double t_cq_s = time_ms([&] { cq_s = compute_cq_box(spec, contrast, eta, 4.0, 401); });
    par::set_threads(threads);
    const double t_cq_p = time_ms([&] { cq_p = compute_cq_box(spec, contrast, eta, 4.0, 401); });
    if (cq_s.log_c_q != cq_p.log_c_q) {
        std::printf("MISMATCH in cq scan\n");
        return 1;
    }
    row("c_q grid scan 401x401", t_cq_s, t_cq_p, cq_s.log_c_q);

    // 3. KL quadrature of a perturbed kernel (the 2-D quadrature stack)
    const auto pk = make_perturbed_kernel(spec, eta, {DeltaKind::SmoothBump, 0.1, 1.0, 0.5},
                                          7.0 / 6.0, true, 3.0);
    const TheoryQuad quad{512, 3.0};
    double kl_s = 0.0, kl_p = 0.0;
    par::set_threads(1);
    const double t_kl_s = time_ms([&] { kl_s = kl_to_truth(pk.fn(), spec, eta, quad); });
    par::set_threads(threads);
    const double t_kl_p = time_ms([&] { kl_p = kl_to_truth(pk.fn(), spec, eta, quad); });
    if (kl_s != kl_p) {
        std::printf("MISMATCH in kl quadrature: %.17g vs %.17g\n", kl_s, kl_p);
        return 1;
    }
    row("kl quadrature 512 nodes", t_kl_s, t_kl_p, kl_s);

    // 4. raw deterministic sum kernel
    const std::size_t n = 1 << 24;
    auto f = [](std::size_t i) { return std::sin(1e-6 * static_cast<double>(i)); };
    double sum_s = 0.0, sum_p = 0.0;
    const double t_sum_s = time_ms([&] { sum_s = par::sum_indexed_serial(n, f); });
    const double t_sum_p = time_ms([&] { sum_p = par::sum_indexed(n, f); });
    if (sum_s != sum_p) {
        std::printf("MISMATCH in pairwise sum\n");
        return 1;
    }
    row("pairwise sum 2^24", t_sum_s, t_sum_p, sum_s);

    return 0;
}
