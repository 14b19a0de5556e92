#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace nck {

using Vec = std::vector<double>;

// Counter-based seed derivation: every module draws its seed as
// derive_seed(master, stream_name, counter), so one master seed in the
// config pins the whole experiment.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t counter = 0);

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double normal() { return normal_(eng_); }
    double uniform() { return uniform_(eng_); }
    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_);
    }
    bool coin() { return uniform() < 0.5; }

    Vec normal_vec(std::size_t d) {
        Vec v(d);
        for (auto& x : v) x = normal();
        return v;
    }

    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace nck
