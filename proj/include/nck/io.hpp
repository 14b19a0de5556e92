#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "nck/diffusion.hpp"
#include "nck/pairs.hpp"
#include "nck/theory.hpp"

namespace nck {

// CSV writers use %.17g so values round-trip bit-exactly.
std::string format_double(double v);

void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

void write_pairs_csv(const PairDataset& ds, const std::string& csv_path);
void write_pairs_sidecar(const PairDataset& ds, const std::string& contrast_desc,
                         const std::string& json_path);
PairDataset read_pairs_csv(const std::string& csv_path, int dimension);

// kernel grid dump: columns x, x_prime, value (d = 1)
void write_kernel_grid_csv(const KernelFn& kernel, const Vec& xs, const Vec& xps,
                           const std::string& path);

nlohmann::json theorem_report_json(const TheoremReport& rep);
void write_theorem_report(const TheoremReport& rep, const std::string& path);

struct Manifest {
    std::string config_hash;
    std::uint64_t master_seed;
    std::string version;
    std::string subcommand;
    int threads;
    std::vector<std::string> outputs;
};
void write_manifest(const Manifest& m, const std::string& path);

}  // namespace nck
