#include "nck/io.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nck/errors.hpp"
#include "nck/version.hpp"

namespace nck {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_input("write_trajectory_csv: cannot open " + path);
    out << "t";
    for (int k = 1; k <= traj.dimension; ++k) out << ",x_" << k;
    out << "\n";
    for (std::size_t i = 0; i < traj.points.size(); ++i) {
        out << format_double(i * traj.eta);
        for (double v : traj.points[i]) out << "," << format_double(v);
        out << "\n";
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

}  // namespace

Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input("read_trajectory_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw invalid_input("read_trajectory_csv: empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "t")
        throw invalid_input("read_trajectory_csv: bad header");
    Trajectory traj;
    traj.dimension = static_cast<int>(header.size()) - 1;
    double t0 = 0.0, t1 = 0.0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw invalid_input("read_trajectory_csv: ragged row");
        Vec x(traj.dimension);
        for (int k = 0; k < traj.dimension; ++k) x[k] = std::stod(cells[k + 1]);
        if (traj.points.empty()) t0 = std::stod(cells[0]);
        else if (traj.points.size() == 1) t1 = std::stod(cells[0]);
        traj.points.push_back(std::move(x));
    }
    traj.eta = traj.points.size() > 1 ? t1 - t0 : 0.0;
    traj.total_time = traj.eta * traj.points.size();
    return traj;
}

void write_pairs_csv(const PairDataset& ds, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw invalid_input("write_pairs_csv: cannot open " + csv_path);
    for (int k = 1; k <= ds.dimension; ++k) out << (k > 1 ? "," : "") << "x_" << k;
    for (int k = 1; k <= ds.dimension; ++k) out << ",xp_" << k;
    out << ",label\n";
    for (const auto& p : ds.pairs) {
        for (int k = 0; k < ds.dimension; ++k)
            out << (k ? "," : "") << format_double(p.x[k]);
        for (int k = 0; k < ds.dimension; ++k) out << "," << format_double(p.x_prime[k]);
        out << "," << p.label << "\n";
    }
}

void write_pairs_sidecar(const PairDataset& ds, const std::string& contrast_desc,
                         const std::string& json_path) {
    nlohmann::json j;
    j["eta"] = ds.eta;
    j["seed"] = ds.seed;
    j["contrast"] = contrast_desc;
    j["trajectory_id"] = ds.source_trajectory_id;
    j["pairs"] = ds.pairs.size();
    j["dimension"] = ds.dimension;
    std::ofstream out(json_path);
    if (!out) throw invalid_input("write_pairs_sidecar: cannot open " + json_path);
    out << j.dump(2) << "\n";
}

PairDataset read_pairs_csv(const std::string& csv_path, int dimension) {
    std::ifstream in(csv_path);
    if (!in) throw invalid_input("read_pairs_csv: cannot open " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw invalid_input("read_pairs_csv: empty file");
    PairDataset ds;
    ds.dimension = dimension;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != 2 * dimension + 1)
            throw invalid_input("read_pairs_csv: ragged row");
        LabeledPair p;
        p.x.resize(dimension);
        p.x_prime.resize(dimension);
        for (int k = 0; k < dimension; ++k) p.x[k] = std::stod(cells[k]);
        for (int k = 0; k < dimension; ++k) p.x_prime[k] = std::stod(cells[dimension + k]);
        p.label = std::stoi(cells[2 * dimension]);
        ds.pairs.push_back(std::move(p));
    }
    return ds;
}

void write_kernel_grid_csv(const KernelFn& kernel, const Vec& xs, const Vec& xps,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_input("write_kernel_grid_csv: cannot open " + path);
    out << "x,x_prime,value\n";
    for (double x : xs)
        for (double xp : xps)
            out << format_double(x) << "," << format_double(xp) << ","
                << format_double(kernel(Vec{x}, Vec{xp})) << "\n";
}

nlohmann::json theorem_report_json(const TheoremReport& rep) {
    nlohmann::json j;
    j["theorem"] = rep.theorem;
    j["inputs"] = {{"eta", rep.inputs.eta},
                   {"d", rep.inputs.d},
                   {"rho", rep.inputs.rho},
                   {"c_q", rep.inputs.c_q},
                   {"log_c_q", rep.inputs.log_c_q},
                   {"eps_tr", rep.inputs.eps_tr},
                   {"eps_star", rep.inputs.eps_star},
                   {"delta_min", rep.inputs.delta_min},
                   {"delta_max", rep.inputs.delta_max}};
    j["lhs"] = rep.lhs;
    j["rhs"] = rep.rhs;
    j["rhs_log10"] = rep.rhs_log10;
    j["rhs_overflow"] = rep.rhs_overflow;
    j["hypothesis_satisfied"] = rep.hypothesis_satisfied;
    j["pass"] = rep.pass;
    j["method_notes"] = rep.method_notes;
    for (const auto& [k, v] : rep.extra) j["extra"][k] = v;
    return j;
}

void write_theorem_report(const TheoremReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_input("write_theorem_report: cannot open " + path);
    out << theorem_report_json(rep).dump(2) << "\n";
}

void write_manifest(const Manifest& m, const std::string& path) {
    nlohmann::json j;
    j["config_hash"] = m.config_hash;
    j["master_seed"] = m.master_seed;
    j["version"] = m.version;
    j["subcommand"] = m.subcommand;
    j["threads"] = m.threads;
    j["outputs"] = m.outputs;
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    j["timestamp_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    std::ofstream out(path);
    if (!out) throw invalid_input("write_manifest: cannot open " + path);
    out << j.dump(2) << "\n";
}

}  // namespace nck
