#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "intersection.hpp"

namespace breather {

inline constexpr const char* kArtifactVersion = "1.0.0";

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NormalFormConfig, c, hard_cap, degree, box_scale, K1, newton_max,
                                                newton_tol, early_stop, mode_floor, noise_floor)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ManifoldConfig, eta, rho, r, cutoff_r, T_inf, dense_T, dense_dt,
                                                period_nodes, growth, richardson, fixpt_tol, max_iters, sigma_probes,
                                                shrink_cutoff, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(IntersectionConfig, order, dt, delta, t_max, interp_nodes, T_tail,
                                                tail_window, root_tol, max_bisect, b, node_dt, tangent_dt, n_time,
                                                defect_samples, integrator_tol, check_upsilon)

struct SimulateConfig {
    std::string system = "raw";  // raw, transformed, regular, duffing
    double t0 = 0, t1 = 20, dt = 1e-3;
    int stride = 100;
    int order = 4;
    double init_tau = -5;        // start on homoclinic(init_tau)
    double init_ell = 1e-2;      // random elliptic data of this Y1 size
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimulateConfig, system, t0, t1, dt, stride, order, init_tau, init_ell)

struct ExperimentConfig {
    std::string nonlinearity = "cubic";  // cubic, sine-gordon, odd-polynomial
    std::vector<double> coeffs;          // c3, c5, ... for odd-polynomial
    std::vector<double> eps_list{0.1};
    int n_modes = 16;
    int collocation = 0;
    NormalFormConfig normal_form;
    ManifoldConfig manifold;
    IntersectionConfig intersection;
    SimulateConfig simulate;
    int audit_samples = 200;
    int manifold_grid = 10;
    bool resolution_doubled = false;
    std::string output_dir = "out";
    unsigned seed = 1;

    Nonlinearity make_nonlinearity() const {
        Nonlinearity n;
        if (nonlinearity == "cubic") n = Nonlinearity::cubic();
        else if (nonlinearity == "sine-gordon") n = Nonlinearity::sine_gordon();
        else if (nonlinearity == "odd-polynomial") n = Nonlinearity::odd_polynomial(coeffs);
        else fail(ErrorKind::InvalidConfig, "unknown nonlinearity '" + nonlinearity + "'");
        n.validate();
        return n;
    }

    // resolution actually used, after the doubling switch
    int modes() const { return resolution_doubled ? 2 * n_modes : n_modes; }
    IntersectionConfig intersection_used() const {
        auto c = intersection;
        if (resolution_doubled) c.dt /= 2;
        return c;
    }

    void validate() const {
        if (eps_list.empty()) fail(ErrorKind::InvalidConfig, "eps_list is empty");
        for (size_t i = 0; i < eps_list.size(); ++i) {
            if (!(eps_list[i] > 0 && eps_list[i] < 0.5)) fail(ErrorKind::InvalidConfig, "eps must lie in (0, 0.5)");
            if (i && !(eps_list[i] > eps_list[i - 1])) fail(ErrorKind::InvalidConfig, "eps_list must be sorted");
        }
        if (n_modes < 2) fail(ErrorKind::InvalidConfig, "n_modes must be at least 2");
        if (output_dir.empty()) fail(ErrorKind::InvalidConfig, "output_dir is empty");
        make_nonlinearity();
        manifold.validate();
        intersection.validate();
    }
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentConfig, nonlinearity, coeffs, eps_list, n_modes, collocation,
                                                normal_form, manifold, intersection, simulate, audit_samples,
                                                manifold_grid, resolution_doubled, output_dir, seed)

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::InvalidConfig, "cannot read config " + path);
    nlohmann::json j;
    try {
        in >> j;
        return j.get<ExperimentConfig>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidConfig, std::string("bad config: ") + e.what());
    }
}

// 64-bit FNV-1a of the resolved config; same config, same id
inline std::string run_id(const ExperimentConfig& cfg) {
    std::string s = nlohmann::json(cfg).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream o;
    o << std::hex << std::setw(16) << std::setfill('0') << h;
    return o.str();
}

inline nlohmann::json metadata(const ExperimentConfig& cfg, const std::string& command) {
    return {{"run_id", run_id(cfg)}, {"version", kArtifactVersion}, {"command", command}, {"config", cfg}};
}

inline std::string eps_tag(double eps) {
    std::ostringstream o;
    o << std::setprecision(6) << eps;
    return "eps" + o.str();
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) fail(ErrorKind::InvalidConfig, "cannot write " + path.string());
        out_ << std::setprecision(17);
        for (size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }
    void row(const std::vector<double>& v) {
        for (size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::InvalidConfig, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline nlohmann::json to_json(const AuditReport& r) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& e : r.entries)
        steps.push_back({{"m", e.m}, {"norm_G", e.norm_G}, {"norm_Gtilde", e.norm_Gtilde},
                         {"sup_Gtilde", e.sup_Gtilde}, {"ratio", e.ratio}, {"radius", e.radius},
                         {"G_ok", e.G_ok}, {"Gtilde_ok", e.Gtilde_ok}});
    return {{"eps", r.eps}, {"steps", steps}, {"first_violation", r.first_violation}, {"ok", r.ok()}};
}

inline nlohmann::json to_json(const BreatherResult& r) {
    return {{"eps", r.eps},
            {"s0", r.s0},
            {"h0", r.h0},
            {"h1", r.h1},
            {"h_s0", r.h_s0},
            {"bisect_steps", r.bisect_steps},
            {"shoot_iterations", r.shoot_iterations},
            {"splitting", r.splitting},
            {"Q_plus", r.Q_plus},
            {"Q_minus", r.Q_minus},
            {"energy_on_center", r.energy_on_center},
            {"energy_on_manifolds", r.energy_on_manifolds},
            {"T_tail", r.T_tail},
            {"tail_amp", r.tail_amp},
            {"tail_linear", r.tail_linear},
            {"defect", r.defect},
            {"integrator_tol", r.integrator_tol},
            {"symmetry_defect", r.symmetry_defect},
            {"hyp_end", r.hyp_end},
            {"upsilon_gap", r.upsilon_gap}};
}

inline nlohmann::json to_json(const ExpFit& f) {
    return {{"c_fit", f.c_fit}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"used", f.used},
            {"excluded", f.excluded}};
}

// Trajectory dump: tau, w, w1, |W^c|_Y, |W^c|_Y1, H
template <class H>
void write_trajectory(const std::filesystem::path& path, const Trajectory<double>& t, H&& energy) {
    CsvWriter w(path, {"tau", "w", "w1", "y_norm", "y1_norm", "H"});
    for (size_t i = 0; i < t.size(); ++i) {
        const auto& z = t.states[i];
        w.row({t.tau[i], z.hyp.w, z.hyp.w1, y_norm(z.ell), y1_norm(z.ell), energy(z)});
    }
}

inline void write_physical(const std::filesystem::path& path, const PhysicalField& P) {
    std::vector<std::string> header{"x"};
    for (double t : P.t) {
        std::ostringstream o;
        o << std::setprecision(17) << "t=" << t;
        header.push_back(o.str());
    }
    CsvWriter w(path, header);
    for (size_t i = 0; i < P.X.size(); ++i) {
        std::vector<double> row{P.X[i]};
        row.insert(row.end(), P.u[i].begin(), P.u[i].end());
        w.row(row);
    }
}

// Worker cap from BREATHER_LAB_THREADS, else the hardware
inline int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* s = std::getenv("BREATHER_LAB_THREADS")) {
        int v = std::atoi(s);
        if (v > 0) n = v;
    }
    return std::max(1, n);
}

// Runs job(i) for i < n on a small pool; jobs write distinct outputs
inline void parallel_for(int n, const std::function<void(int)>& job, int workers = worker_count()) {
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i; (i = next++) < n;) job(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace breather
