#include <cmath>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>

#include <CLI11.hpp>

#include <breather/experiment.hpp>

using namespace breather;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kAudit = 3, kNumeric = 4 };

std::mutex io_mutex;

void say(const std::string& s) {
    std::lock_guard<std::mutex> lock(io_mutex);
    std::cout << s << std::endl;
}

std::string fmt(double x, int prec = 6) {
    std::ostringstream o;
    o << std::setprecision(prec) << x;
    return o.str();
}

struct Overrides {
    std::string config;
    std::optional<std::string> out, nonlinearity;
    std::vector<double> eps_list, coeffs;
    std::optional<int> n_modes, order;
    std::optional<unsigned> seed;
    // simulate
    std::optional<std::string> system;
    std::optional<double> t1, sim_dt, init_tau, init_ell;
    std::optional<int> stride;
    // audit, manifold
    std::optional<int> samples, grid;
    // breather
    std::optional<double> dt, delta, t_tail;
    bool resolution_doubled = false;
    // fit
    std::string input;
    double noise_floor = 1e-30;

    ExperimentConfig resolve() const {
        ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_config(config);
        if (out) c.output_dir = *out;
        if (nonlinearity) c.nonlinearity = *nonlinearity;
        if (!coeffs.empty()) c.coeffs = coeffs;
        if (!eps_list.empty()) c.eps_list = eps_list;
        if (n_modes) c.n_modes = *n_modes;
        if (seed) c.seed = *seed;
        if (order) c.simulate.order = c.intersection.order = *order;
        if (system) c.simulate.system = *system;
        if (t1) c.simulate.t1 = *t1;
        if (sim_dt) c.simulate.dt = *sim_dt;
        if (init_tau) c.simulate.init_tau = *init_tau;
        if (init_ell) c.simulate.init_ell = *init_ell;
        if (stride) c.simulate.stride = *stride;
        if (samples) c.audit_samples = *samples;
        if (grid) c.manifold_grid = *grid;
        if (dt) c.intersection.dt = *dt;
        if (delta) c.intersection.delta = *delta;
        if (t_tail) c.intersection.T_tail = *t_tail;
        if (resolution_doubled) c.resolution_doubled = true;
        c.manifold.seed = c.seed;
        c.validate();
        fs::create_directories(c.output_dir);
        return c;
    }
};

Model<double> model_for(const ExperimentConfig& c, double eps) {
    return make_model(eps, c.make_nonlinearity(), c.modes(), c.collocation);
}

NormalFormChain chain_for(const ExperimentConfig& c, double eps) {
    return NormalFormChain::build(model_for(c, eps), c.normal_form);
}

int cmd_simulate(const ExperimentConfig& c) {
    const auto& s = c.simulate;
    if (s.system != "raw" && s.system != "transformed" && s.system != "regular" && s.system != "duffing")
        fail(ErrorKind::InvalidConfig, "system must be raw, transformed, regular or duffing");
    std::vector<std::string> errors(c.eps_list.size());
    parallel_for(static_cast<int>(c.eps_list.size()), [&](int i) {
        double eps = c.eps_list[i];
        try {
            auto m = model_for(c, eps);
            FullState<double> z(m.n_modes());
            z.hyp = homoclinic(s.init_tau, m.nl.f3());
            if (s.init_ell > 0) {
                std::mt19937 rng(c.seed + i);
                std::normal_distribution<double> g;
                for (int k = 2; k <= z.n_modes(); ++k) {
                    z.ell.wc[k] = g(rng);
                    z.ell.w1c[k] = g(rng);
                }
                double sc = s.init_ell / y1_norm(z.ell);
                for (int k = 2; k <= z.n_modes(); ++k) {
                    z.ell.wc[k] *= sc;
                    z.ell.w1c[k] *= sc;
                }
            }
            Trajectory<double> t;
            std::function<double(const FullState<double>&)> H;
            std::optional<NormalFormChain> ch;
            if (s.system == "raw") {
                t = integrate_raw(m, z, s.t0, s.t1, s.dt, s.stride, s.order);
                H = [&](const FullState<double>& x) { return hamiltonian(m, x); };
            } else if (s.system == "duffing") {
                t = integrate_duffing(m.nl.f3(), z.hyp, s.t0, s.t1, s.dt, m.n_modes(), s.stride);
                H = [&](const FullState<double>& x) { return duffing_energy(x.hyp, m.nl.f3()); };
            } else {
                ch.emplace(NormalFormChain::build(m, c.normal_form));
                if (s.system == "transformed") {
                    t = integrate_transformed(*ch, z, s.t0, s.t1, s.dt, s.stride);
                } else {
                    t = integrate_regular(*ch, z.hyp, s.t0, s.t1, s.dt, s.stride).base;
                }
                H = [&](const FullState<double>& x) { return transformed_hamiltonian(*ch, x); };
            }
            fs::path base = fs::path(c.output_dir) / ("simulate_" + s.system + "_" + eps_tag(eps));
            write_trajectory(base.string() + ".csv", t, H);
            double H0 = H(t.states.front()), drift = 0;
            for (const auto& x : t.states) drift = std::max(drift, std::abs(H(x) - H0));
            double rel = H0 != 0 ? drift / std::abs(H0) : drift;
            auto j = metadata(c, "simulate");
            j["result"] = {{"eps", eps}, {"system", s.system}, {"nodes", t.size()}, {"H0", H0},
                           {"abs_drift", drift}, {"relative_drift", rel}};
            write_json(base.string() + ".json", j);
            say(eps_tag(eps) + " " + s.system + " nodes " + std::to_string(t.size()) + " drift " + fmt(drift, 3) + " rel " + fmt(rel, 3));
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    int code = kOk;
    for (size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty()) {
            say(eps_tag(c.eps_list[i]) + " failed: " + errors[i]);
            code = kNumeric;
        }
    return code;
}

int cmd_audit(const ExperimentConfig& c) {
    std::vector<int> status(c.eps_list.size(), kOk);
    parallel_for(static_cast<int>(c.eps_list.size()), [&](int i) {
        double eps = c.eps_list[i];
        try {
            auto ch = chain_for(c, eps);
            auto rep = ch.audit(c.audit_samples, c.seed);
            auto j = metadata(c, "audit");
            j["result"] = to_json(rep);
            j["result"]["residuals"] = ch.residual_history();
            j["result"]["alpha_hat"] = ch.alpha_hat();
            write_json(fs::path(c.output_dir) / ("audit_" + eps_tag(eps) + ".json"), j);
            std::string line = eps_tag(eps) + " steps " + std::to_string(ch.size()) + " residual " + fmt(ch.residual(), 3);
            if (!rep.ok()) {
                line += " first violation at m = " + std::to_string(rep.first_violation);
                status[i] = kAudit;
            }
            say(line);
        } catch (const std::exception& e) {
            say(eps_tag(eps) + " failed: " + e.what());
            status[i] = kNumeric;
        }
    });
    return *std::max_element(status.begin(), status.end());
}

int cmd_manifold(const ExperimentConfig& c) {
    std::vector<int> status(c.eps_list.size(), kOk);
    parallel_for(static_cast<int>(c.eps_list.size()), [&](int i) {
        double eps = c.eps_list[i];
        try {
            auto ch = chain_for(c, eps);
            ManifoldSystem ms(ch, c.manifold);
            for (auto k : {ManifoldKind::s, ManifoldKind::u, ManifoldKind::star_s, ManifoldKind::star_u,
                           ManifoldKind::cs, ManifoldKind::cu}) {
                CsvWriter w(fs::path(c.output_dir) / ("manifold_" + eps_tag(eps) + "_" + to_string(k) + ".csv"),
                            {"base", "value", "residual", "contraction", "iterations", "d_base"});
                for (int j = 0; j < c.manifold_grid; ++j) {
                    std::vector<double> b(ms.base_dim(k), 0.0);
                    b[0] = 0.9 * ms.r() * (j + 1) / c.manifold_grid;
                    auto e = ms.graph(k, b);
                    double d = ms.graph_derivative(k, b, 0)[0];
                    w.row({b[0], e.value[0], e.fixpoint_residual, e.contraction, double(e.iterations), d});
                }
            }
            auto j = metadata(c, "manifold");
            j["result"] = {{"eps", eps},          {"r", ms.r()},           {"cutoff_r", ms.cutoff_r()},
                           {"sigma", ms.sigma()}, {"margin", ms.margin()}, {"lambda", ms.lambda()}};
            write_json(fs::path(c.output_dir) / ("manifold_" + eps_tag(eps) + ".json"), j);
            say(eps_tag(eps) + " r " + fmt(ms.r(), 4) + " margin " + fmt(ms.margin(), 4));
        } catch (const std::exception& e) {
            say(eps_tag(eps) + " failed: " + e.what());
            status[i] = kNumeric;
        }
    });
    return *std::max_element(status.begin(), status.end());
}

int cmd_breather(const ExperimentConfig& c) {
    const size_t n = c.eps_list.size();
    std::vector<std::optional<BreatherResult>> res(n);
    std::vector<json> failures(n);
    parallel_for(static_cast<int>(n), [&](int i) {
        double eps = c.eps_list[i];
        try {
            auto ch = chain_for(c, eps);
            IntersectionProblem ip(ch, c.intersection_used());
            auto r = ip.find_breather();
            fs::path base = fs::path(c.output_dir) / ("breather_" + eps_tag(eps));
            auto j = metadata(c, "breather");
            j["result"] = to_json(r);
            j["result"]["alpha_hat"] = ch.alpha_hat();
            write_json(base.string() + ".json", j);
            write_trajectory(base.string() + "_orbit.csv", r.orbit,
                             [&](const FullState<double>& z) { return transformed_hamiltonian(ch, z); });
            write_trajectory(base.string() + "_raw.csv", r.raw_orbit,
                             [&](const FullState<double>& z) { return hamiltonian(ch.model(), z); });
            write_physical(base.string() + "_physical.csv", r.physical);
            say(eps_tag(eps) + " s0 " + fmt(r.s0, 10) + " tail_amp " + fmt(r.tail_amp, 8) + " H(p(s0)) " +
                fmt(r.energy_on_center, 4));
            res[i] = std::move(r);
        } catch (const Error& e) {
            failures[i] = {{"eps", eps}, {"error", to_string(e.kind())}, {"message", e.what()}};
            say(eps_tag(eps) + " failed: " + e.what());
        }
    });

    CsvWriter w(fs::path(c.output_dir) / "sweep.csv",
                {"eps", "inv_eps", "tail_amp", "log_tail", "energy_on_center", "splitting"});
    std::vector<std::pair<double, double>> pts;
    json fails = json::array();
    for (size_t i = 0; i < n; ++i) {
        if (!res[i]) {
            fails.push_back(failures[i]);
            continue;
        }
        const auto& r = *res[i];
        w.row({r.eps, 1 / r.eps, r.tail_amp, std::log(r.tail_amp), r.energy_on_center, r.splitting});
        pts.push_back({r.eps, r.tail_amp});
    }
    auto summary = metadata(c, "breather");
    summary["failures"] = fails;
    try {
        auto F = fit_exponential(pts);
        summary["fit"] = to_json(F);
        say("fit c " + fmt(F.c_fit) + " R^2 " + fmt(F.r_squared));
    } catch (const Error& e) {
        summary["fit_error"] = e.what();
        say(std::string("no fit: ") + e.what());
    }
    write_json(fs::path(c.output_dir) / "summary.json", summary);
    return fails.empty() ? kOk : kNumeric;
}

int cmd_fit(const Overrides& o) {
    if (o.input.empty()) fail(ErrorKind::InvalidConfig, "fit needs --input");
    std::ifstream in(o.input);
    if (!in) fail(ErrorKind::InvalidConfig, "cannot read " + o.input);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    for (std::stringstream ss(line); std::getline(ss, line, ',');) cols.push_back(line);
    auto col = [&](const std::string& name) {
        auto it = std::find(cols.begin(), cols.end(), name);
        if (it == cols.end()) fail(ErrorKind::InvalidConfig, "input lacks column " + name);
        return static_cast<size_t>(it - cols.begin());
    };
    size_t ie = col("eps"), it = col("tail_amp");
    std::vector<std::pair<double, double>> pts;
    while (std::getline(in, line)) {
        std::vector<double> v;
        for (std::stringstream ss(line); std::getline(ss, line, ',');) v.push_back(std::stod(line));
        if (v.size() > std::max(ie, it)) pts.push_back({v[ie], v[it]});
    }
    auto F = fit_exponential(pts, o.noise_floor);
    json j = to_json(F);
    j["input"] = o.input;
    j["noise_floor"] = o.noise_floor;
    std::cout << j.dump(2) << std::endl;
    if (o.out) {
        fs::create_directories(*o.out);
        write_json(fs::path(*o.out) / "fit.json", j);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Small-amplitude Klein-Gordon breathers with exponentially small tails"};
    app.require_subcommand(1);
    Overrides o;
    auto common = [&](CLI::App* s) {
        s->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
        s->add_option("--out", o.out, "output directory");
        s->add_option("--eps-list", o.eps_list, "sorted eps values")->delimiter(',');
        s->add_option("--n-modes", o.n_modes, "Galerkin size");
        s->add_option("--nonlinearity", o.nonlinearity, "cubic, sine-gordon or odd-polynomial");
        s->add_option("--coeffs", o.coeffs, "c3,c5,... for odd-polynomial")->delimiter(',');
        s->add_option("--seed", o.seed, "seed for probing randomness");
    };
    auto* sim = app.add_subcommand("simulate", "integrate raw, transformed, regular or Duffing systems");
    common(sim);
    sim->add_option("--system", o.system);
    sim->add_option("--t1", o.t1);
    sim->add_option("--dt", o.sim_dt);
    sim->add_option("--stride", o.stride);
    sim->add_option("--order", o.order);
    sim->add_option("--init-tau", o.init_tau);
    sim->add_option("--init-ell", o.init_ell, "Y1 size of random elliptic initial data");
    auto* aud = app.add_subcommand("audit", "normal form residual cascade and step inequalities");
    common(aud);
    aud->add_option("--samples", o.samples);
    auto* man = app.add_subcommand("manifold", "graph maps on a grid of base points");
    common(man);
    man->add_option("--grid", o.grid);
    auto* bre = app.add_subcommand("breather", "manifold intersection, assembled orbit and tail fit");
    common(bre);
    bre->add_option("--dt", o.dt);
    bre->add_option("--order", o.order);
    bre->add_option("--delta", o.delta);
    bre->add_option("--t-tail", o.t_tail);
    bre->add_flag("--resolution-doubled", o.resolution_doubled, "double n_modes and halve dt");
    auto* fit = app.add_subcommand("fit", "exponential fit of a sweep CSV");
    fit->add_option("--input", o.input, "CSV with eps and tail_amp columns")->required();
    fit->add_option("--noise-floor", o.noise_floor);
    fit->add_option("--out", o.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    try {
        if (fit->parsed()) return cmd_fit(o);
        auto c = o.resolve();
        if (sim->parsed()) return cmd_simulate(c);
        if (aud->parsed()) return cmd_audit(c);
        if (man->parsed()) return cmd_manifold(c);
        return cmd_breather(c);
    } catch (const Error& e) {
        std::cerr << e.what() << std::endl;
        return e.kind() == ErrorKind::InvalidConfig ? kUsage : kNumeric;
    } catch (const std::exception& e) {
        std::cerr << e.what() << std::endl;
        return kNumeric;
    }
}
