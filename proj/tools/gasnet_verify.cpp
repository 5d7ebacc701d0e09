#include "CLI11.hpp"
#include "json.hpp"

#include "gasnet/distributions.hpp"
#include "gasnet/harness.hpp"
#include "gasnet/placement.hpp"
#include "gasnet/rng.hpp"

#include <fstream>
#include <iostream>

using namespace gasnet;

namespace {

std::string topo_str(const TopologyState& t) {
    std::string s;
    for (bool c : t.closed) s += c ? 'C' : 'O';
    s += '/';
    for (int o : t.orientation) s += o > 0 ? '+' : '-';
    return s;
}

int cmd_simulate(const std::vector<std::string>& files, const std::string& networks,
                 const std::string& out, int workers) {
    McOptions mc;
    mc.workers = workers;
    std::vector<std::filesystem::path> paths(files.begin(), files.end());
    reproduce_tables(paths, networks, out, mc);
    std::cout << "wrote " << (std::filesystem::path(out) / "summary.csv").string() << "\n";
    return 0;
}

int cmd_verify(const std::string& file, const std::string& networks, int T_a_override,
               uint64_t run_index) {
    std::unique_ptr<GasNetwork> net;
    Scenario sc = load_scenario_with_network(file, networks, net);
    int T_a = T_a_override > 0 ? T_a_override : sc.T_a.front();
    SensorPlacement plc = placement_by_name(*net, sc.placement);
    SteadyState ref = solve_steady_state(*net, TopologyState::all_closed(*net));
    NoiseModel noise = rsd_to_noise(sc.rsd, ref, plc);
    SteadyState truth = solve_steady_state(*net, sc.h1_topology);
    TopologyState h0 = canonical_orientation(*net, sc.h0_topology, solve_steady_state(*net, sc.h0_topology));
    ObservationSet obs = generate_observations(truth, noise, T_a, sc.seed, run_index, plc);
    VerifyContext ctx{net.get(), plc, noise, &obs, {}};
    double thr = asymptotic_threshold(*net, sc.p_fa);
    double eps = chi2_isf(sc.p_fa, net->L() + net->N());
    VerificationReport rep = efficient_verify(ctx, h0, eps, thr, sc.flip_pipes);
    std::cout << "scenario: " << sc.name << "  T_a=" << T_a << "\n"
              << "decision: " << (rep.decide_h1 ? "H1 (topology changed)" : "H0 (verified)") << "\n"
              << "statistic: " << rep.statistic << "  threshold: " << rep.threshold << "\n"
              << "fitness: " << rep.fitness_value << (rep.fitness_triggered ? " (triggered)" : "")
              << "\n"
              << "estimated topology: " << topo_str(rep.estimated_topology) << "\n"
              << "sdp solves: " << rep.sdp_solves << "\n";
    std::cout << "search path:\n";
    for (const auto& v : rep.search_path)
        std::cout << "  " << topo_str(v.topo) << "  xi=" << v.xi << " rank=" << v.rank
                  << (v.exact ? " exact" : "") << "\n";
    return rep.decide_h1 ? 2 : 0;
}

int cmd_predict(const std::string& file, const std::string& networks, const std::string& out) {
    std::unique_ptr<GasNetwork> net;
    Scenario sc = load_scenario_with_network(file, networks, net);
    CsvWriter csv(out, {"scenario", "T_a", "lambda_wald", "lambda_ccrb", "lambda_gap", "dof",
                        "rho", "predicted_pd", "required_Ta_floor", "required_Ta_ceil"});
    for (int T_a : sc.T_a) {
        CasePrediction pr = predict_case(*net, sc, T_a);
        double lam_ps = pr.lambda_wald / T_a;
        RequiredObservations ro = required_observations(lam_ps, 0.999, sc.p_fa, pr.dof);
        csv.row({sc.name, std::to_string(T_a), CsvWriter::num(pr.lambda_wald),
                 CsvWriter::num(pr.lambda_ccrb), CsvWriter::num(pr.lambda_gap),
                 std::to_string(pr.dof), CsvWriter::num(pr.rho), CsvWriter::num(pr.pd),
                 std::to_string(ro.floor_value), std::to_string(ro.ceil_value)});
        std::cout << sc.name << " T_a=" << T_a << " lambda=" << pr.lambda_wald
                  << " Pd=" << pr.pd << " required_Ta=" << ro.floor_value << "\n";
    }
    return 0;
}

int cmd_lambda_sweep(const std::string& file, const std::string& networks,
                     const std::string& out, int t_min, int t_max, int t_step) {
    std::unique_ptr<GasNetwork> net;
    Scenario sc = load_scenario_with_network(file, networks, net);
    CsvWriter csv(out, {"scenario", "T_a", "lambda_wald", "lambda_ccrb", "predicted_pd"});
    for (int T_a = t_min; T_a <= t_max; T_a += t_step) {
        CasePrediction pr = predict_case(*net, sc, T_a);
        csv.row({sc.name, std::to_string(T_a), CsvWriter::num(pr.lambda_wald),
                 CsvWriter::num(pr.lambda_ccrb), CsvWriter::num(pr.pd)});
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_calibrate(const std::string& file, const std::string& networks, int runs, int workers) {
    std::unique_ptr<GasNetwork> net;
    Scenario sc = load_scenario_with_network(file, networks, net);
    McOptions mc;
    mc.workers = workers;
    for (int T_a : sc.T_a) {
        Calibration cal = calibrate_threshold(*net, sc, T_a, runs > 0 ? runs : sc.runs, mc);
        std::cout << sc.name << " T_a=" << T_a << " calibrated=" << cal.calibrated
                  << " asymptotic=" << cal.asymptotic << " runs=" << cal.runs << "\n";
    }
    return 0;
}

int cmd_place(const std::string& network_file, const std::string& costs_file,
              const std::string& out, bool with_oracle) {
    GasNetwork net = load_network(network_file);
    PlacementCosts costs;
    if (costs_file.empty()) {
        costs.d_p = Vec::Ones(net.N());
        costs.d_q = Vec::Ones(net.N());
        costs.d_F = Vec::Ones(net.L_fixed());
        costs.d_C = Vec::Ones(net.L_changeable());
    } else {
        std::ifstream in(costs_file);
        if (!in) throw NetworkError("cannot open " + costs_file);
        nlohmann::json j;
        in >> j;
        auto vec = [&](const char* key, Index n) {
            Vec v(n);
            const auto& a = j.at(key);
            for (Index i = 0; i < n; ++i) v[i] = a[static_cast<size_t>(i)].get<double>();
            return v;
        };
        costs.d_p = vec("d_p", net.N());
        costs.d_q = vec("d_q", net.N());
        costs.d_F = vec("d_F", net.L_fixed());
        costs.d_C = vec("d_C", net.L_changeable());
    }
    GreedyResult g = greedy_placement(net, costs);
    std::cout << "greedy cost: " << g.cost << " (checks " << g.checks_performed << ")\n";
    if (with_oracle) {
        OracleResult o = exhaustive_placement(net, costs);
        std::cout << "oracle cost: " << o.cost << "  ratio: " << g.cost / o.cost << "\n";
    }
    CsvWriter csv(out, {"sensor", "index", "employed"});
    for (int n = 0; n < net.N(); ++n)
        csv.row({"pressure", std::to_string(n + 1), g.placement.delta_p[n] > 0 ? "1" : "0"});
    for (int n = 0; n < net.N(); ++n)
        csv.row({"injection", std::to_string(n + 1), g.placement.delta_q[n] > 0 ? "1" : "0"});
    for (int l = 0; l < net.L_fixed(); ++l)
        csv.row({"flow_fixed", std::to_string(l + 1), g.placement.delta_F[l] > 0 ? "1" : "0"});
    for (int k = 0; k < net.L_changeable(); ++k)
        csv.row({"flow_changeable", std::to_string(k + 1), g.placement.delta_C[k] > 0 ? "1" : "0"});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Natural gas network topology verification"};
    app.require_subcommand(1);
    std::string networks = "networks";
    app.add_option("--networks", networks, "directory with network definition files");
    int workers = 0;
    app.add_option("--workers", workers, "worker threads (default: GASNET_WORKERS or 1)");

    auto* sim = app.add_subcommand("simulate", "Monte-Carlo experiment grid");
    std::vector<std::string> sim_files;
    std::string sim_out = "out";
    sim->add_option("--config", sim_files, "scenario files")->required();
    sim->add_option("--out", sim_out, "output directory");

    auto* rep = app.add_subcommand("reproduce", "alias of simulate for the shipped grids");
    std::vector<std::string> rep_files;
    std::string rep_out = "out";
    rep->add_option("--config", rep_files, "scenario files")->required();
    rep->add_option("--out", rep_out, "output directory");

    auto* ver = app.add_subcommand("verify", "single verification decision");
    std::string ver_file;
    int ver_ta = 0;
    uint64_t ver_run = 0;
    ver->add_option("--config", ver_file, "scenario file")->required();
    ver->add_option("--T_a", ver_ta, "observation count override");
    ver->add_option("--run", ver_run, "run index (seed offset)");

    auto* pre = app.add_subcommand("predict", "closed-form performance prediction");
    std::string pre_file, pre_out = "predict.csv";
    pre->add_option("--config", pre_file, "scenario file")->required();
    pre->add_option("--out", pre_out, "output CSV");

    auto* swp = app.add_subcommand("lambda-sweep", "lambda and Pd versus T_a");
    std::string swp_file, swp_out = "lambda_sweep.csv";
    int swp_min = 10, swp_max = 200, swp_step = 10;
    swp->add_option("--config", swp_file, "scenario file")->required();
    swp->add_option("--out", swp_out, "output CSV");
    swp->add_option("--min", swp_min, "smallest T_a");
    swp->add_option("--max", swp_max, "largest T_a");
    swp->add_option("--step", swp_step, "grid step");

    auto* cal = app.add_subcommand("calibrate", "Monte-Carlo threshold calibration");
    std::string cal_file;
    int cal_runs = 0;
    cal->add_option("--config", cal_file, "scenario file")->required();
    cal->add_option("--runs", cal_runs, "calibration runs");

    auto* plc = app.add_subcommand("place", "sensor placement search");
    std::string plc_net, plc_costs, plc_out = "placement.csv";
    bool plc_oracle = false;
    plc->add_option("--network", plc_net, "network file")->required();
    plc->add_option("--costs", plc_costs, "costs file (JSON)");
    plc->add_option("--out", plc_out, "output CSV");
    plc->add_flag("--oracle", plc_oracle, "also run the exhaustive oracle");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sim) return cmd_simulate(sim_files, networks, sim_out, workers);
        if (*rep) return cmd_simulate(rep_files, networks, rep_out, workers);
        if (*ver) return cmd_verify(ver_file, networks, ver_ta, ver_run);
        if (*pre) return cmd_predict(pre_file, networks, pre_out);
        if (*swp) return cmd_lambda_sweep(swp_file, networks, swp_out, swp_min, swp_max, swp_step);
        if (*cal) return cmd_calibrate(cal_file, networks, cal_runs, workers);
        if (*plc) return cmd_place(plc_net, plc_costs, plc_out, plc_oracle);
    } catch (const std::exception& e) {
        std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
        return 1;
    }
    return 0;
}
