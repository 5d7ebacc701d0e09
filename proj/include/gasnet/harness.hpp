#pragma once

#include "gasnet/asymptotics.hpp"
#include "gasnet/io.hpp"
#include "gasnet/verify.hpp"

namespace gasnet {

struct CasePrediction {
    double lambda_wald = 0.0;      // exact Wald noncentrality at this T_a
    double lambda_ccrb = 0.0;      // Eq.-51 tangent-space quadratic form
    double lambda_gap = 0.0;       // population deviance gap of the GLRT
    int dof = 0;                   // measurement-map rank (wald test dof)
    double rho = 0.0;              // chi2 threshold at p_fa
    double pd = 0.0;               // ncx2 survival prediction
};

CasePrediction predict_case(const GasNetwork& net, const Scenario& sc, int T_a);

struct RunOutcome {
    bool decide_h1 = false;
    bool topo_states_correct = false;   // open/closed pattern matches truth
    bool topo_signed_correct = false;   // including orientations
    bool fitness_triggered = false;
    bool all_rank_one = true;
    bool exactness_holds = false;
    double statistic = 0.0;
    int sdp_solves = 0;
    double seconds = 0.0;
};

struct ExperimentResult {
    std::string scenario;
    std::string algorithm;
    int T_a = 0;
    int runs = 0;
    double empirical_pd = 0.0;
    double pd_ci_half_width = 0.0;     // 95% binomial
    double empirical_pfa = 0.0;        // from the H0 pass (if run)
    int runs_h0 = 0;
    double predicted_pd = 0.0;
    CasePrediction prediction;
    double rank_one_fraction = 0.0;
    double exactness_fraction = 0.0;
    double prob_states_correct = 0.0;  // Pr(Ahat = A_H1), open/closed pattern
    double prob_signed_correct = 0.0;
    double pd_given_correct = 0.0;     // Eq.-63 style decomposition terms
    double pd_given_wrong = 0.0;
    double fitness_rate = 0.0;
    double mean_sdp_solves = 0.0;
    double seconds_per_run = 0.0;
    double threshold = 0.0;
};

struct McOptions {
    int workers = 0;          // 0 = env GASNET_WORKERS or 1
    bool run_h0_pass = true;  // also estimate the false-alarm rate
    int h0_runs = 0;          // 0 = same as runs
};

/// Monte-Carlo quantile of the H0 statistic at 1 - p_fa (the calibrated
/// threshold); also returns the asymptotic chi-squared threshold.
struct Calibration {
    double calibrated = 0.0;
    double asymptotic = 0.0;
    int runs = 0;
    std::vector<double> h0_statistics;
};

Calibration calibrate_threshold(const GasNetwork& net, const Scenario& sc, int T_a,
                                int runs, const McOptions& mc = {});

ExperimentResult run_monte_carlo(const GasNetwork& net, const Scenario& sc, int T_a,
                                 const McOptions& mc = {});

/// Runs the scenario grid and writes per-figure CSV files under out_dir.
void reproduce_tables(const std::vector<std::filesystem::path>& scenario_files,
                      const std::filesystem::path& networks_dir,
                      const std::filesystem::path& out_dir, const McOptions& mc = {});

int worker_count_from_env();

/// Deterministic parallel map over run indices (order-independent reduce).
void parallel_runs(int runs, int workers, const std::function<void(int)>& body);

}  // namespace gasnet
