#pragma once

#include "gasnet/sdr.hpp"

namespace gasnet {

struct VisitedTopology {
    TopologyState topo;
    double xi = 0.0;        // relaxed ML value
    double deviance = 0.0;  // mean-misfit deviance
    bool exact = false;
    int rank = 0;
};

struct VerificationReport {
    bool decide_h1 = false;
    double statistic = 0.0;       // deviance scale: 2 (max xi - xi(A_H0))
    double threshold = 0.0;       // ln rho
    double fitness_value = 0.0;
    bool fitness_triggered = false;
    TopologyState estimated_topology;
    std::vector<VisitedTopology> search_path;
    int sdp_solves = 0;
    bool all_rank_one = true;
};

/// All 2^{L_C} open/closed patterns, optionally crossed with single
/// orientation flips of the listed pipelines; deduplicated, normalized.
std::vector<TopologyState> enumerate_topologies(const GasNetwork& net,
                                                const std::vector<int>& flip_pipes = {},
                                                int cap = 12);

struct VerifyContext {
    const GasNetwork* net = nullptr;
    SensorPlacement placement;
    NoiseModel noise;
    const ObservationSet* obs = nullptr;
    SdpOptions sdp;
};

/// xi(A) and diagnostics for one candidate topology.
VisitedTopology evaluate_candidate(const VerifyContext& ctx, const TopologyState& topo);

/// Relaxed GLRT over an explicit candidate set (A_H0 excluded from it).
VerificationReport relaxed_glrt(const VerifyContext& ctx, const TopologyState& A_H0,
                                const std::vector<TopologyState>& candidates,
                                double threshold);

/// Standard GLRT: same decision rule with the nonconvex constrained ML as
/// the per-topology oracle.
VerificationReport standard_glrt(const VerifyContext& ctx, const TopologyState& A_H0,
                                 const std::vector<TopologyState>& candidates,
                                 double threshold);

struct FitnessResult {
    bool triggered = false;
    double value = 0.0;  // mean-misfit deviance of the H0 fit
    VisitedTopology h0;
};

/// Step 1 of the efficient algorithm: H0 model misfit against epsilon.
FitnessResult fitness_test(const VerifyContext& ctx, const TopologyState& A_H0,
                           double epsilon);

struct SearchResult {
    TopologyState best;
    double best_xi = 0.0;
    double best_deviance = 0.0;
    std::vector<VisitedTopology> path;
    int sdp_solves = 0;
};

/// Greedy ascent on xi(A) over one-link neighbors (state toggles plus
/// configured orientation flips); deterministic tie-breaking.
SearchResult gradient_guided_search(const VerifyContext& ctx, const TopologyState& A_H0,
                                    const std::vector<int>& flip_pipes);

/// Step 1 + Step 2 composition.
VerificationReport efficient_verify(const VerifyContext& ctx, const TopologyState& A_H0,
                                    double epsilon, double threshold,
                                    const std::vector<int>& flip_pipes);

/// Point-null Wald verification: unconstrained GLS fit against the believed
/// steady state, full-FIM quadratic form. Exactly chi2(L+N) under H0.
struct WaldReport {
    bool decide_h1 = false;
    double statistic = 0.0;
    double threshold = 0.0;
};
WaldReport wald_verify(const VerifyContext& ctx, const TopologyState& A_H0,
                       const SteadyState& believed, double threshold);

/// chi2(L+N) upper quantile at p_fa (the asymptotic "ln rho").
double asymptotic_threshold(const GasNetwork& net, double p_fa);

}  // namespace gasnet
