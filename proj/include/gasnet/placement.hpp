#pragma once

#include "gasnet/sensing.hpp"

namespace gasnet {

struct PlacementCosts {
    Vec d_p;  // N
    Vec d_q;  // N
    Vec d_F;  // L_F
    Vec d_C;  // L_C
};

struct RankCondition {
    bool proper = false;
    int rank = 0;
    int required = 0;  // N
};

/// Theorem-style check on the all-changeable-open topology:
/// rank[ Utilde' J(A_open) Utilde ] == N, with Utilde = [I; -B' diag^-1(c)]
/// evaluated through the explicit weighted-Laplacian sum.
RankCondition placement_rank_condition(const GasNetwork& net,
                                       const SensorPlacement& placement,
                                       const NoiseModel& noise = {1.0, 1.0, 1.0});

double placement_cost(const SensorPlacement& placement, const PlacementCosts& costs);

struct GreedyResult {
    SensorPlacement placement;
    double cost = 0.0;
    int checks_performed = 0;
};

/// Start from pressure sensors everywhere; repeatedly swap one sensor for a
/// cheaper one while keeping the rank condition; deterministic order.
GreedyResult greedy_placement(const GasNetwork& net, const PlacementCosts& costs,
                              const NoiseModel& noise = {1.0, 1.0, 1.0});

struct OracleResult {
    SensorPlacement placement;
    double cost = 0.0;
    long checks_performed = 0;
    bool exhausted = true;
};

/// Minimum-cost proper placement by branch-and-bound over sensor subsets
/// (placements with fewer than N sensors cannot be proper and are pruned).
OracleResult exhaustive_placement(const GasNetwork& net, const PlacementCosts& costs,
                                  const NoiseModel& noise = {1.0, 1.0, 1.0},
                                  long node_cap = 50000000);

}  // namespace gasnet
