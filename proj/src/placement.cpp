#include "gasnet/placement.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace gasnet {

RankCondition placement_rank_condition(const GasNetwork& net,
                                       const SensorPlacement& placement,
                                       const NoiseModel& noise) {
    const int N = net.N(), L = net.L();
    TopologyState open = TopologyState::all_open(net);
    IncidenceSet inc = build_incidence(net, open);
    const Vec c = net.c();
    Mat W = inc.B.transpose() * c.cwiseInverse().asDiagonal();  // N x L (B' diag^-1(c))
    Vec dphi = placement.delta_phi();
    Mat K = Mat::Zero(N, N);
    const double isf2 = noise.sigma_phi > 0 ? 1.0 / (noise.sigma_phi * noise.sigma_phi) : 0.0;
    const double isq2 = noise.sigma_q > 0 ? 1.0 / (noise.sigma_q * noise.sigma_q) : 0.0;
    const double isp2 = noise.sigma_p > 0 ? 1.0 / (noise.sigma_p * noise.sigma_p) : 0.0;
    if (dphi.sum() > 0) K += isf2 * W * dphi.asDiagonal() * W.transpose();
    if (placement.delta_q.sum() > 0)
        K += isq2 * W * inc.A * placement.delta_q.asDiagonal() * inc.A.transpose() * W.transpose();
    K += isp2 * Mat(placement.delta_p.asDiagonal());
    Eigen::SelfAdjointEigenSolver<Mat> es(K, Eigen::EigenvaluesOnly);
    double emax = es.eigenvalues().cwiseAbs().maxCoeff();
    RankCondition rc;
    rc.required = N;
    rc.rank = 0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] > 1e-10 * std::max(1.0, emax)) ++rc.rank;
    rc.proper = rc.rank == N;
    return rc;
}

double placement_cost(const SensorPlacement& placement, const PlacementCosts& costs) {
    return placement.delta_p.dot(costs.d_p) + placement.delta_q.dot(costs.d_q) +
           placement.delta_F.dot(costs.d_F) + placement.delta_C.dot(costs.d_C);
}

namespace {

struct SensorRef {
    int type;   // 0 = p, 1 = q, 2 = F, 3 = C
    int index;
    double cost;
};

double* slot(SensorPlacement& plc, const SensorRef& s) {
    switch (s.type) {
        case 0: return &plc.delta_p[s.index];
        case 1: return &plc.delta_q[s.index];
        case 2: return &plc.delta_F[s.index];
        default: return &plc.delta_C[s.index];
    }
}

double get(const SensorPlacement& plc, const SensorRef& s) {
    switch (s.type) {
        case 0: return plc.delta_p[s.index];
        case 1: return plc.delta_q[s.index];
        case 2: return plc.delta_F[s.index];
        default: return plc.delta_C[s.index];
    }
}

std::vector<SensorRef> all_sensors(const GasNetwork& net, const PlacementCosts& costs) {
    std::vector<SensorRef> v;
    for (int n = 0; n < net.N(); ++n) v.push_back({0, n, costs.d_p[n]});
    for (int n = 0; n < net.N(); ++n) v.push_back({1, n, costs.d_q[n]});
    for (int l = 0; l < net.L_fixed(); ++l) v.push_back({2, l, costs.d_F[l]});
    for (int k = 0; k < net.L_changeable(); ++k) v.push_back({3, k, costs.d_C[k]});
    return v;
}

}  // namespace

GreedyResult greedy_placement(const GasNetwork& net, const PlacementCosts& costs,
                              const NoiseModel& noise) {
    GreedyResult res;
    res.placement = SensorPlacement::all_pressure(net);
    res.checks_performed = 0;
    auto sensors = all_sensors(net, costs);
    bool improved = true;
    while (improved) {
        improved = false;
        // employed sensors, most expensive first
        std::vector<SensorRef> in, out;
        SensorPlacement& plc = res.placement;
        for (const auto& s : sensors) {
            if (get(plc, s) > 0) in.push_back(s);
            else out.push_back(s);
        }
        std::stable_sort(in.begin(), in.end(),
                         [](const SensorRef& a, const SensorRef& b) { return a.cost > b.cost; });
        std::stable_sort(out.begin(), out.end(),
                         [](const SensorRef& a, const SensorRef& b) { return a.cost < b.cost; });
        for (const auto& rem : in) {
            bool done = false;
            for (const auto& add : out) {
                if (add.cost >= rem.cost) break;  // sorted: no cheaper swap left
                SensorPlacement cand = plc;
                *slot(cand, rem) = 0.0;
                *slot(cand, add) = 1.0;
                ++res.checks_performed;
                if (placement_rank_condition(net, cand, noise).proper) {
                    plc = cand;
                    improved = true;
                    done = true;
                    break;
                }
            }
            if (done) break;
        }
    }
    res.cost = placement_cost(res.placement, costs);
    return res;
}

OracleResult exhaustive_placement(const GasNetwork& net, const PlacementCosts& costs,
                                  const NoiseModel& noise, long node_cap) {
    auto sensors = all_sensors(net, costs);
    std::sort(sensors.begin(), sensors.end(),
              [](const SensorRef& a, const SensorRef& b) { return a.cost < b.cost; });
    const int total = static_cast<int>(sensors.size());
    const int need = net.N();
    // suffix sums of the cheapest costs for the lower bound
    std::vector<double> prefix(static_cast<size_t>(total) + 1, 0.0);
    for (int i = 0; i < total; ++i)
        prefix[static_cast<size_t>(i) + 1] = prefix[static_cast<size_t>(i)] + sensors[static_cast<size_t>(i)].cost;

    OracleResult best;
    {
        GreedyResult g = greedy_placement(net, costs, noise);
        best.placement = g.placement;
        best.cost = g.cost;
    }
    long nodes = 0;
    SensorPlacement cur = SensorPlacement::none(net);
    bool aborted = false;

    // depth-first include/exclude in ascending cost order
    std::function<void(int, int, double)> rec = [&](int idx, int count, double cost) {
        if (aborted) return;
        if (++nodes > node_cap) {
            aborted = true;
            return;
        }
        if (cost >= best.cost - 1e-12) return;
        if (count >= need) {
            ++best.checks_performed;
            if (placement_rank_condition(net, cur, noise).proper) {
                best.cost = cost;
                best.placement = cur;
                return;  // supersets only cost more
            }
        }
        if (idx >= total) return;
        int remaining_needed = std::max(0, need - count);
        if (idx + remaining_needed > total) return;
        // cheapest possible completion
        double lb = cost;
        if (remaining_needed > 0)
            lb += prefix[static_cast<size_t>(idx + remaining_needed)] - prefix[static_cast<size_t>(idx)];
        if (lb >= best.cost - 1e-12) return;
        // include sensors[idx]
        const auto& s = sensors[static_cast<size_t>(idx)];
        SensorPlacement saved = cur;
        *slot(cur, s) = 1.0;
        rec(idx + 1, count + 1, cost + s.cost);
        cur = saved;
        // exclude
        rec(idx + 1, count, cost);
    };
    rec(0, 0, 0.0);
    best.exhausted = !aborted;
    return best;
}

}  // namespace gasnet
