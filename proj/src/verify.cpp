#include "gasnet/verify.hpp"

#include "gasnet/distributions.hpp"

#include <algorithm>
#include <set>

namespace gasnet {

namespace {

std::vector<int> signature(const GasNetwork& net, const TopologyState& t) {
    std::vector<int> sig;
    sig.reserve(t.closed.size() + t.orientation.size());
    for (bool c : t.closed) sig.push_back(c ? 1 : 0);
    for (int o : t.orientation) sig.push_back(o);
    return sig;
}

}  // namespace

std::vector<TopologyState> enumerate_topologies(const GasNetwork& net,
                                                const std::vector<int>& flip_pipes,
                                                int cap) {
    const int lc = net.L_changeable();
    if (lc > cap) throw NetworkError("changeable pipeline count exceeds enumeration cap");
    std::vector<TopologyState> out;
    std::set<std::vector<int>> seen;
    const auto ci = net.changeable_indices();
    for (unsigned mask = 0; mask < (1u << lc); ++mask) {
        TopologyState base = TopologyState::all_closed(net);
        for (int k = 0; k < lc; ++k) base.closed[static_cast<size_t>(k)] = (mask >> k) & 1u;
        std::vector<std::vector<int>> flip_choices;
        flip_choices.push_back({});
        for (int fp : flip_pipes) flip_choices.push_back({fp});
        for (const auto& fl : flip_choices) {
            TopologyState t = base;
            bool skip = false;
            for (int fp : fl) {
                const auto& pipe = net.pipeline(fp);
                if (pipe.kind == PipeKind::Changeable) {
                    auto it = std::find(ci.begin(), ci.end(), fp);
                    size_t k = static_cast<size_t>(it - ci.begin());
                    if (!t.closed[k]) skip = true;  // flip of an open pipe is a no-op
                }
                t.orientation[static_cast<size_t>(fp)] = -1;
            }
            if (skip) continue;
            t.normalize(net);
            if (seen.insert(signature(net, t)).second) out.push_back(t);
        }
    }
    return out;
}

VisitedTopology evaluate_candidate(const VerifyContext& ctx, const TopologyState& topo) {
    LikelihoodModel model(*ctx.net, topo, ctx.placement, ctx.noise);
    model.set_observations(*ctx.obs);
    SdpSolution sol = relaxed_ml(model, ctx.sdp);
    VisitedTopology v;
    v.topo = topo;
    v.topo.normalize(*ctx.net);
    v.xi = sol.value;
    v.deviance = sol.deviance;
    v.exact = sol.exact;
    v.rank = sol.rank_thresholded;
    return v;
}

namespace {

VerificationReport glrt_impl(const VerifyContext& ctx, const TopologyState& A_H0,
                             const std::vector<TopologyState>& candidates,
                             double threshold, bool relaxed) {
    if (candidates.empty()) throw NetworkError("empty candidate set");
    VerificationReport rep;
    rep.threshold = threshold;

    auto eval = [&](const TopologyState& t) -> VisitedTopology {
        if (relaxed) return evaluate_candidate(ctx, t);
        LikelihoodModel model(*ctx.net, t, ctx.placement, ctx.noise);
        model.set_observations(*ctx.obs);
        // multi-start: the relaxed-ML recovery seeds the nonconvex solver
        SdpSolution sol = relaxed_ml(model, ctx.sdp);
        MlResult ml = model.constrained_ml({sol.omega_bar});
        VisitedTopology v;
        v.topo = t;
        v.topo.normalize(*ctx.net);
        v.xi = ml.value;
        v.deviance = ml.deviance;
        v.exact = ml.converged;
        v.rank = 1;
        return v;
    };

    VisitedTopology h0 = eval(A_H0);
    rep.fitness_value = h0.deviance;
    rep.search_path.push_back(h0);
    rep.sdp_solves = 1;
    double best = -std::numeric_limits<double>::infinity();
    TopologyState best_topo = A_H0;
    TopologyState h0n = A_H0;
    h0n.normalize(*ctx.net);
    for (const auto& cand : candidates) {
        TopologyState cn = cand;
        cn.normalize(*ctx.net);
        if (cn == h0n) continue;
        VisitedTopology v = eval(cand);
        rep.search_path.push_back(v);
        rep.sdp_solves += 1;
        rep.all_rank_one = rep.all_rank_one && v.rank == 1;
        if (v.xi > best) {
            best = v.xi;
            best_topo = v.topo;
        }
    }
    rep.all_rank_one = rep.all_rank_one && h0.rank == 1;
    rep.statistic = 2.0 * (best - h0.xi);
    rep.decide_h1 = rep.statistic > threshold;
    rep.estimated_topology = rep.decide_h1 ? best_topo : h0n;
    return rep;
}

}  // namespace

VerificationReport relaxed_glrt(const VerifyContext& ctx, const TopologyState& A_H0,
                                const std::vector<TopologyState>& candidates,
                                double threshold) {
    return glrt_impl(ctx, A_H0, candidates, threshold, true);
}

VerificationReport standard_glrt(const VerifyContext& ctx, const TopologyState& A_H0,
                                 const std::vector<TopologyState>& candidates,
                                 double threshold) {
    return glrt_impl(ctx, A_H0, candidates, threshold, false);
}

FitnessResult fitness_test(const VerifyContext& ctx, const TopologyState& A_H0,
                           double epsilon) {
    if (epsilon <= 0) throw NetworkError("fitness threshold must be positive");
    FitnessResult f;
    f.h0 = evaluate_candidate(ctx, A_H0);
    // inf Tr(M X)/2 over the H0 constraint set, with the hypothesis-free
    // within-sample scatter removed: half the mean-misfit deviance
    f.value = 0.5 * f.h0.deviance;
    f.triggered = f.value > epsilon;
    return f;
}

namespace {

std::vector<TopologyState> one_link_neighbors(const GasNetwork& net,
                                              const TopologyState& t,
                                              const std::vector<int>& flip_pipes) {
    std::vector<TopologyState> out;
    const auto ci = net.changeable_indices();
    for (size_t k = 0; k < t.closed.size(); ++k) {
        TopologyState n = t;
        n.closed[k] = !n.closed[k];
        n.normalize(net);
        out.push_back(n);
    }
    for (int fp : flip_pipes) {
        const auto& pipe = net.pipeline(fp);
        if (pipe.kind == PipeKind::Changeable) {
            auto it = std::find(ci.begin(), ci.end(), fp);
            size_t k = static_cast<size_t>(it - ci.begin());
            if (!t.closed[k]) continue;
        }
        TopologyState n = t;
        n.orientation[static_cast<size_t>(fp)] = -n.orientation[static_cast<size_t>(fp)];
        n.normalize(net);
        out.push_back(n);
    }
    return out;
}

}  // namespace

SearchResult gradient_guided_search(const VerifyContext& ctx, const TopologyState& A_H0,
                                    const std::vector<int>& flip_pipes) {
    SearchResult sr;
    std::set<std::vector<int>> visited;
    TopologyState cur = A_H0;
    cur.normalize(*ctx.net);
    VisitedTopology vc = evaluate_candidate(ctx, cur);
    sr.sdp_solves = 1;
    sr.path.push_back(vc);
    visited.insert(signature(*ctx.net, cur));
    double cur_xi = vc.xi;
    sr.best = cur;
    sr.best_xi = cur_xi;
    sr.best_deviance = vc.deviance;
    while (true) {
        auto neigh = one_link_neighbors(*ctx.net, cur, flip_pipes);
        double best_xi = cur_xi;
        int best_i = -1;
        std::vector<VisitedTopology> evals;
        for (size_t i = 0; i < neigh.size(); ++i) {
            if (visited.count(signature(*ctx.net, neigh[i]))) continue;
            VisitedTopology v = evaluate_candidate(ctx, neigh[i]);
            sr.sdp_solves += 1;
            visited.insert(signature(*ctx.net, neigh[i]));
            sr.path.push_back(v);
            if (v.xi > best_xi) {
                best_xi = v.xi;
                best_i = static_cast<int>(i);
            }
        }
        if (best_i < 0) break;  // strict-ascent local maximum
        cur = neigh[static_cast<size_t>(best_i)];
        cur_xi = best_xi;
        if (best_xi > sr.best_xi) {
            sr.best = cur;
            sr.best_xi = best_xi;
            for (const auto& v : sr.path)
                if (v.topo == cur) sr.best_deviance = v.deviance;
        }
    }
    return sr;
}

VerificationReport efficient_verify(const VerifyContext& ctx, const TopologyState& A_H0,
                                    double epsilon, double threshold,
                                    const std::vector<int>& flip_pipes) {
    VerificationReport rep;
    rep.threshold = threshold;
    FitnessResult fit = fitness_test(ctx, A_H0, epsilon);
    rep.fitness_value = fit.value;
    rep.fitness_triggered = fit.triggered;
    rep.search_path.push_back(fit.h0);
    rep.sdp_solves = 1;
    rep.all_rank_one = fit.h0.rank == 1;
    if (fit.triggered) {
        rep.decide_h1 = true;
        rep.statistic = std::numeric_limits<double>::infinity();
        rep.estimated_topology = fit.h0.topo;  // unresolved: short-circuited
        return rep;
    }
    SearchResult sr = gradient_guided_search(ctx, A_H0, flip_pipes);
    rep.sdp_solves += sr.sdp_solves - 1;  // H0 evaluated once already
    for (const auto& v : sr.path) {
        rep.all_rank_one = rep.all_rank_one && v.rank == 1;
        rep.search_path.push_back(v);
    }
    TopologyState h0n = A_H0;
    h0n.normalize(*ctx.net);
    double best_other = -std::numeric_limits<double>::infinity();
    TopologyState best_topo = h0n;
    for (const auto& v : sr.path) {
        if (v.topo == h0n) continue;
        if (v.xi > best_other) {
            best_other = v.xi;
            best_topo = v.topo;
        }
    }
    rep.statistic = 2.0 * (best_other - fit.h0.xi);
    rep.decide_h1 = rep.statistic > threshold;
    rep.estimated_topology = rep.decide_h1 ? best_topo : h0n;
    return rep;
}

WaldReport wald_verify(const VerifyContext& ctx, const TopologyState& A_H0,
                       const SteadyState& believed, double threshold) {
    LikelihoodModel model(*ctx.net, A_H0, ctx.placement, ctx.noise);
    model.set_observations(*ctx.obs);
    Vec w = model.unconstrained_fit();
    const int N = ctx.net->N(), L = ctx.net->L();
    TopologyState t = A_H0;
    t.normalize(*ctx.net);
    Vec omega0(N + L);
    omega0.head(N) = believed.p;
    omega0.tail(L) = believed.phi;
    for (int l = 0; l < L; ++l)
        omega0[N + l] *= t.orientation[static_cast<size_t>(l)];
    Vec d = w - omega0;
    WaldReport rep;
    // J = Ta G'G for the H0 model
    rep.statistic = model.T_a() * (model.G() * d).squaredNorm();
    rep.threshold = threshold;
    rep.decide_h1 = rep.statistic > threshold;
    return rep;
}

double asymptotic_threshold(const GasNetwork& net, double p_fa) {
    return chi2_isf(p_fa, net.L() + net.N());
}

}  // namespace gasnet
