#include "gasnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace gasnet {

GasNetwork::GasNetwork(std::string name, int node_count, double reference_pressure,
                       std::vector<Pipeline> pipelines, Vec injections)
    : name_(std::move(name)),
      node_count_(node_count),
      p0_(reference_pressure),
      pipes_(std::move(pipelines)),
      q_(std::move(injections)) {
    if (node_count_ < 2) throw NetworkError("network needs at least two nodes");
    if (p0_ <= 0) throw NetworkError("reference pressure must be positive");
    if (q_.size() != node_count_ - 1)
        throw NetworkError("injection vector must cover nodes 1..N");
    bool seen_changeable = false;
    bool touches_ref = false;
    for (const auto& p : pipes_) {
        if (p.from_node == p.to_node) throw NetworkError("self-loop pipeline " + p.id);
        if (p.from_node < 0 || p.from_node >= node_count_ || p.to_node < 0 ||
            p.to_node >= node_count_)
            throw NetworkError("pipeline endpoint out of range: " + p.id);
        if (p.c <= 0) throw NetworkError("characteristic value must be positive: " + p.id);
        if (p.alpha <= 0) throw NetworkError("compressor ratio must be positive: " + p.id);
        if (p.kind == PipeKind::Changeable) seen_changeable = true;
        else if (seen_changeable)
            throw NetworkError("fixed pipelines must precede changeable ones");
        if (p.from_node == 0 || p.to_node == 0) touches_ref = true;
    }
    if (!touches_ref) throw NetworkError("reference node not connected");
    lf_ = 0;
    for (const auto& p : pipes_)
        if (p.kind == PipeKind::Fixed) ++lf_;
}

Vec GasNetwork::c() const {
    Vec v(L());
    for (Index l = 0; l < v.size(); ++l) v[l] = pipes_[static_cast<size_t>(l)].c;
    return v;
}

Vec GasNetwork::alpha() const {
    Vec v(L());
    for (Index l = 0; l < v.size(); ++l) v[l] = pipes_[static_cast<size_t>(l)].alpha;
    return v;
}

std::vector<int> GasNetwork::changeable_indices() const {
    std::vector<int> out;
    for (int l = 0; l < L(); ++l)
        if (pipes_[static_cast<size_t>(l)].kind == PipeKind::Changeable) out.push_back(l);
    return out;
}

TopologyState TopologyState::all_closed(const GasNetwork& net) {
    TopologyState t;
    t.closed.assign(static_cast<size_t>(net.L_changeable()), true);
    t.orientation.assign(static_cast<size_t>(net.L()), 1);
    return t;
}

TopologyState TopologyState::all_open(const GasNetwork& net) {
    TopologyState t = all_closed(net);
    t.closed.assign(t.closed.size(), false);
    return t;
}

void TopologyState::normalize(const GasNetwork& net) {
    if (orientation.empty()) orientation.assign(static_cast<size_t>(net.L()), 1);
    auto ci = net.changeable_indices();
    for (size_t k = 0; k < ci.size(); ++k)
        if (!closed[k]) orientation[static_cast<size_t>(ci[k])] = 1;
}

IncidenceSet build_incidence(const GasNetwork& net, const TopologyState& topo) {
    const int L = net.L(), N = net.N();
    if (static_cast<int>(topo.closed.size()) != net.L_changeable())
        throw NetworkError("topology state size mismatch");
    if (!topo.orientation.empty() && static_cast<int>(topo.orientation.size()) != L)
        throw NetworkError("orientation size mismatch");
    IncidenceSet inc;
    inc.a = Vec::Zero(L);
    inc.A = Mat::Zero(L, N);
    inc.active.assign(static_cast<size_t>(L), true);
    int ci = 0;
    for (int l = 0; l < L; ++l) {
        const auto& pipe = net.pipeline(l);
        if (pipe.kind == PipeKind::Changeable) {
            if (!topo.closed[static_cast<size_t>(ci++)]) {
                inc.active[static_cast<size_t>(l)] = false;
                continue;
            }
        }
        const double s = topo.orientation.empty() ? 1.0 : topo.orientation[static_cast<size_t>(l)];
        if (pipe.from_node == 0) inc.a[l] += s;
        else inc.A(l, pipe.from_node - 1) += s;
        if (pipe.to_node == 0) inc.a[l] -= s;
        else inc.A(l, pipe.to_node - 1) -= s;
    }
    const Vec alpha = net.alpha();
    inc.B = alpha.asDiagonal() * inc.A.cwiseMax(0.0) - (-inc.A).cwiseMax(0.0);
    inc.b = alpha.cwiseProduct(inc.a.cwiseMax(0.0)) - (-inc.a).cwiseMax(0.0);
    return inc;
}

Vec weymouth_residual(const SteadyState& state, const IncidenceSet& inc,
                      const Vec& c, double p0) {
    const Index L = inc.a.size();
    Vec pp = state.p.cwiseProduct(state.p);
    Vec r(L);
    for (Index l = 0; l < L; ++l) {
        if (inc.active[static_cast<size_t>(l)]) {
            double phi = state.phi[l];
            r[l] = inc.B.row(l).dot(pp) - c[l] * phi * std::abs(phi) + inc.b[l] * p0 * p0;
        } else {
            r[l] = state.phi[l];
        }
    }
    return r;
}

Vec mass_residual(const IncidenceSet& inc, const Vec& phi, const Vec& q) {
    return inc.A.transpose() * phi - q;
}

namespace {

// spanning-tree allocation of injections for the flow initial guess
Vec tree_flow_init(const GasNetwork& net, const IncidenceSet& inc) {
    const int nn = net.node_count();
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<size_t>(nn));
    for (int l = 0; l < net.L(); ++l) {
        if (!inc.active[static_cast<size_t>(l)]) continue;
        const auto& p = net.pipeline(l);
        adj[static_cast<size_t>(p.from_node)].push_back({p.to_node, l});
        adj[static_cast<size_t>(p.to_node)].push_back({p.from_node, l});
    }
    std::vector<int> parent_node(static_cast<size_t>(nn), -1), parent_edge(static_cast<size_t>(nn), -1);
    std::vector<int> order;
    order.reserve(static_cast<size_t>(nn));
    order.push_back(0);
    parent_node[0] = 0;
    for (size_t i = 0; i < order.size(); ++i) {
        int u = order[i];
        for (auto [v, l] : adj[static_cast<size_t>(u)]) {
            if (parent_node[static_cast<size_t>(v)] < 0) {
                parent_node[static_cast<size_t>(v)] = u;
                parent_edge[static_cast<size_t>(v)] = l;
                order.push_back(v);
            }
        }
    }
    if (static_cast<int>(order.size()) != nn)
        throw NetworkError("active pipeline graph is disconnected");
    Vec need(nn);
    need[0] = net.q0();
    for (int n = 1; n < nn; ++n) need[n] = net.injections()[n - 1];
    Vec phi = Vec::Zero(net.L());
    for (size_t i = order.size(); i-- > 1;) {
        int v = order[i];
        int u = parent_node[static_cast<size_t>(v)];
        int l = parent_edge[static_cast<size_t>(v)];
        double inflow = -need[v];
        phi[l] = (net.pipeline(l).from_node == u) ? inflow : -inflow;
        need[u] += need[v];
    }
    return phi;
}

}  // namespace

SteadyState solve_steady_state(const GasNetwork& net, const TopologyState& topo,
                               const SolveOptions& opts) {
    const int N = net.N(), L = net.L();
    IncidenceSet inc = build_incidence(net, topo);
    if (std::abs(net.q0() + net.injections().sum()) > 1e-9)
        throw NetworkError("global injection imbalance");
    const Vec c = net.c();
    const Vec q = net.injections();
    const double p0sq = net.p0() * net.p0();

    Vec Pi = Vec::Constant(N, p0sq);
    Vec phi = tree_flow_init(net, inc);

    // two-phase continuation: smoothed |phi| first, exact kink to polish
    bool converged = false;
    for (double eps : {1e-3, 0.0}) {
        auto soft = [eps](double x) { return std::sqrt(x * x + eps * eps); };
        auto resid = [&](const Vec& Pi_, const Vec& phi_) {
            Vec r(N + L);
            r.head(N) = inc.A.transpose() * phi_ - q;
            for (int l = 0; l < L; ++l) {
                if (inc.active[static_cast<size_t>(l)])
                    r[N + l] = inc.B.row(l).dot(Pi_) - c[l] * phi_[l] * soft(phi_[l]) +
                               inc.b[l] * p0sq;
                else
                    r[N + l] = phi_[l];
            }
            return r;
        };
        Mat J = Mat::Zero(N + L, N + L);
        J.topRightCorner(N, L) = inc.A.transpose();
        for (int l = 0; l < L; ++l)
            if (inc.active[static_cast<size_t>(l)]) J.row(N + l).head(N) = inc.B.row(l);

        converged = false;
        for (int it = 0; it < opts.max_iterations; ++it) {
            Vec r = resid(Pi, phi);
            double rn = r.cwiseAbs().maxCoeff();
            if (rn < opts.tol) {
                converged = true;
                break;
            }
            for (int l = 0; l < L; ++l) {
                if (!inc.active[static_cast<size_t>(l)]) {
                    J(N + l, N + l) = 1.0;
                    continue;
                }
                double sa = soft(phi[l]);
                double d = sa + (sa > 0 ? phi[l] * phi[l] / sa : 0.0);
                J(N + l, N + l) = -c[l] * std::max(d, 1e-12);
            }
            Vec dx = J.partialPivLu().solve(-r);
            double t = 1.0;
            bool stepped = false;
            for (int ls = 0; ls < 45; ++ls) {
                Vec Pin = Pi + t * dx.head(N);
                Vec phin = phi + t * dx.tail(L);
                if (Pin.minCoeff() > 0 &&
                    resid(Pin, phin).cwiseAbs().maxCoeff() < rn) {
                    Pi = Pin;
                    phi = phin;
                    stepped = true;
                    break;
                }
                t *= 0.5;
            }
            if (!stepped) break;  // let the residual check below decide
        }
    }
    if (Pi.minCoeff() <= 0) throw NetworkError("negative squared pressure");
    SteadyState st;
    st.p = Pi.cwiseSqrt();
    st.phi = phi;
    st.q = q;
    if (!converged) {
        double w = weymouth_residual(st, inc, c, net.p0()).cwiseAbs().maxCoeff();
        double m = mass_residual(inc, phi, q).cwiseAbs().maxCoeff();
        if (std::max(w, m) >= 1e-8)
            throw NetworkError("steady-state solver did not converge");
    }
    return st;
}

TopologyState canonical_orientation(const GasNetwork& net, const TopologyState& topo,
                                    const SteadyState& state) {
    TopologyState out = topo;
    out.orientation.assign(static_cast<size_t>(net.L()), 1);
    IncidenceSet inc = build_incidence(net, topo);
    for (int l = 0; l < net.L(); ++l)
        if (inc.active[static_cast<size_t>(l)] && state.phi[l] < -1e-9)
            out.orientation[static_cast<size_t>(l)] = -1;
    out.normalize(net);
    return out;
}

}  // namespace gasnet
