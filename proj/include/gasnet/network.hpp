#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace gasnet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Eigen::Index;

struct NetworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class PipeKind { Fixed, Changeable };

struct Pipeline {
    std::string id;
    int from_node = 0;
    int to_node = 0;
    double c = 0.0;      // characteristic value, kg^2 m^-8 s^-2
    double alpha = 1.0;  // compressor ratio (1 = no compressor)
    PipeKind kind = PipeKind::Fixed;
};

/// Immutable network description. Node 0 is the reference node; the
/// injection vector q covers nodes 1..N. Fixed pipelines are listed before
/// changeable ones.
class GasNetwork {
  public:
    GasNetwork(std::string name, int node_count, double reference_pressure,
               std::vector<Pipeline> pipelines, Vec injections);

    const std::string& name() const { return name_; }
    int node_count() const { return node_count_; }       // N+1, incl. reference
    int N() const { return node_count_ - 1; }
    int L() const { return static_cast<int>(pipes_.size()); }
    int L_fixed() const { return lf_; }
    int L_changeable() const { return L() - lf_; }
    double p0() const { return p0_; }
    double q0() const { return -q_.sum(); }              // reference injection
    const std::vector<Pipeline>& pipelines() const { return pipes_; }
    const Pipeline& pipeline(Index l) const { return pipes_[static_cast<size_t>(l)]; }
    const Vec& injections() const { return q_; }
    Vec c() const;
    Vec alpha() const;
    /// indices of changeable pipelines (== lf_..L-1 by the ordering invariant)
    std::vector<int> changeable_indices() const;

  private:
    std::string name_;
    int node_count_;
    double p0_;
    std::vector<Pipeline> pipes_;
    Vec q_;
    int lf_ = 0;
};

/// Open/closed assignment for the changeable pipelines plus a per-pipeline
/// orientation sign relative to the declared direction. Orientation of an
/// open pipeline is normalized to +1.
struct TopologyState {
    std::vector<bool> closed;       // size L_C, true = closed (in service)
    std::vector<int> orientation;   // size L, +1 or -1; empty = all +1

    static TopologyState all_closed(const GasNetwork& net);
    static TopologyState all_open(const GasNetwork& net);

    void normalize(const GasNetwork& net);  // +1 on open pipes
    bool operator==(const TopologyState& o) const {
        return closed == o.closed && orientation == o.orientation;
    }
};

/// Incidence data for one topology: a and A are the reference column and the
/// rest of the signed node-pipeline incidence matrix, B and b their
/// compressor-weighted versions. Rows of open pipelines are zeroed.
struct IncidenceSet {
    Vec a;                  // L
    Mat A;                  // L x N
    Mat B;                  // L x N
    Vec b;                  // L
    std::vector<bool> active;  // L, false = open
};

struct SteadyState {
    Vec p;     // N node pressures (reference excluded)
    Vec phi;   // L pipeline flows (0 on open pipelines)
    Vec q;     // N injections
};

IncidenceSet build_incidence(const GasNetwork& net, const TopologyState& topo);

/// B(p o p) - c o phi o |phi| + b p0^2 on active rows; phi_l on open rows.
Vec weymouth_residual(const SteadyState& state, const IncidenceSet& inc,
                      const Vec& c, double p0);

/// A^T phi - q
Vec mass_residual(const IncidenceSet& inc, const Vec& phi, const Vec& q);

struct SolveOptions {
    double tol = 1e-10;
    int max_iterations = 120;
};

/// Damped Newton on (p o p, phi). Requires the active subgraph connected
/// through the reference node.
SteadyState solve_steady_state(const GasNetwork& net, const TopologyState& topo,
                               const SolveOptions& opts = {});

/// Orientation signs matching the solved flow directions (+1 on open pipes).
TopologyState canonical_orientation(const GasNetwork& net, const TopologyState& topo,
                                    const SteadyState& state);

}  // namespace gasnet
