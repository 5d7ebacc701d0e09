#pragma once

#include "gasnet/likelihood.hpp"
#include "gasnet/sdp.hpp"

namespace gasnet {

/// Objective data of the lifted problem: ln g = C - Tr(M X)/2 for any
/// rank-one feasible X built from a feasible theta.
struct MMatrix {
    Mat M;          // S x S, S = N + L + 1
    double C = 0.0; // log-likelihood constant
    int T_a = 0;
    int S = 0;
};

/// Diagonal constraint matrix for Weymouth row m: diag([B_m, -c_m e_m, 0]).
Vec z_constraint_diag(const GasNetwork& net, const IncidenceSet& inc, int m);

MMatrix build_M(const GasNetwork& net, const TopologyState& topo,
                const ObservationSet& obs, const SensorPlacement& placement,
                const NoiseModel& noise);

struct SdpSolution {
    Mat X;                 // raw units
    double value = 0.0;    // xi(A) = C - Tr(M X)/2
    double deviance = 0.0; // mean-misfit deviance (noise floor removed)
    Vec eigvals;           // descending eigenvalues of the per-unit scaled X
    int rank_thresholded = 0;
    Vec omega_bar;         // N + L, raw units (Sth column of X)
    bool exact = false;    // rank 1 and feasible
    double constraint_residual = 0.0;
    bool solver_converged = false;
    bool used_fallback = false;
    int iterations = 0;
};

/// Relaxed ML: maximize C - Tr(MX)/2 over Omega(A). Internally solved in
/// per-unit variables (p/p0, phi/q0) so eigenvalue thresholds behave.
SdpSolution relaxed_ml(const GasNetwork& net, const TopologyState& topo,
                       const MMatrix& M, const SdpOptions& opts = {});

/// Same relaxed problem driven by a LikelihoodModel (shared fast path).
SdpSolution relaxed_ml(const LikelihoodModel& model, const SdpOptions& opts = {});

Vec recover_omega(const SdpSolution& sol);

int thresholded_rank(const Mat& X, double eps_rank = 1e-4);

struct ExactnessReport {
    bool holds = false;
    bool q_leg_vacuous = false;
    Vec margins;       // 3 whitened ratios, hold iff all < 1
    Vec margins_raw;   // the paper-literal (unit-dependent) ratios
};

/// Noise-norm condition under which the relaxation provably equals the
/// nonconvex optimum. Margins are RHS/LHS ratios; whitened per-channel
/// noise (sigma units) is the dimensionless reading used for `holds`.
ExactnessReport exactness_condition(const GasNetwork& net, const TopologyState& topo,
                                    const SensorPlacement& placement,
                                    const NoiseModel& noise,
                                    const Vec& sum_np, const Vec& sum_nq,
                                    const Vec& sum_nphi, int T_a);

}  // namespace gasnet
