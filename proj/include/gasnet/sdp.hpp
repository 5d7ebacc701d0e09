#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gasnet {

/// min <C, X>  s.t.  z_i' diag(X) = b_i (i = 1..m),  X PSD.
/// All constraint matrices are diagonal, which this solver exploits:
/// the Schur complement is Zd' (X o Sinv) Zd.
struct SdpProblem {
    Eigen::MatrixXd C;    // S x S symmetric
    Eigen::MatrixXd Zd;   // S x m, column i = diag of the i-th constraint
    Eigen::VectorXd rhs;  // m
};

struct SdpResult {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    double objective = 0.0;      // <C, X>
    double gap = 0.0;            // <X, S> / S-dim
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    bool used_fallback = false;
};

struct SdpOptions {
    double tol_gap = 1e-9;
    double tol_feas = 1e-9;
    int max_iterations = 100;
    bool allow_fallback = true;
};

SdpResult solve_sdp(const SdpProblem& prob, const SdpOptions& opts = {});

/// ADMM fallback (projection splitting); slower, used when the interior
/// point method stalls.
SdpResult solve_sdp_admm(const SdpProblem& prob, double tol = 1e-7, int max_iter = 20000);

}  // namespace gasnet
