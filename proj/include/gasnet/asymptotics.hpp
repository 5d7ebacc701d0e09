#pragma once

#include "gasnet/likelihood.hpp"

namespace gasnet {

struct FimSet {
    Mat Jpp;      // N x N per-sample block
    Mat Jphiphi;  // L x L per-sample block
    Mat J;        // (N+L) x (N+L), scaled by T_a
    int T_a = 1;
};

FimSet fisher_information(const GasNetwork& net, const TopologyState& topo,
                          const SensorPlacement& placement, const NoiseModel& noise,
                          int T_a);

/// F = d f / d omega at omega: [2 B diag(p), -2 diag(c o |phi|)], open rows
/// replaced by the gradient of phi_l = 0.
Mat constraint_gradient(const GasNetwork& net, const TopologyState& topo, const Vec& omega);

/// Orthonormal null-space basis (nullity columns) via SVD.
Mat null_space_basis(const Mat& F);

/// U (U' J U)^-1 U'
Mat ccrb(const GasNetwork& net, const TopologyState& topo, const Vec& omega,
         const SensorPlacement& placement, const NoiseModel& noise, int T_a);

struct PseudoTrue {
    Vec omega_star;          // population constrained fit under A_fit
    double deviance = 0.0;   // per T_a: the population misfit of the fit
    bool converged = false;
};

/// Noise-free limit of the constrained ML under model A_fit when the data
/// mean comes from `truth` (pressures/injections/flows in declared units).
PseudoTrue pseudo_true_params(const GasNetwork& net, const TopologyState& A_fit,
                              const SteadyState& truth, const SensorPlacement& placement,
                              const NoiseModel& noise, int T_a,
                              const std::vector<Vec>& starts = {});

/// lambda = d' UU' J(A_H0) UU' d with d = omega*(A_H1) - omega*(A_H0).
double noncentrality_lambda(const GasNetwork& net, const TopologyState& A_H0,
                            const TopologyState& A_H1, const SteadyState& truth,
                            const SensorPlacement& placement, const NoiseModel& noise,
                            int T_a);

struct WaldLambda {
    double lambda = 0.0;   // exact noncentrality of the point-null Wald test
    int dof = 0;           // rank of the measurement map
};

/// Exact noncentrality of the Wald verification statistic: the population
/// unconstrained fit of the H1 mean through the A_H0 measurement map,
/// displaced from the believed state, in the FIM metric.
WaldLambda wald_noncentrality(const GasNetwork& net, const TopologyState& A_H0,
                              const SteadyState& believed, const SteadyState& truth,
                              const SensorPlacement& placement, const NoiseModel& noise,
                              int T_a);

/// Quadratic form d' CCRB^+ d with CCRB^+ = U (U'JU) U'.
double wald_statistic(const Vec& omega_hat, const Vec& omega_star_H0, const Mat& ccrb_pinv);

/// CCRB^+ via the U(U'JU)U' identity.
Mat ccrb_pinv(const GasNetwork& net, const TopologyState& topo, const Vec& omega,
              const SensorPlacement& placement, const NoiseModel& noise, int T_a);

/// rho = chi2(dof) quantile at p_fa; P_d = ncx2(dof, lambda) survival at rho.
double predict_pd(double lambda, double p_fa, int dof);

struct RequiredObservations {
    int floor_value = 0;
    int ceil_value = 0;
    double lambda_required = 0.0;
};

RequiredObservations required_observations(double lambda_per_sample, double p_d_target,
                                           double p_fa, int dof);

}  // namespace gasnet
