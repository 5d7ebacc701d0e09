#include "gasnet/sdr.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace gasnet {

Vec z_constraint_diag(const GasNetwork& net, const IncidenceSet& inc, int m) {
    const int N = net.N(), L = net.L();
    Vec z = Vec::Zero(N + L + 1);
    z.head(N) = inc.B.row(m);
    z[N + m] = -net.c()[m];
    return z;
}

MMatrix build_M(const GasNetwork& net, const TopologyState& topo,
                const ObservationSet& obs, const SensorPlacement& placement,
                const NoiseModel& noise) {
    const int N = net.N(), L = net.L();
    TopologyState tt = topo;
    tt.normalize(net);
    IncidenceSet inc = build_incidence(net, tt);
    const int S = N + L + 1;
    const double Ta = obs.T_a;
    const double isp2 = 1.0 / (noise.sigma_p * noise.sigma_p);
    const double isq2 = 1.0 / (noise.sigma_q * noise.sigma_q);
    const double isf2 = 1.0 / (noise.sigma_phi * noise.sigma_phi);
    Vec dphi = placement.delta_phi();
    // flow sensors read declared-direction flows; fold the orientation signs
    Vec orient(L);
    for (int l = 0; l < L; ++l) orient[l] = tt.orientation[static_cast<size_t>(l)];

    MMatrix out;
    out.S = S;
    out.T_a = obs.T_a;
    Mat M = Mat::Zero(S, S);
    // M'11
    M.topLeftCorner(N, N) = (Ta * isp2) * Mat(placement.delta_p.asDiagonal());
    // M'22 = Ta/sq^2 A diag(dq) A' + Ta/sf^2 diag(dphi)
    M.block(N, N, L, L) =
        Ta * isq2 * inc.A * placement.delta_q.asDiagonal() * inc.A.transpose() +
        Ta * isf2 * Mat(dphi.asDiagonal());
    // M'13 (printed as M'14): -sum_t p~[t] o delta_p / sp^2
    M.block(0, S - 1, N, 1) = -isp2 * placement.delta_p.cwiseProduct(obs.sum_p);
    // M'23: -sum_t A (q~ o dq)/sq^2 - sum_t (dphi o phi~)/sf^2, with the flow
    // term carried into the candidate orientation
    Vec m23 = -isq2 * (inc.A * placement.delta_q.cwiseProduct(obs.sum_q)) -
              isf2 * orient.cwiseProduct(dphi.cwiseProduct(obs.sum_phi));
    M.block(N, S - 1, L, 1) = m23;
    // M'33
    M(S - 1, S - 1) = obs.sum_sq_masked;
    M.triangularView<Eigen::Lower>() = M.transpose();
    out.M = M;

    constexpr double kPi = 3.14159265358979323846;
    const double np = placement.delta_p.sum(), nq = placement.delta_q.sum(), nf = dphi.sum();
    out.C = -Ta * (0.5 * (np + nq + nf) * std::log(2.0 * kPi) +
                   np * std::log(noise.sigma_p) + nq * std::log(noise.sigma_q) +
                   nf * std::log(noise.sigma_phi));
    return out;
}

namespace {

SdpSolution solve_scaled(const GasNetwork& net, const IncidenceSet& inc,
                         const Mat& Mfull, double C, int T_a, double noise_floor,
                         const SdpOptions& opts) {
    const int N = net.N(), L = net.L();
    const int S = N + L + 1;
    const double ps = net.p0();
    const double qs = std::max(1.0, std::abs(net.q0()));
    // diag scaling: omega_tilde = D omega, X_tilde = S X S
    Vec d(S);
    d.head(N).setConstant(1.0 / ps);
    d.segment(N, L).setConstant(1.0 / qs);
    d[S - 1] = 1.0;
    Vec dinv = d.cwiseInverse();

    SdpProblem prob;
    prob.C = dinv.asDiagonal() * Mfull * dinv.asDiagonal();
    // objective scale normalization helps the interior point arithmetic
    double cscale = std::max(1.0, prob.C.cwiseAbs().maxCoeff());
    prob.C /= cscale;
    prob.Zd.resize(S, L + 1);
    prob.rhs.resize(L + 1);
    const double p0sq = net.p0() * net.p0();
    for (int m = 0; m < L; ++m) {
        Vec z = z_constraint_diag(net, inc, m);
        Vec zt = dinv.cwiseProduct(dinv).cwiseProduct(z);
        double zn = std::max(1.0, zt.cwiseAbs().maxCoeff());
        prob.Zd.col(m) = zt / zn;
        prob.rhs[m] = -inc.b[m] * p0sq / zn;
    }
    prob.Zd.col(L) = Vec::Zero(S);
    prob.Zd(S - 1, L) = 1.0;
    prob.rhs[L] = 1.0;

    SdpResult r = solve_sdp(prob, opts);

    SdpSolution sol;
    sol.solver_converged = r.converged;
    sol.used_fallback = r.used_fallback;
    sol.iterations = r.iterations;
    // eigenvalues on the scaled matrix (entries O(1))
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (r.X + r.X.transpose()),
                                          Eigen::EigenvaluesOnly);
    sol.eigvals = es.eigenvalues().reverse();
    sol.rank_thresholded = 0;
    for (Index i = 0; i < sol.eigvals.size(); ++i)
        if (sol.eigvals[i] > 1e-4) ++sol.rank_thresholded;
    // back to raw units
    sol.X = dinv.asDiagonal() * r.X * dinv.asDiagonal();
    double trMX = Mfull.cwiseProduct(sol.X).sum();
    sol.value = C - 0.5 * trMX;
    sol.deviance = trMX - noise_floor;
    sol.omega_bar = sol.X.block(0, S - 1, N + L, 1) / sol.X(S - 1, S - 1);
    double cres = 0.0;
    for (int m = 0; m < L; ++m) {
        Vec z = z_constraint_diag(net, inc, m);
        double v = z.cwiseProduct(sol.X.diagonal()).sum() + inc.b[m] * p0sq;
        // residual relative to the constraint's own scale
        double zs = std::max(1.0, z.cwiseAbs().maxCoeff() * sol.X.diagonal().cwiseAbs().maxCoeff());
        cres = std::max(cres, std::abs(v) / zs);
    }
    sol.constraint_residual = cres;
    sol.exact = (sol.rank_thresholded == 1) && cres < 1e-6 && sol.solver_converged;
    return sol;
}

}  // namespace

SdpSolution relaxed_ml(const GasNetwork& net, const TopologyState& topo,
                       const MMatrix& M, const SdpOptions& opts) {
    TopologyState tt = topo;
    tt.normalize(net);
    IncidenceSet inc = build_incidence(net, tt);
    return solve_scaled(net, inc, M.M, M.C, M.T_a, 0.0, opts);
}

SdpSolution relaxed_ml(const LikelihoodModel& model, const SdpOptions& opts) {
    // lifted matrix of the mean-misfit deviance: Tr(Mbar X) = Ta |G w - ybar|^2
    const Mat& G = model.G();
    const Vec& y = model.ybar();
    const int nw = static_cast<int>(G.cols());
    Mat Gy(G.rows(), nw + 1);
    Gy.leftCols(nw) = G;
    Gy.col(nw) = -y;
    Mat Mbar = model.T_a() * (Gy.transpose() * Gy);
    // value bookkeeping: loglik = C - (floor + Tr(Mbar X))/2
    return solve_scaled(model.network(), model.incidence(), Mbar,
                        model.constant() - 0.5 * model.noise_floor(), model.T_a(),
                        0.0, opts);
}

Vec recover_omega(const SdpSolution& sol) {
    const Index S = sol.X.rows();
    double xss = sol.X(S - 1, S - 1);
    if (std::abs(xss - 1.0) > 1e-6)
        throw NetworkError("lifted matrix corner entry is not 1");
    return sol.X.block(0, S - 1, S - 1, 1) / xss;
}

int thresholded_rank(const Mat& X, double eps_rank) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (X + X.transpose()),
                                          Eigen::EigenvaluesOnly);
    int r = 0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] > eps_rank) ++r;
    return r;
}

ExactnessReport exactness_condition(const GasNetwork& net, const TopologyState& topo,
                                    const SensorPlacement& placement,
                                    const NoiseModel& noise,
                                    const Vec& sum_np, const Vec& sum_nq,
                                    const Vec& sum_nphi, int T_a) {
    TopologyState tt = topo;
    tt.normalize(net);
    IncidenceSet inc = build_incidence(net, tt);
    ExactnessReport rep;
    rep.margins = Vec::Zero(3);
    rep.margins_raw = Vec::Zero(3);
    const double Ta = T_a;
    Vec dphi = placement.delta_phi();

    double p_raw = placement.delta_p.cwiseProduct(sum_np).cwiseAbs().maxCoeff();
    double f_raw = dphi.cwiseProduct(sum_nphi).cwiseAbs().maxCoeff();
    rep.margins_raw[0] = p_raw / Ta;
    rep.margins_raw[2] = f_raw / Ta;
    rep.margins[0] = (noise.sigma_p > 0 ? p_raw / noise.sigma_p : 0.0) / Ta;
    rep.margins[2] = (noise.sigma_phi > 0 ? f_raw / noise.sigma_phi : 0.0) / Ta;

    Mat Adq = inc.A * placement.delta_q.asDiagonal() * inc.A.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(Adq, Eigen::EigenvaluesOnly);
    double eta = 0.0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        double v = es.eigenvalues()[i];
        if (v > 1e-9 && (eta == 0.0 || v < eta)) eta = v;
    }
    if (eta == 0.0) {
        rep.q_leg_vacuous = true;  // no injection sensing reaches the flows
    } else {
        double q_raw = (inc.A * placement.delta_q.cwiseProduct(sum_nq)).cwiseAbs().maxCoeff();
        rep.margins_raw[1] = q_raw / (Ta * eta);
        rep.margins[1] = (noise.sigma_q > 0 ? q_raw / noise.sigma_q : 0.0) / (Ta * eta);
    }
    rep.holds = rep.margins[0] < 1.0 && rep.margins[2] < 1.0 &&
                (rep.q_leg_vacuous || rep.margins[1] < 1.0);
    return rep;
}

}  // namespace gasnet
