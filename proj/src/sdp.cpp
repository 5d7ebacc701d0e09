#include "gasnet/sdp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdlib>
#include <iostream>

namespace gasnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// largest alpha in (0, 1] with X + alpha*dX PSD, via min eigenvalue of
// L^-1 dX L^-T where X = L L'
double max_step(const MatrixXd& X, const MatrixXd& dX) {
    Eigen::LLT<MatrixXd> llt(X);
    if (llt.info() != Eigen::Success) return 0.0;
    MatrixXd M = llt.matrixL().solve(dX);
    M = llt.matrixL().solve(M.transpose()).transpose();
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin >= -1e-14) return 1.0;
    return std::min(1.0, -1.0 / lmin);
}

}  // namespace

SdpResult solve_sdp(const SdpProblem& prob, const SdpOptions& opts) {
    const int S = static_cast<int>(prob.C.rows());
    const int m = static_cast<int>(prob.Zd.cols());
    const double bnorm = 1.0 + prob.rhs.cwiseAbs().maxCoeff();
    const double cnorm = 1.0 + prob.C.cwiseAbs().maxCoeff();

    SdpResult res;
    MatrixXd X = MatrixXd::Identity(S, S) * std::max(1.0, bnorm);
    MatrixXd Sm = MatrixXd::Identity(S, S) * std::max(1.0, cnorm);
    VectorXd y = VectorXd::Zero(m);

    auto Aop = [&](const MatrixXd& M) -> VectorXd {
        return prob.Zd.transpose() * M.diagonal();
    };

    for (int it = 0; it < opts.max_iterations; ++it) {
        res.iterations = it;
        VectorXd rp = prob.rhs - Aop(X);
        MatrixXd Rd = prob.C - Sm;
        Rd.diagonal() -= prob.Zd * y;
        double mu = X.cwiseProduct(Sm).sum() / S;
        double objective = prob.C.cwiseProduct(X).sum();
        res.primal_residual = rp.cwiseAbs().maxCoeff() / bnorm;
        res.dual_residual = Rd.cwiseAbs().maxCoeff() / cnorm;
        res.gap = X.cwiseProduct(Sm).sum() / (1.0 + std::abs(objective));
        if (res.primal_residual < opts.tol_feas && res.dual_residual < opts.tol_feas &&
            res.gap < opts.tol_gap) {
            res.converged = true;
            break;
        }

        // Nesterov-Todd scaling: R with R' S R = R^-1 X R^-T = diag(lam),
        // where lam^2, V come from the symmetric eigenproblem Lx' S Lx = V lam^2 V'
        Eigen::LLT<MatrixXd> lltX(X);
        Eigen::LLT<MatrixXd> lltS(Sm);
        if (lltX.info() != Eigen::Success || lltS.info() != Eigen::Success) break;
        MatrixXd Lx = lltX.matrixL();
        MatrixXd inner = Lx.transpose() * Sm * Lx;
        Eigen::SelfAdjointEigenSolver<MatrixXd> esnt(0.5 * (inner + inner.transpose()));
        if (esnt.info() != Eigen::Success || esnt.eigenvalues().minCoeff() <= 0) break;
        VectorXd lam = esnt.eigenvalues().cwiseSqrt();
        const MatrixXd& V = esnt.eigenvectors();
        MatrixXd R = Lx * V * lam.cwiseSqrt().cwiseInverse().asDiagonal();
        MatrixXd Rinv = lam.cwiseSqrt().asDiagonal() * V.transpose() *
                        Lx.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(S, S));
        MatrixXd W = R * R.transpose();

        MatrixXd K = prob.Zd.transpose() * W.cwiseProduct(W) * prob.Zd;
        K.diagonal().array() += 1e-14 * (1.0 + K.diagonal().cwiseAbs().maxCoeff());
        Eigen::LDLT<MatrixXd> lltK(K);
        if (lltK.info() != Eigen::Success) break;

        auto wop = [&](const MatrixXd& M) -> MatrixXd {
            MatrixXd T = W * M * W;
            return 0.5 * (T + T.transpose());
        };
        struct Dir {
            MatrixXd dX, dS;
            VectorXd dy;
        };
        // dX + W dS W = T0;  K dy = rp - A(T0) + A(W Rd W)
        auto solve_dir = [&](const MatrixXd& T0) -> Dir {
            Dir d;
            VectorXd rhs_y = rp - Aop(T0) + Aop(wop(Rd));
            d.dy = lltK.solve(rhs_y);
            d.dS = Rd;
            d.dS.diagonal() -= prob.Zd * d.dy;
            d.dX = T0 - wop(d.dS);
            d.dX = 0.5 * (d.dX + d.dX.transpose());
            return d;
        };
        // scaled-space complementarity target -> unscaled T0 via the Lyapunov
        // solve in the lambda basis: (lam_i + lam_j) M_ij = 2 RHS_ij
        auto lyap_target = [&](const MatrixXd& rhs_scaled) -> MatrixXd {
            MatrixXd M(S, S);
            for (int i = 0; i < S; ++i)
                for (int j = 0; j < S; ++j)
                    M(i, j) = 2.0 * rhs_scaled(i, j) / (lam[i] + lam[j]);
            return R * M * R.transpose();
        };

        // predictor: target -lam^2 in scaled space => T0 = -X exactly
        Dir aff = solve_dir(-X);
        // cheap bisection step estimate (only feeds the centering heuristic)
        auto psd_probe = [&](const MatrixXd& base, const MatrixXd& dir) {
            double a = 1.0;
            for (int k = 0; k < 7; ++k) {
                Eigen::LLT<MatrixXd> t(base + a * dir);
                if (t.info() == Eigen::Success) return a;
                a *= 0.5;
            }
            return 0.0;
        };
        double astep = std::min(psd_probe(X, 0.99 * aff.dX), psd_probe(Sm, 0.99 * aff.dS));
        double mu_aff =
            (X + astep * aff.dX).cwiseProduct(Sm + astep * aff.dS).sum() / S;
        if (mu_aff < 0) mu_aff = 0;
        double sigma = std::pow(mu_aff / mu, 3.0);
        sigma = std::min(std::max(sigma, 1e-10), 1.0);

        // Mehrotra corrector in the scaled space
        MatrixXd dXh = Rinv * aff.dX * Rinv.transpose();
        MatrixXd dSh = R.transpose() * aff.dS * R;
        MatrixXd P = 0.5 * (dXh * dSh + dSh.transpose() * dXh.transpose());
        MatrixXd rhs_scaled = -P;
        rhs_scaled.diagonal().array() += sigma * mu;
        rhs_scaled.diagonal() -= lam.cwiseProduct(lam);
        Dir cor = solve_dir(lyap_target(0.5 * (rhs_scaled + rhs_scaled.transpose())));

        double gamma = (it < 4) ? 0.95 : 0.99;
        double sp = max_step(X, cor.dX), sd = max_step(Sm, cor.dS);
        double step = std::min({1.0, gamma * sp, gamma * sd});
        if (std::getenv("GASNET_SDP_TRACE"))
            std::cerr << "it " << it << " mu " << mu << " gap " << res.gap << " rp "
                      << res.primal_residual << " sigma " << sigma << " step " << step
                      << "\n";
        if (step < 1e-10) break;
        X += step * cor.dX;
        Sm += step * cor.dS;
        y += step * cor.dy;
    }

    res.X = X;
    res.y = y;
    res.objective = prob.C.cwiseProduct(X).sum();
    if (!res.converged && opts.allow_fallback) {
        SdpResult fb = solve_sdp_admm(prob);
        if (fb.converged) {
            fb.used_fallback = true;
            return fb;
        }
    }
    return res;
}

SdpResult solve_sdp_admm(const SdpProblem& prob, double tol, int max_iter) {
    const int S = static_cast<int>(prob.C.rows());
    const int m = static_cast<int>(prob.Zd.cols());
    double rho = 1.0 + prob.C.cwiseAbs().maxCoeff() / (1.0 + prob.rhs.cwiseAbs().maxCoeff());
    MatrixXd Y = MatrixXd::Identity(S, S);
    MatrixXd U = MatrixXd::Zero(S, S);
    MatrixXd X = Y;
    Eigen::LDLT<MatrixXd> KtK(MatrixXd(prob.Zd.transpose() * prob.Zd));
    SdpResult res;
    for (int it = 0; it < max_iter; ++it) {
        // affine projection step on V = Y - U - C/rho (only the diagonal moves)
        MatrixXd V = Y - U - prob.C / rho;
        VectorXd d = V.diagonal();
        VectorXd corr = KtK.solve(prob.Zd.transpose() * d - prob.rhs);
        X = V;
        X.diagonal() = d - prob.Zd * corr;
        // PSD projection
        MatrixXd W = X + U;
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (W + W.transpose()));
        VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        MatrixXd Ynew = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        double prim = (X - Ynew).norm();
        double dual = rho * (Ynew - Y).norm();
        Y = Ynew;
        U += X - Y;
        if (it % 25 == 24) {
            double scale = 1.0 + X.norm();
            if (prim / scale < tol && dual / scale < tol * rho) {
                res.converged = true;
                res.iterations = it;
                break;
            }
        }
    }
    res.X = Y;
    // enforce the affine constraints exactly on the reported matrix
    VectorXd d = res.X.diagonal();
    VectorXd corr = KtK.solve(prob.Zd.transpose() * d - prob.rhs);
    res.X.diagonal() = d - prob.Zd * corr;
    res.y = VectorXd::Zero(m);
    res.objective = prob.C.cwiseProduct(res.X).sum();
    VectorXd rp = prob.rhs - prob.Zd.transpose() * res.X.diagonal();
    res.primal_residual = rp.cwiseAbs().maxCoeff() / (1.0 + prob.rhs.cwiseAbs().maxCoeff());
    return res;
}

}  // namespace gasnet
