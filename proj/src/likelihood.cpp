#include "gasnet/likelihood.hpp"

#include <cmath>

namespace gasnet {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

LikelihoodModel::LikelihoodModel(const GasNetwork& net, const TopologyState& topo,
                                 const SensorPlacement& placement, const NoiseModel& noise)
    : net_(&net), topo_(topo), plc_(placement), noise_(noise) {
    topo_.normalize(net);
    inc_ = build_incidence(net, topo_);
    const int N = net.N(), L = net.L();
    if (noise.sigma_p <= 0 && plc_.delta_p.sum() > 0)
        throw NetworkError("zero pressure noise with pressure sensors employed");
    if (noise.sigma_q <= 0 && plc_.delta_q.sum() > 0)
        throw NetworkError("zero injection noise with injection sensors employed");
    Vec dphi = plc_.delta_phi();
    if (noise.sigma_phi <= 0 && dphi.sum() > 0)
        throw NetworkError("zero flow noise with flow sensors employed");

    int rows = 0;
    for (Index i = 0; i < plc_.delta_p.size(); ++i) rows += plc_.delta_p[i] > 0;
    for (Index i = 0; i < plc_.delta_q.size(); ++i) rows += plc_.delta_q[i] > 0;
    for (Index i = 0; i < dphi.size(); ++i) rows += dphi[i] > 0;

    G_ = Mat::Zero(rows, N + L);
    int r = 0;
    for (Index n = 0; n < N; ++n)
        if (plc_.delta_p[n] > 0) G_(r++, n) = 1.0 / noise.sigma_p;
    for (Index n = 0; n < N; ++n)
        if (plc_.delta_q[n] > 0) G_.row(r++).segment(N, L) = inc_.A.col(n).transpose() / noise.sigma_q;
    // flow sensors read the physical flow in the declared direction; omega
    // carries candidate-oriented flows, so the row picks up the flip sign
    for (Index l = 0; l < L; ++l)
        if (dphi[l] > 0)
            G_(r++, N + l) = topo_.orientation[static_cast<size_t>(l)] / noise.sigma_phi;
    GtG_ = G_.transpose() * G_;

    // Gaussian normalization constant over all employed scalar channels
    const double np = plc_.delta_p.sum(), nq = plc_.delta_q.sum(), nf = dphi.sum();
    C_ = 0.0;  // finalized once T_a is known
    Cp_pending_ = -(0.5 * (np + nq + nf) * kLog2Pi +
                    np * std::log(noise.sigma_p > 0 ? noise.sigma_p : 1.0) +
                    nq * std::log(noise.sigma_q > 0 ? noise.sigma_q : 1.0) +
                    nf * std::log(noise.sigma_phi > 0 ? noise.sigma_phi : 1.0));
}

void LikelihoodModel::set_observations(const ObservationSet& obs) {
    const int N = net_->N(), L = net_->L();
    Ta_ = obs.T_a;
    Vec pbar = obs.sum_p / obs.T_a;
    Vec qbar = obs.sum_q / obs.T_a;
    Vec fbar = obs.sum_phi / obs.T_a;
    Vec dphi = plc_.delta_phi();
    ybar_w_ = Vec::Zero(G_.rows());
    int r = 0;
    for (Index n = 0; n < N; ++n)
        if (plc_.delta_p[n] > 0) ybar_w_[r++] = pbar[n] / noise_.sigma_p;
    for (Index n = 0; n < N; ++n)
        if (plc_.delta_q[n] > 0) ybar_w_[r++] = qbar[n] / noise_.sigma_q;
    for (Index l = 0; l < L; ++l)
        if (dphi[l] > 0) ybar_w_[r++] = fbar[l] / noise_.sigma_phi;
    // sum_t |y_t|^2 - T_a |ybar|^2, all masked and whitened
    double mean_sq = 0.0;
    if (noise_.sigma_p > 0)
        mean_sq += plc_.delta_p.cwiseProduct(pbar).squaredNorm() / (noise_.sigma_p * noise_.sigma_p);
    if (noise_.sigma_q > 0)
        mean_sq += plc_.delta_q.cwiseProduct(qbar).squaredNorm() / (noise_.sigma_q * noise_.sigma_q);
    if (noise_.sigma_phi > 0)
        mean_sq += dphi.cwiseProduct(fbar).squaredNorm() / (noise_.sigma_phi * noise_.sigma_phi);
    noise_floor_ = obs.sum_sq_masked - Ta_ * mean_sq;
    if (noise_floor_ < 0) noise_floor_ = 0;
    Gty_ = G_.transpose() * ybar_w_;
    C_ = Ta_ * Cp_pending_;
}

void LikelihoodModel::set_population(const SteadyState& truth, int T_a) {
    // truth carries raw (declared-direction) pressures, injections and flows,
    // which is exactly what the sensors read
    const Index N = truth.p.size(), L = truth.phi.size();
    Vec dphi = plc_.delta_phi();
    ybar_w_ = Vec::Zero(G_.rows());
    int r = 0;
    for (Index n = 0; n < N; ++n)
        if (plc_.delta_p[n] > 0) ybar_w_[r++] = truth.p[n] / noise_.sigma_p;
    for (Index n = 0; n < N; ++n)
        if (plc_.delta_q[n] > 0) ybar_w_[r++] = truth.q[n] / noise_.sigma_q;
    for (Index l = 0; l < L; ++l)
        if (dphi[l] > 0) ybar_w_[r++] = truth.phi[l] / noise_.sigma_phi;
    Ta_ = T_a;
    noise_floor_ = 0.0;
    Gty_ = G_.transpose() * ybar_w_;
    C_ = Ta_ * Cp_pending_;
}

void LikelihoodModel::set_mean(const Vec& ybar_w, int T_a, double noise_floor) {
    ybar_w_ = ybar_w;
    Ta_ = T_a;
    noise_floor_ = noise_floor;
    Gty_ = G_.transpose() * ybar_w_;
    C_ = Ta_ * Cp_pending_;
}

double LikelihoodModel::deviance(const Vec& omega) const {
    return Ta_ * (G_ * omega - ybar_w_).squaredNorm();
}

double LikelihoodModel::loglik(const Vec& omega) const {
    return C_ - 0.5 * (noise_floor_ + deviance(omega));
}

Vec LikelihoodModel::unconstrained_fit() const {
    return G_.colPivHouseholderQr().solve(ybar_w_);
}

Vec LikelihoodModel::constraint(const Vec& omega) const {
    const int N = net_->N(), L = net_->L();
    const Vec c = net_->c();
    const double p0sq = net_->p0() * net_->p0();
    Vec pp = omega.head(N).cwiseProduct(omega.head(N));
    Vec f(L);
    for (int l = 0; l < L; ++l) {
        if (inc_.active[static_cast<size_t>(l)]) {
            double phi = omega[N + l];
            f[l] = inc_.B.row(l).dot(pp) - c[l] * phi * std::abs(phi) + inc_.b[l] * p0sq;
        } else {
            f[l] = omega[N + l];
        }
    }
    return f;
}

Mat LikelihoodModel::constraint_jacobian(const Vec& omega) const {
    const int N = net_->N(), L = net_->L();
    const Vec c = net_->c();
    Mat F = Mat::Zero(L, N + L);
    for (int l = 0; l < L; ++l) {
        if (inc_.active[static_cast<size_t>(l)]) {
            F.row(l).head(N) = 2.0 * inc_.B.row(l).cwiseProduct(omega.head(N).transpose());
            F(l, N + l) = -2.0 * c[l] * std::abs(omega[N + l]);
        } else {
            F(l, N + l) = 1.0;
        }
    }
    return F;
}

MlResult LikelihoodModel::newton_kkt(const Vec& start) const {
    const int N = net_->N(), L = net_->L();
    const Vec c = net_->c();
    const double scale = std::max(1.0, static_cast<double>(Ta_));
    Vec w = start;
    Vec mu = Vec::Zero(L);
    MlResult best;
    best.deviance = std::numeric_limits<double>::infinity();
    auto consider = [&](const Vec& w_, double kkt) {
        Vec f = constraint(w_);
        double fn = f.cwiseAbs().maxCoeff();
        double dv = deviance(w_);
        if (fn < 1e-8 && dv < best.deviance) {
            best.omega_hat = w_;
            best.deviance = dv;
            best.converged = true;
            best.kkt_residual = std::max(fn, kkt);
        }
    };
    for (int it = 0; it < 100; ++it) {
        Vec f = constraint(w);
        Mat F = constraint_jacobian(w);
        Vec g = Ta_ * (GtG_ * w - Gty_) + F.transpose() * mu;
        double kkt = std::max(f.cwiseAbs().maxCoeff(), g.cwiseAbs().maxCoeff() / scale);
        consider(w, kkt);
        if (kkt < 1e-9) break;
        Mat H = Ta_ * GtG_;
        for (int l = 0; l < L; ++l) {
            if (!inc_.active[static_cast<size_t>(l)]) continue;
            for (int n = 0; n < N; ++n) H(n, n) += 2.0 * inc_.B(l, n) * mu[l];
        }
        Mat KKT = Mat::Zero(N + 2 * L, N + 2 * L);
        KKT.topLeftCorner(N + L, N + L) = H;
        KKT.topRightCorner(N + L, L) = F.transpose();
        KKT.bottomLeftCorner(L, N + L) = F;
        KKT.diagonal().array() += 1e-10 * scale;
        Vec rhs(N + 2 * L);
        rhs.head(N + L) = -g;
        rhs.tail(L) = -f;
        Vec sol = KKT.partialPivLu().solve(rhs);
        Vec dw = sol.head(N + L), dmu = sol.tail(L);
        double pen = 2.0 * (mu + dmu).cwiseAbs().maxCoeff() + 1.0;
        auto merit = [&](const Vec& w_) {
            return deviance(w_) + pen * constraint(w_).cwiseAbs().sum();
        };
        double m0 = merit(w);
        double t = 1.0;
        bool ok = false;
        for (int ls = 0; ls < 28; ++ls) {
            if (merit(w + t * dw) <= m0 + 1e-10 * std::abs(m0) + 1e-12) {
                ok = true;
                break;
            }
            t *= 0.5;
        }
        if (!ok) {
            if (it < 4) t = 1.0;  // nonmonotone kick out of the basin edge
            else break;
        }
        w += t * dw;
        mu += t * dmu;
    }
    consider(w, constraint(w).cwiseAbs().maxCoeff());
    if (best.converged) best.value = loglik(best.omega_hat);
    return best;
}

MlResult LikelihoodModel::augmented_lagrangian(const Vec& start) const {
    const int N = net_->N(), L = net_->L();
    const Vec c = net_->c();
    const double scale = std::max(1.0, static_cast<double>(Ta_));
    Vec w = start;
    Vec mu = Vec::Zero(L);
    double beta = 10.0 * scale;
    const double epss[3] = {1e-2, 1e-5, 0.0};
    auto soft = [](double x, double e) { return std::sqrt(x * x + e * e); };
    for (double eps : epss) {
        auto feval = [&](const Vec& w_) {
            Vec pp = w_.head(N).cwiseProduct(w_.head(N));
            Vec f(L);
            for (int l = 0; l < L; ++l) {
                if (inc_.active[static_cast<size_t>(l)]) {
                    double phi = w_[N + l];
                    f[l] = inc_.B.row(l).dot(pp) - c[l] * phi * soft(phi, eps) +
                           inc_.b[l] * net_->p0() * net_->p0();
                } else {
                    f[l] = w_[N + l];
                }
            }
            return f;
        };
        auto Feval = [&](const Vec& w_) {
            Mat F = Mat::Zero(L, N + L);
            for (int l = 0; l < L; ++l) {
                if (inc_.active[static_cast<size_t>(l)]) {
                    F.row(l).head(N) =
                        2.0 * inc_.B.row(l).cwiseProduct(w_.head(N).transpose());
                    double phi = w_[N + l];
                    double sa = soft(phi, eps);
                    F(l, N + l) = -c[l] * (sa + phi * phi / std::max(sa, 1e-300));
                } else {
                    F(l, N + l) = 1.0;
                }
            }
            return F;
        };
        for (int outer = 0; outer < 12; ++outer) {
            for (int inner = 0; inner < 60; ++inner) {
                Vec f = feval(w);
                Mat F = Feval(w);
                Vec lam = mu + beta * f;
                Vec g = Ta_ * (GtG_ * w - Gty_) + F.transpose() * lam;
                if (g.cwiseAbs().maxCoeff() / scale < 1e-9 &&
                    f.cwiseAbs().maxCoeff() < 1e-8)
                    break;
                Mat H = Ta_ * GtG_ + beta * (F.transpose() * F);
                for (int l = 0; l < L; ++l) {
                    if (!inc_.active[static_cast<size_t>(l)]) continue;
                    for (int n = 0; n < N; ++n) H(n, n) += 2.0 * inc_.B(l, n) * lam[l];
                }
                H.diagonal().array() += 1e-9 * scale;
                Vec dw = H.ldlt().solve(-g);
                auto merit = [&](const Vec& w_) {
                    Vec f_ = feval(w_);
                    return deviance(w_) + 2.0 * mu.dot(f_) + beta * f_.squaredNorm();
                };
                double m0 = merit(w);
                double t = 1.0;
                while (t > 1e-10 && merit(w + t * dw) > m0 - 1e-14 * std::abs(m0)) t *= 0.5;
                if (t <= 1e-10) break;
                w += t * dw;
            }
            Vec f = feval(w);
            if (f.cwiseAbs().maxCoeff() < 1e-8) break;
            mu += beta * f;
            beta *= 4.0;
        }
    }
    MlResult r;
    Vec f = constraint(w);
    r.omega_hat = w;
    r.deviance = deviance(w);
    r.kkt_residual = f.cwiseAbs().maxCoeff();
    r.converged = r.kkt_residual < 1e-6;
    r.value = loglik(w);
    return r;
}

MlResult LikelihoodModel::constrained_ml(const std::vector<Vec>& extra_starts) const {
    std::vector<Vec> starts = extra_starts;
    starts.push_back(unconstrained_fit());
    Vec flat(net_->N() + net_->L());
    flat.head(net_->N()).setConstant(net_->p0());
    flat.tail(net_->L()).setZero();
    starts.push_back(flat);
    MlResult best;
    best.deviance = std::numeric_limits<double>::infinity();
    for (const auto& s : starts) {
        MlResult r = newton_kkt(s);
        if (r.converged && r.deviance < best.deviance) best = r;
    }
    if (!best.converged) {
        for (size_t i = 0; i < starts.size() && i < 2; ++i) {
            MlResult r = augmented_lagrangian(starts[i]);
            if (r.converged && r.deviance < best.deviance) best = r;
        }
    }
    if (!best.converged && !starts.empty()) {
        best = augmented_lagrangian(starts.front());
    }
    return best;
}

double log_likelihood(const ObservationSet& obs, const SensorPlacement& placement,
                      const NoiseModel& noise, const GasNetwork& net, const Theta& theta) {
    LikelihoodModel m(net, theta.topo, placement, noise);
    m.set_observations(obs);
    return m.loglik(theta.omega);
}

Vec constraint_f(const Theta& theta, const GasNetwork& net) {
    SensorPlacement plc = SensorPlacement::standard(net);
    NoiseModel nm{1.0, 1.0, 1.0};
    LikelihoodModel m(net, theta.topo, plc, nm);
    return m.constraint(theta.omega);
}

MlResult constrained_ml(const GasNetwork& net, const ObservationSet& obs,
                        const TopologyState& topo, const SensorPlacement& placement,
                        const NoiseModel& noise, const std::vector<Vec>& starts) {
    LikelihoodModel m(net, topo, placement, noise);
    m.set_observations(obs);
    return m.constrained_ml(starts);
}

}  // namespace gasnet
