#pragma once

#include "gasnet/network.hpp"
#include "gasnet/sensing.hpp"

#include <optional>

namespace gasnet {

/// Continuous + discrete parameter of the hypothesis test: a topology and
/// omega = (p, phi_F, phi_C).
struct Theta {
    TopologyState topo;
    Vec omega;  // N + L
};

struct MlResult {
    Vec omega_hat;
    double value = 0.0;        // sup log-likelihood
    double deviance = 0.0;     // T_a * || G w - ybar ||^2 (mean-misfit part)
    bool converged = false;
    double kkt_residual = 0.0;
};

/// Whitened Gaussian measurement model for one candidate topology:
/// channels are the employed sensors, rows scaled by 1/sigma. The
/// log-likelihood is  C - (noise_floor + T_a |G w - ybar|^2)/2  where
/// noise_floor collects the within-sample scatter (independent of w).
class LikelihoodModel {
  public:
    LikelihoodModel(const GasNetwork& net, const TopologyState& topo,
                    const SensorPlacement& placement, const NoiseModel& noise);

    /// attach data: masked whitened mean + noise floor from an ObservationSet
    void set_observations(const ObservationSet& obs);
    /// attach noise-free data at a true steady state (population limit)
    void set_population(const SteadyState& truth, int T_a);
    /// directly set the whitened mean (advanced use)
    void set_mean(const Vec& ybar_w, int T_a, double noise_floor);

    const Mat& G() const { return G_; }
    const Vec& ybar() const { return ybar_w_; }
    const GasNetwork& network() const { return *net_; }
    const IncidenceSet& incidence() const { return inc_; }
    const TopologyState& topology() const { return topo_; }
    int T_a() const { return Ta_; }
    int channels() const { return static_cast<int>(G_.rows()); }
    double constant() const { return C_; }
    double noise_floor() const { return noise_floor_; }

    double deviance(const Vec& omega) const;    // T_a |G w - ybar|^2
    double loglik(const Vec& omega) const;      // C - (floor + deviance)/2
    Vec unconstrained_fit() const;              // GLS completion of the data

    /// constraint f(theta) and its gradient wrt omega
    Vec constraint(const Vec& omega) const;
    Mat constraint_jacobian(const Vec& omega) const;

    /// constrained ML: Newton-KKT multistart with augmented-Lagrangian fallback
    MlResult constrained_ml(const std::vector<Vec>& extra_starts = {}) const;

  private:
    const GasNetwork* net_;
    TopologyState topo_;
    IncidenceSet inc_;
    SensorPlacement plc_;
    NoiseModel noise_;
    Mat G_;
    Mat GtG_;
    Vec ybar_w_;
    Vec Gty_;
    int Ta_ = 0;
    double C_ = 0.0;
    double Cp_pending_ = 0.0;  // per-sample normalization constant
    double noise_floor_ = 0.0;

    MlResult newton_kkt(const Vec& start) const;
    MlResult augmented_lagrangian(const Vec& start) const;
};

/// Eq.-style operations on top of the model

double log_likelihood(const ObservationSet& obs, const SensorPlacement& placement,
                      const NoiseModel& noise, const GasNetwork& net, const Theta& theta);

Vec constraint_f(const Theta& theta, const GasNetwork& net);

MlResult constrained_ml(const GasNetwork& net, const ObservationSet& obs,
                        const TopologyState& topo, const SensorPlacement& placement,
                        const NoiseModel& noise, const std::vector<Vec>& starts = {});

}  // namespace gasnet
