#pragma once

#include "gasnet/network.hpp"

namespace gasnet {

/// Binary indicator vectors for which sensors are employed.
struct SensorPlacement {
    Vec delta_p;    // N
    Vec delta_q;    // N
    Vec delta_F;    // L_F
    Vec delta_C;    // L_C

    Vec delta_phi() const {
        Vec d(delta_F.size() + delta_C.size());
        d << delta_F, delta_C;
        return d;
    }
    int sensor_count() const {
        return static_cast<int>(delta_p.sum() + delta_q.sum() + delta_F.sum() + delta_C.sum());
    }

    /// pressure + injection sensors at every node, flow sensors on all fixed pipelines
    static SensorPlacement standard(const GasNetwork& net);
    static SensorPlacement all_pressure(const GasNetwork& net);
    static SensorPlacement none(const GasNetwork& net);
};

struct NoiseModel {
    double sigma_p = 0.0;
    double sigma_q = 0.0;
    double sigma_phi = 0.0;
};

/// sigma per measurement type: tau times the mean magnitude of that type
/// over the employed sensors of the given state.
NoiseModel rsd_to_noise(double tau, const SteadyState& state,
                        const SensorPlacement& placement);

/// T_a noisy slices of (p, q, phi) plus the cached sums the SDR consumes.
struct ObservationSet {
    int T_a = 0;
    std::vector<Vec> p;    // each N
    std::vector<Vec> q;    // each N
    std::vector<Vec> phi;  // each L

    Vec sum_p, sum_q, sum_phi;            // plain sums over t
    double sum_sq_masked = 0.0;           // placement-weighted squared norms (M'33)

    void refresh_sums(const SensorPlacement& placement, const NoiseModel& noise);
};

/// i.i.d. Gaussian perturbations; identical (seed, run) gives bit-identical
/// output regardless of call order.
ObservationSet generate_observations(const SteadyState& state, const NoiseModel& noise,
                                     int T_a, uint64_t seed, uint64_t run,
                                     const SensorPlacement& placement);

}  // namespace gasnet
