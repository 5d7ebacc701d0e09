#include "gasnet/sensing.hpp"

#include "gasnet/rng.hpp"

namespace gasnet {

SensorPlacement SensorPlacement::standard(const GasNetwork& net) {
    SensorPlacement s;
    s.delta_p = Vec::Ones(net.N());
    s.delta_q = Vec::Ones(net.N());
    s.delta_F = Vec::Ones(net.L_fixed());
    s.delta_C = Vec::Zero(net.L_changeable());
    return s;
}

SensorPlacement SensorPlacement::all_pressure(const GasNetwork& net) {
    SensorPlacement s = none(net);
    s.delta_p = Vec::Ones(net.N());
    return s;
}

SensorPlacement SensorPlacement::none(const GasNetwork& net) {
    SensorPlacement s;
    s.delta_p = Vec::Zero(net.N());
    s.delta_q = Vec::Zero(net.N());
    s.delta_F = Vec::Zero(net.L_fixed());
    s.delta_C = Vec::Zero(net.L_changeable());
    return s;
}

namespace {
double masked_mean_abs(const Vec& values, const Vec& mask) {
    double s = 0.0, n = 0.0;
    for (Index i = 0; i < values.size(); ++i) {
        if (mask[i] > 0) {
            s += std::abs(values[i]);
            n += 1.0;
        }
    }
    return n > 0 ? s / n : 0.0;
}
}  // namespace

NoiseModel rsd_to_noise(double tau, const SteadyState& state,
                        const SensorPlacement& placement) {
    if (tau < 0) throw NetworkError("RSD must be nonnegative");
    NoiseModel nm;
    nm.sigma_p = tau * masked_mean_abs(state.p, placement.delta_p);
    nm.sigma_q = tau * masked_mean_abs(state.q, placement.delta_q);
    Vec dphi = placement.delta_phi();
    nm.sigma_phi = tau * masked_mean_abs(state.phi, dphi);
    return nm;
}

void ObservationSet::refresh_sums(const SensorPlacement& placement, const NoiseModel& noise) {
    const Index N = p.empty() ? 0 : p[0].size();
    const Index L = phi.empty() ? 0 : phi[0].size();
    sum_p = Vec::Zero(N);
    sum_q = Vec::Zero(N);
    sum_phi = Vec::Zero(L);
    sum_sq_masked = 0.0;
    Vec dphi = placement.delta_phi();
    for (int t = 0; t < T_a; ++t) {
        sum_p += p[static_cast<size_t>(t)];
        sum_q += q[static_cast<size_t>(t)];
        sum_phi += phi[static_cast<size_t>(t)];
        if (noise.sigma_p > 0)
            sum_sq_masked += placement.delta_p.cwiseProduct(p[static_cast<size_t>(t)]).squaredNorm() /
                             (noise.sigma_p * noise.sigma_p);
        if (noise.sigma_q > 0)
            sum_sq_masked += placement.delta_q.cwiseProduct(q[static_cast<size_t>(t)]).squaredNorm() /
                             (noise.sigma_q * noise.sigma_q);
        if (noise.sigma_phi > 0)
            sum_sq_masked += dphi.cwiseProduct(phi[static_cast<size_t>(t)]).squaredNorm() /
                             (noise.sigma_phi * noise.sigma_phi);
    }
}

ObservationSet generate_observations(const SteadyState& state, const NoiseModel& noise,
                                     int T_a, uint64_t seed, uint64_t run,
                                     const SensorPlacement& placement) {
    if (T_a < 1) throw NetworkError("need at least one observation");
    const Index N = state.p.size(), L = state.phi.size();
    ObservationSet obs;
    obs.T_a = T_a;
    obs.p.reserve(static_cast<size_t>(T_a));
    obs.q.reserve(static_cast<size_t>(T_a));
    obs.phi.reserve(static_cast<size_t>(T_a));
    // slot encodes (t, channel); channels are p:[0,N) q:[N,2N) phi:[2N,2N+L)
    const uint64_t stride = static_cast<uint64_t>(2 * N + L);
    for (int t = 0; t < T_a; ++t) {
        Vec pt(N), qt(N), ft(L);
        const uint64_t base = static_cast<uint64_t>(t) * stride;
        for (Index i = 0; i < N; ++i)
            pt[i] = state.p[i] + noise.sigma_p * Philox::normal(seed, run, base + static_cast<uint64_t>(i));
        for (Index i = 0; i < N; ++i)
            qt[i] = state.q[i] + noise.sigma_q * Philox::normal(seed, run, base + static_cast<uint64_t>(N + i));
        for (Index i = 0; i < L; ++i)
            ft[i] = state.phi[i] + noise.sigma_phi * Philox::normal(seed, run, base + static_cast<uint64_t>(2 * N + i));
        obs.p.push_back(std::move(pt));
        obs.q.push_back(std::move(qt));
        obs.phi.push_back(std::move(ft));
    }
    obs.refresh_sums(placement, noise);
    return obs;
}

}  // namespace gasnet
