#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

namespace uavrl {

// 3D UAV position; h is altitude above ground in meters.
struct Position3 {
    double x = 0.0;
    double y = 0.0;
    double h = 0.0;
};

// Ground user position in meters.
struct Position2 {
    double x = 0.0;
    double y = 0.0;
};

// Uplink channel parameters, stored in linear units. Config loaders are
// responsible for any dB/dBm conversion before constructing this.
struct ChannelParams {
    double beta0 = 1e-5;         // power gain at 1 m reference distance
    double bandwidth_hz = 1e6;   // B
    double noise_power_w = 1e-14;
    double tx_power_w = 5.0;     // per-user uplink transmit power
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Slant distance between the UAV and a ground user.
inline double distance(const Position3& uav, const Position2& user) {
    const double dx = uav.x - user.x;
    const double dy = uav.y - user.y;
    return std::sqrt(dx * dx + dy * dy + uav.h * uav.h);
}

// Free-space path gain beta0 * d^-2. The exponent is fixed at 2.
inline double channel_gain(double d, const ChannelParams& params) {
    if (d <= 0.0)
        throw std::domain_error("channel_gain: distance must be positive");
    return params.beta0 / (d * d);
}

// Achievable uplink throughput in bits/s for one transmitter whose channel
// gain is target_gain, with every gain in interferer_gains transmitting
// simultaneously at the same power.
inline double uplink_rate(double target_gain, std::span<const double> interferer_gains,
                          const ChannelParams& params) {
    double interference = 0.0;
    for (double g : interferer_gains) interference += params.tx_power_w * g;
    const double sinr =
        params.tx_power_w * target_gain / (interference + params.noise_power_w);
    return params.bandwidth_hz * std::log2(1.0 + sinr);
}

// One left-Riemann step of the received-data integral.
inline double accumulate(double prev_bits, double rate_bps, double dt_s) {
    return prev_bits + rate_bps * dt_s;
}

}  // namespace uavrl
