#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "uavrl/channel.hpp"
#include "uavrl/rng.hpp"

using namespace uavrl;

namespace {
const ChannelParams kTableParams{1e-5, 1e6, 1e-14, 5.0};
}

TEST_CASE("distance matches direct evaluation", "[channel]") {
    CHECK(distance({0, 0, 200}, {0, 0}) == Catch::Approx(200.0).epsilon(1e-12));
    CHECK(distance({100, 0, 100}, {100, 100}) ==
          Catch::Approx(141.4213562373095).epsilon(1e-12));
    CHECK(distance({0, 0, 0}, {3, 4}) == Catch::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("distance symmetry and translation invariance", "[channel]") {
    Rng rng(71);
    for (int i = 0; i < 200; ++i) {
        const double ux = rng.uniform(-500, 500), uy = rng.uniform(-500, 500);
        const double gx = rng.uniform(-500, 500), gy = rng.uniform(-500, 500);
        const double h = rng.uniform(1, 300);
        // swapping the x and y offsets reorders identical arithmetic
        CHECK(distance({ux, uy, h}, {gx, gy}) == distance({uy, ux, h}, {gy, gx}));
        const double sx = rng.uniform(-1000, 1000), sy = rng.uniform(-1000, 1000);
        CHECK(distance({ux + sx, uy + sy, h}, {gx + sx, gy + sy}) ==
              Catch::Approx(distance({ux, uy, h}, {gx, gy})).epsilon(1e-9));
    }
}

TEST_CASE("channel gain follows inverse-square law", "[channel]") {
    CHECK(channel_gain(1.0, kTableParams) == Catch::Approx(1e-5).epsilon(1e-12));
    CHECK(channel_gain(200.0, kTableParams) == Catch::Approx(2.5e-10).epsilon(1e-12));
    ChannelParams unit = kTableParams;
    unit.beta0 = 1.0;
    CHECK(channel_gain(2.0, unit) == Catch::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(channel_gain(0.0, kTableParams), std::domain_error);
}

TEST_CASE("gain times squared distance recovers the reference gain", "[channel]") {
    Rng rng(12);
    for (int i = 0; i < 500; ++i) {
        const double d = rng.uniform(0.1, 5000.0);
        CHECK(channel_gain(d, kTableParams) * d * d ==
              Catch::Approx(kTableParams.beta0).epsilon(1e-12));
    }
}

TEST_CASE("uplink rate worked values", "[channel]") {
    // single user at d = 200 m with Table-II-style parameters
    const double rate = uplink_rate(2.5e-10, {}, kTableParams);
    CHECK(rate == Catch::Approx(16931580.110838335).epsilon(1e-9));

    // one equal-gain interferer pushes the SINR to ~1, so the rate ~ B
    const double g = 2.5e-10;
    const std::vector<double> one{g};
    CHECK(uplink_rate(g, one, kTableParams) == Catch::Approx(1e6).epsilon(1e-4));
    CHECK(uplink_rate(g, one, kTableParams) < kTableParams.bandwidth_hz);

    // negligible signal gives negligible rate
    CHECK(uplink_rate(1e-30, {}, kTableParams) < 1e-3);
}

TEST_CASE("uplink rate monotonicity", "[channel]") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        const double g = rng.uniform(1e-12, 1e-8);
        std::vector<double> interferers = {rng.uniform(0, 1e-9), rng.uniform(0, 1e-9)};
        const double base = uplink_rate(g, interferers, kTableParams);

        // strictly increasing in the target gain
        CHECK(uplink_rate(g * 1.01, interferers, kTableParams) > base);

        // strictly decreasing in each interferer gain
        for (std::size_t j = 0; j < interferers.size(); ++j) {
            auto bumped = interferers;
            bumped[j] += 1e-10;
            CHECK(uplink_rate(g, bumped, kTableParams) < base);
        }
    }
}

TEST_CASE("uplink rate limits", "[channel]") {
    // unbounded growth in the target gain without interference
    double prev = 0.0;
    for (double g = 1e-10; g < 1e3; g *= 1e2) {
        const double r = uplink_rate(g, {}, kTableParams);
        CHECK(r > prev);
        prev = r;
    }
    CHECK(prev > 50e6);

    // vanishing rate as interference dominates
    const double g = 2.5e-10;
    CHECK(uplink_rate(g, std::vector<double>{1e3}, kTableParams) < 1.0);
}

TEST_CASE("accumulate is a left-Riemann step", "[channel]") {
    CHECK(accumulate(0.0, 1e6, 1.0) == 1e6);
    CHECK(accumulate(5e5, 0.0, 1.0) == 5e5);

    const double rate = uplink_rate(2.5e-10, {}, kTableParams);
    double bits = 0.0;
    for (int i = 0; i < 3; ++i) bits = accumulate(bits, rate, 1.0);
    CHECK(bits == Catch::Approx(50794740.332515).epsilon(1e-9));
}

TEST_CASE("accumulate over equal dyadic steps is exact", "[channel]") {
    // rate*dt chosen so each partial sum is exactly representable
    const double rate = 1048576.0;  // 2^20
    const double dt = 1.0;
    double bits = 0.0;
    for (int i = 1; i <= 10000; ++i) {
        bits = accumulate(bits, rate, dt);
        CHECK(bits == rate * dt * i);
    }

    const double frac_rate = 1.25, frac_dt = 0.5;
    bits = 0.0;
    for (int i = 1; i <= 10000; ++i) {
        bits = accumulate(bits, frac_rate, frac_dt);
        CHECK(bits == frac_rate * frac_dt * i);
    }
}

TEST_CASE("decibel conversions", "[channel]") {
    CHECK(db_to_linear(-50.0) == Catch::Approx(1e-5).epsilon(1e-12));
    CHECK(dbm_to_watts(-110.0) == Catch::Approx(1e-14).epsilon(1e-12));
    CHECK(db_to_linear(0.0) == 1.0);
}
