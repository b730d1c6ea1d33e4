#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "kdvcn/weight.hpp"

using namespace kdvcn;

namespace {

// Closed-form antiderivative of the quintic smoothstep squared on [0,1]:
// s(t)^2 = 36 t^10 - 180 t^9 + 345 t^8 - 300 t^7 + 100 t^6.
double smoothstep5_sq_integral(double t) {
    return ((((36.0 / 11.0 * t - 18.0) * t + 345.0 / 9.0) * t - 300.0 / 8.0) * t + 100.0 / 7.0) *
           t * t * t * t * t * t * t;
}

// Independent oracle for p(x) = 1 + int_{-inf}^x omega^2 built from the
// closed form, band by band.
double p_oracle(double x, double R) {
    const double band = smoothstep5_sq_integral(1.0);
    if (x <= -R - 1.0) return 1.0;
    if (x <= -R) return 1.0 + smoothstep5_sq_integral(x + R + 1.0);
    if (x <= R) return 1.0 + band + (x + R);
    if (x <= R + 1.0) return 1.0 + band + 2.0 * R + (band - smoothstep5_sq_integral(R + 1.0 - x));
    return 1.0 + 2.0 * band + 2.0 * R;
}

} // namespace

TEST_CASE("weight profile invariants hold at every node") {
    const double R = 5.0;
    const Grid g = Grid::over(-10.0, 10.0, 640);
    const WeightProfile wp = build_weight(g, R);

    for (std::int64_t j = 0; j < g.n_cells; ++j) {
        const double x = g.x(j);
        CHECK(wp.p[j] >= 1.0);
        CHECK(wp.p[j] <= 3.0 + 2.0 * R);
        CHECK(wp.p1[j] >= 0.0);
        CHECK(wp.p1[j] <= 1.0);
        if (std::abs(x) < R) CHECK(wp.p1[j] == 1.0);
        if (std::abs(x) >= R + 1.0) CHECK(wp.p1[j] == 0.0);
        CHECK(wp.c_R >= std::abs(wp.p[j]));
        CHECK(wp.c_R >= std::abs(wp.p1[j]));
        CHECK(wp.c_R >= std::abs(wp.p2[j]));
        CHECK(wp.c_R >= std::abs(wp.p3[j]));
    }
    // p is nondecreasing
    for (std::int64_t j = 0; j + 1 < g.n_cells; ++j) CHECK(wp.p[j] <= wp.p[j + 1]);
}

TEST_CASE("quadrature for p matches the closed-form antiderivative") {
    const double R = 3.0;
    const Grid g = Grid::over(-8.0, 8.0, 256);
    const WeightProfile wp = build_weight(g, R);
    for (std::int64_t j = 0; j < g.n_cells; ++j)
        CHECK(wp.p[j] == Catch::Approx(p_oracle(g.x(j), R)).epsilon(1e-10));
}

TEST_CASE("c_R for R=5 matches the dense-sampling oracle value") {
    const Grid g = Grid::over(-10.0, 10.0, 400);
    const WeightProfile wp = build_weight(g, 5.0);
    // frozen from the 16x fine-sampling maximization: dominated by sup p
    // = 1 + 2R + 2*int_0^1 s^2
    CHECK(wp.c_R == Catch::Approx(11.783549783549791).epsilon(1e-9));
}

TEST_CASE("weighted inner product and norm bounds") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double R = 4.0;
    const Grid g = Grid::over(-12.0, 12.0, 300);
    const WeightProfile wp = build_weight(g, R);

    GridFunction zero(g);
    CHECK(weighted_inner(zero, zero, wp) == 0.0);

    for (int iter = 0; iter < 50; ++iter) {
        GridFunction v(g), w(g);
        for (std::int64_t j = 0; j < g.n_cells; ++j) {
            v[j] = uni(rng);
            w[j] = uni(rng);
        }
        double oracle = 0.0;
        for (std::int64_t j = 0; j < g.n_cells; ++j) oracle += wp.p[j] * v[j] * w[j];
        oracle *= g.dx;
        CHECK(weighted_inner(v, w, wp) == Catch::Approx(oracle).epsilon(1e-13).margin(1e-15));

        const double plain = norm_l2(v), weighted = norm_p(v, wp);
        CHECK(plain <= weighted * (1.0 + 1e-14));
        CHECK(weighted <= std::sqrt(3.0 + 2.0 * R) * plain * (1.0 + 1e-14));
    }

    const Grid other(300, 0.05, 0.0);
    CHECK_THROWS_AS(weighted_inner(GridFunction(other), GridFunction(other), wp), DimensionError);
}

TEST_CASE("radius too large for the window is rejected") {
    const Grid g = Grid::over(-5.0, 5.0, 100);
    CHECK_THROWS_AS(build_weight(g, 4.0), ConfigError);   // R+1 = 5 not < 5
    CHECK_THROWS_AS(build_weight(g, -1.0), ConfigError);
    CHECK_NOTHROW(build_weight(g, 3.5));
}

TEST_CASE("weight build is deterministic") {
    const Grid g = Grid::over(-10.0, 10.0, 200);
    const WeightProfile a = build_weight(g, 5.0), b = build_weight(g, 5.0);
    CHECK(a.c_R == b.c_R);
    for (std::int64_t j = 0; j < g.n_cells; ++j) {
        CHECK(a.p[j] == b.p[j]);
        CHECK(a.p3[j] == b.p3[j]);
    }
}
