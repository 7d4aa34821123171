#include "orbitkernel/errors.hpp"
#include "orbitkernel/geometry.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <Eigen/LU>

#include <cmath>
#include <random>

using namespace orbitkernel;

namespace {

std::vector<AdaptedPoint> sample_points(int n, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> uq(0.2, 5.0);
    std::uniform_real_distribution<double> uf(-3.0, 3.0);
    std::uniform_real_distribution<double> ua(0.0, 2.0 * oracle::pi);
    std::vector<AdaptedPoint> pts;
    for (int i = 0; i < n; ++i) pts.push_back({uq(gen), uf(gen), uf(gen), ua(gen)});
    return pts;
}

// Jacobian of (Q*, f̃¹, f̃², a) ↦ (Q¹, Q², f¹, f²).
Mat4 chart_jacobian(const AdaptedPoint& x)
{
    const double c = std::cos(x.angle);
    const double s = std::sin(x.angle);
    Mat4 j;
    j << c, 0, 0, -x.q_star * s,
        -s, 0, 0, -x.q_star * c,
        0, c, -s, -x.ft1 * s - x.ft2 * c,
        0, s, c, x.ft1 * c - x.ft2 * s;
    return j;
}

} // namespace

TEST_CASE("adapted metric is the pullback of the flat metric")
{
    for (const auto& x : sample_points(200, 11)) {
        const Mat4 jac = chart_jacobian(x);
        const Mat4 pullback = jac.transpose() * jac;
        const GeometryBundle g = geometry_at(x);
        CHECK((g.g_adapted - pullback).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + x.base().d()));
        CHECK(g.det_g == doctest::Approx(pullback.determinant()).epsilon(1e-10));
        // horizontal projection along the fibre direction a
        Mat3 h;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) h(i, k) = pullback(i, k) - pullback(i, 3) * pullback(k, 3) / pullback(3, 3);
        CHECK((g.h_orbit - h).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(g.h_det == doctest::Approx(h.determinant()).epsilon(1e-10));
        // connection 𝒜 = G_{ia}/G_{aa}
        for (int i = 0; i < 3; ++i) CHECK(g.conn(i) == doctest::Approx(pullback(i, 3) / pullback(3, 3)));
    }
}

TEST_CASE("inverse metric and projector entries agree with R")
{
    for (const auto& x : sample_points(200, 12)) {
        const Mat4 pullback = chart_jacobian(x).transpose() * chart_jacobian(x);
        const Mat4 inv = pullback.inverse();
        const GeometryBundle g = geometry_at(x);
        CHECK((g.g_inverse - inv).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + inv.cwiseAbs().maxCoeff()));
        const double q = x.q_star;
        CHECK(g.h_orbit(1, 2) == doctest::Approx(x.ft1 * x.ft2 / x.base().d()).epsilon(1e-12));
        // N₂ and Λ₂ carry 1/Q*, which is what R = I + N Nᵀ and Λ₂Φ = 1 require
        const Mat2 from_n = Mat2::Identity() + g.proj_n * g.proj_n.transpose();
        CHECK((g.r_matrix - oracle::r_matrix(q, x.ft1, x.ft2)).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + x.base().d() / (q * q)));
        CHECK((g.r_matrix - from_n).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + x.base().d() / (q * q)));
        CHECK(g.lambda2 * g.phi_fp == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("square root of R matches the eigendecomposition")
{
    for (const auto& x : sample_points(200, 12)) {
        const Mat2 expected = oracle::sqrt_spd(oracle::r_matrix(x.q_star, x.ft1, x.ft2));
        const Mat2 got = sqrt_r_matrix(x.base());
        CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-10 * expected.cwiseAbs().maxCoeff());
    }
    CHECK(sqrt_r_matrix({0.7, 0.0, 0.0}) == Mat2::Identity());
}

TEST_CASE("round trip through adapted coordinates")
{
    for (const auto& x : sample_points(200, 13)) {
        const AdaptedPoint y = to_adapted(from_adapted(x));
        CHECK(y.q_star == doctest::Approx(x.q_star).epsilon(1e-14));
        CHECK(y.ft1 == doctest::Approx(x.ft1).epsilon(1e-13).scale(1.0));
        CHECK(y.ft2 == doctest::Approx(x.ft2).epsilon(1e-13).scale(1.0));
        CHECK(std::remainder(y.angle - x.angle, 2.0 * oracle::pi) == doctest::Approx(0.0).epsilon(1e-13).scale(1.0));
        CHECK(y.angle >= 0.0);
        CHECK(y.angle < 2.0 * oracle::pi);
    }
}

TEST_CASE("group action shifts the angle and fixes the base")
{
    for (const auto& x : sample_points(50, 14)) {
        const double theta = 0.37 + x.ft1;
        const AdaptedPoint y = to_adapted(group_act(from_adapted(x), theta));
        CHECK(y.q_star == doctest::Approx(x.q_star).epsilon(1e-13));
        CHECK(y.ft1 == doctest::Approx(x.ft1).epsilon(1e-12).scale(1.0));
        CHECK(y.ft2 == doctest::Approx(x.ft2).epsilon(1e-12).scale(1.0));
        CHECK(std::remainder(y.angle - x.angle - theta, 2.0 * oracle::pi) == doctest::Approx(0.0).scale(1.0));
    }
    CHECK(normalize_angle(-0.5) == doctest::Approx(2.0 * oracle::pi - 0.5));
    CHECK(normalize_angle(2.0 * oracle::pi) == 0.0);
}

TEST_CASE("points on the axis are rejected")
{
    CHECK_THROWS_AS(to_adapted({1e-8, 0.0, 1.0, 1.0}), DegeneratePoint);
    CHECK_THROWS_AS(geometry_at(OrbitPoint{1e-9, 0.0, 0.0}), DegeneratePoint);
    CHECK_NOTHROW(to_adapted({2e-6, 0.0, 0.0, 0.0}));
}

TEST_CASE("Jacobian potential")
{
    // d = 3, λ = 1: J = −1/8
    CHECK(jacobian_potential({1.0, 1.0, 1.0}, 1.0) == doctest::Approx(-0.125));
    CHECK(jacobian_potential({2.0, 0.0, 0.0}, 4.0) == doctest::Approx(-4.0 / 8.0 * 3.0 / 4.0));
}

TEST_CASE("injected fault flips the f1 connection component")
{
    const OrbitPoint x{0.8, 0.4, -1.1};
    const GeometryBundle ok = geometry_at(x);
    const GeometryBundle bad = geometry_at(x, kDefaultEpsMin, GeometryFault::flip_conn_f1);
    CHECK(bad.conn(1) == -ok.conn(1));
    CHECK(bad.conn(2) == ok.conn(2));
    CHECK((ok.r_matrix * ok.z_vec + ok.killing_f / ok.gamma).norm() < 1e-14);
    CHECK((bad.r_matrix * bad.z_vec + bad.killing_f / bad.gamma).norm() > 0.1);
}

TEST_CASE("debug JSON round-trips doubles")
{
    const GeometryBundle g = geometry_at(OrbitPoint{1.3, 0.1, 2.2});
    const auto j = nlohmann::json::parse(to_debug_json(g));
    CHECK(j.at("lambda2").get<double>() == g.lambda2);
    CHECK(j.at("proj_n")[1].get<double>() == g.proj_n(1));
}
