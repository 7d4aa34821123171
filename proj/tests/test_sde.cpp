#include "orbitkernel/errors.hpp"
#include "orbitkernel/random.hpp"
#include "orbitkernel/sde.hpp"
#include "orbitkernel/stats.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <sstream>

using namespace orbitkernel;

namespace {

double elapsed_time(const PathState& s) { return s.time; }

} // namespace

TEST_CASE("parameter validation")
{
    SimParams p;
    CHECK_NOTHROW(p.validate());
    p.dt = 1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = SimParams{};
    p.eps_min = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK(parse_process_kind("xi_tilde") == ProcessKind::xi_tilde);
    CHECK_THROWS_AS(parse_process_kind("bogus"), ConfigError);
}

TEST_CASE("zero noise")
{
    SimParams p;
    const std::array<double, 4> zero4{};
    PathState s;
    s.position = EuclideanPoint{0.3, -0.2, 1.0, 2.0};
    REQUIRE(step_original(s, zero4, p, 1e-3) == StepStatus::ok);
    const auto& e = std::get<EuclideanPoint>(s.position);
    CHECK(e.q1 == 0.3);
    CHECK(e.q2 == -0.2);
    CHECK(e.f1 == 1.0);
    CHECK(e.f2 == 2.0);
    CHECK(elapsed_time(s) == doctest::Approx(1e-3));

    // f̃ = 0 and no noise: pure radial drift (λ/2)/Q*
    PathState a;
    a.position = AdaptedPoint{2.0, 0.0, 0.0, 1.0};
    p.lambda = 0.6;
    REQUIRE(step_adapted(a, zero4, p, 1e-3) == StepStatus::ok);
    const auto& ap = std::get<AdaptedPoint>(a.position);
    CHECK(ap.q_star == doctest::Approx(2.0 + 0.3 / 2.0 * 1e-3).epsilon(1e-14));
    CHECK(ap.ft1 == 0.0);
    CHECK(ap.angle == 1.0);
}

TEST_CASE("drift gap between the two reduced processes")
{
    SimParams p;
    p.lambda = 1.4;
    const std::array<double, 3> zero3{};
    const OrbitPoint x{0.9, 0.5, -0.7};
    const double h = 1e-4;
    PathState a;
    PathState b;
    a.position = x;
    b.position = x;
    step_reduced(a, zero3, p, h, ReducedMode::xi);
    step_reduced(b, zero3, p, h, ReducedMode::xi_tilde);
    const OrbitPoint ya = std::get<OrbitPoint>(a.position);
    const OrbitPoint yb = std::get<OrbitPoint>(b.position);
    const double d = x.d();
    CHECK(ya.q_star - yb.q_star == doctest::Approx(p.lambda / 2.0 * x.q_star / d * h).epsilon(1e-9));
    CHECK(ya.ft1 - yb.ft1 == doctest::Approx(p.lambda / 2.0 * x.ft1 / d * h).epsilon(1e-9));
    CHECK(ya.ft2 - yb.ft2 == doctest::Approx(p.lambda / 2.0 * x.ft2 / d * h).epsilon(1e-9));
}

TEST_CASE("flat increments have variance lambda dt")
{
    SimParams p;
    p.lambda = 2.5;
    const double h = 1e-3;
    NoiseStream rng(3, 0);
    const int n = 1000000;
    std::vector<double> dq(n);
    for (int i = 0; i < n; ++i) {
        PathState s;
        s.position = EuclideanPoint{1.0, 0.0, 0.0, 0.0};
        std::array<double, 4> dw;
        rng.fill_normals(dw);
        step_original(s, dw, p, h);
        dq[i] = std::get<EuclideanPoint>(s.position).q1 - 1.0;
    }
    const double m = oracle::mean(dq);
    double var = 0.0;
    for (double v : dq) var += (v - m) * (v - m);
    var /= n - 1;
    // Var of the sample variance of a Gaussian: 2σ⁴/(n−1)
    const double sigma2 = p.lambda * h;
    CHECK(std::abs(var - sigma2) < 3.0 * sigma2 * std::sqrt(2.0 / (n - 1)));
    CHECK(std::abs(m) < 3.0 * std::sqrt(sigma2 / n));
}

TEST_CASE("one-step moments of the adapted and transformed processes agree")
{
    SimParams p;
    const double h = 1e-3;
    const AdaptedPoint x{0.8, 0.6, -0.4, 0.5};
    const int n = 400000;
    const GeometryBundle g = geometry_at(x);
    const double gamma = x.q_star * x.q_star;
    const double expected_var_a = h * p.lambda / gamma;
    auto run = [&](bool transformed, std::uint64_t seed) {
        std::vector<std::array<double, 4>> inc(n);
        for (int i = 0; i < n; ++i) {
            NoiseStream rng(seed, static_cast<std::uint64_t>(i));
            std::array<double, 4> dw;
            rng.fill_normals(dw);
            PathState s;
            s.position = x;
            if (transformed) step_transformed(s, dw, p, h);
            else step_adapted(s, dw, p, h);
            const auto& y = std::get<AdaptedPoint>(s.position);
            inc[i] = {y.q_star - x.q_star, y.ft1 - x.ft1, y.ft2 - x.ft2,
                      std::remainder(y.angle - x.angle, 2.0 * oracle::pi)};
        }
        return inc;
    };
    const auto a = run(false, 31);
    const auto b = run(true, 32);
    auto moment = [&](const std::vector<std::array<double, 4>>& v, int i, int j) {
        std::vector<double> xs(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) xs[k] = v[k][i] * (j < 0 ? 1.0 : v[k][j]);
        return std::pair{oracle::mean(xs), oracle::stderr_of_mean(xs)};
    };
    for (int i = 0; i < 4; ++i) {
        const auto [ma, sa] = moment(a, i, -1);
        const auto [mb, sb] = moment(b, i, -1);
        CHECK(std::abs(ma - mb) < 3.0 * std::hypot(sa, sb));
        for (int j = i; j < 4; ++j) {
            const auto [ca, csa] = moment(a, i, j);
            const auto [cb, csb] = moment(b, i, j);
            CHECK(std::abs(ca - cb) < 3.0 * std::hypot(csa, csb));
        }
    }
    // Var Δa = λh/γ; Cov(Δf̃ᵃ, Δa) = λh G^{f̃ᵃa} = λh (f̃₂, −f̃₁)/Q*²
    const auto [vb, svb] = moment(b, 3, 3);
    CHECK(std::abs(vb - expected_var_a) < 3.0 * svb);
    const auto [c1, sc1] = moment(a, 1, 3);
    const auto [c2, sc2] = moment(a, 2, 3);
    CHECK(std::abs(c1 - p.lambda * h * x.ft2 / gamma) < 3.0 * sc1);
    CHECK(std::abs(c2 - p.lambda * h * (-x.ft1) / gamma) < 3.0 * sc2);
    CHECK(c1 * g.g_inverse(1, 3) > 0.0);
    CHECK(c2 * g.g_inverse(2, 3) > 0.0);
    // Cov(Δf̃) = λh R
    const auto [r11, sr11] = moment(a, 1, 1);
    const auto [r12, sr12] = moment(a, 1, 2);
    CHECK(std::abs(r11 - p.lambda * h * g.r_matrix(0, 0)) < 3.0 * sr11);
    CHECK(std::abs(r12 - p.lambda * h * g.r_matrix(0, 1)) < 3.0 * sr12);
}

TEST_CASE("short-time drift of the reduced process is the Laplace-Beltrami drift")
{
    SimParams p;
    const OrbitPoint x{1.1, -0.3, 0.8};
    const double h = 1e-4;
    const int n = 400000;
    std::vector<double> dq(n);
    std::vector<double> df(n);
    for (int i = 0; i < n; ++i) {
        NoiseStream rng(41, static_cast<std::uint64_t>(i));
        std::array<double, 3> dw;
        rng.fill_normals(dw);
        PathState s;
        s.position = x;
        step_reduced(s, dw, p, h, ReducedMode::xi_tilde);
        const auto& y = std::get<OrbitPoint>(s.position);
        dq[i] = (y.q_star - x.q_star) / h;
        df[i] = (y.ft1 - x.ft1) / h;
    }
    const double d = x.d();
    const double q2 = x.q_star * x.q_star;
    CHECK(std::abs(oracle::mean(dq) - 0.5 * (1.0 / x.q_star - x.q_star / d)) < 3.0 * oracle::stderr_of_mean(dq));
    CHECK(std::abs(oracle::mean(df) + 0.5 * (x.ft1 / q2 + x.ft1 / d)) < 3.0 * oracle::stderr_of_mean(df));
}

TEST_CASE("weights")
{
    SimParams p;
    PathState s;
    const OrbitPoint x{1.0, 1.0, 1.0};
    s.position = x;
    const std::array<double, 2> dw{0.3, -1.2};
    accumulate_weights(s, x, x, 0, p, 0.01, dw);
    CHECK(s.weight_log == doctest::Approx(-0.00125));
    CHECK(s.jacobian_log == doctest::Approx(-0.00125));
    CHECK(s.phase == Complex(1.0, 0.0));

    p.include_jacobian = false;
    p.potential = {0.5, 0.0};
    PathState t;
    accumulate_weights(t, x, x, 3, p, 0.01, dw);
    CHECK(t.weight_log == doctest::Approx(0.01 * 0.5));
    CHECK(t.jacobian_log == doctest::Approx(-0.00125));
    CHECK(std::abs(t.phase) == doctest::Approx(std::exp(-9.0 * 0.01 / 6.0)));
}

TEST_CASE("determinism and CSV layout")
{
    SimParams p;
    p.n_paths = 50;
    p.seed = 99;
    const AdaptedPoint start{1.0, 0.5, 0.0, 0.0};
    for (ProcessKind k : {ProcessKind::original, ProcessKind::adapted, ProcessKind::transformed, ProcessKind::xi,
                          ProcessKind::xi_tilde}) {
        std::ostringstream a;
        std::ostringstream b;
        write_samples_csv(a, simulate_batch(k, 1, p, start, 0.2));
        write_samples_csv(b, simulate_batch(k, 1, p, start, 0.2));
        CHECK(a.str() == b.str());
        CHECK(a.str().rfind("time,q_star,ft1,ft2,weight_log,phase_re,phase_im,discarded\n", 0) == 0);
    }
    SimParams one = p;
    one.n_paths = 1;
    const SampleSet s1 = simulate_batch(ProcessKind::xi_tilde, 0, one, start, 0.2);
    const SampleSet s50 = simulate_batch(ProcessKind::xi_tilde, 0, p, start, 0.2);
    CHECK(s1.samples[0].end.q_star == s50.samples[0].end.q_star);
    CHECK(s50.samples[0].time == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("radial part matches the exact 2D Bessel process")
{
    SimParams p;
    p.n_paths = 100000;
    p.seed = 5;
    const double t = 0.5;
    const SampleSet set = simulate_batch(ProcessKind::adapted, 0, p, {1.0, 0.0, 0.0, 0.0}, t);
    std::vector<double> q;
    std::vector<double> q2;
    for (const auto& s : set.samples) {
        if (s.discarded) continue;
        q.push_back(s.end.q_star);
        q2.push_back(s.end.q_star * s.end.q_star);
    }
    const auto exact = oracle::bessel2_endpoints(1.0, t, p.lambda, 100000, 17);
    std::vector<double> exact2;
    for (double r : exact) exact2.push_back(r * r);
    MESSAGE("discarded " << set.discarded << " of " << set.samples.size());
    CHECK(std::abs(oracle::mean(q) - oracle::mean(exact))
          < 3.0 * std::hypot(oracle::stderr_of_mean(q), oracle::stderr_of_mean(exact)));
    CHECK(std::abs(oracle::mean(q2) - oracle::mean(exact2))
          < 3.0 * std::hypot(oracle::stderr_of_mean(q2), oracle::stderr_of_mean(exact2)));
    // discarded paths are conditioned away; removing a fraction p moves the CDF by at most p
    const double p_discard = static_cast<double>(set.discarded) / static_cast<double>(set.samples.size());
    const double ks = ks_statistic(q, exact);
    MESSAGE("KS " << ks << " discard fraction " << p_discard);
    CHECK(ks < ks_critical_value(q.size(), exact.size(), 0.01) + p_discard);
}

TEST_CASE("discards stay rare and weights stay in range")
{
    SimParams p;
    p.n_paths = 20000;
    const double t = 0.5;
    const SampleSet set = simulate_batch(ProcessKind::xi_tilde, 0, p, {1.0, 0.5, 0.0, 0.0}, t);
    const double frac = static_cast<double>(set.discarded) / static_cast<double>(set.samples.size());
    MESSAGE("discard fraction " << frac);
    CHECK(frac < 0.05);
    for (const auto& s : set.samples) {
        if (s.discarded) continue;
        REQUIRE(std::isfinite(s.weight_log));
        CHECK(s.weight_log < 0.0);
        CHECK(s.weight_log == s.jacobian_log);
        // J ≥ −3λ/(8 Q*²) along any path that stayed above eps_min
        CHECK(s.weight_log >= -3.0 * p.lambda / (8.0 * p.eps_min * p.eps_min) * t);
    }
}

TEST_CASE("frozen coefficients: phase decay")
{
    SimParams p;
    p.lambda = 0.8;
    const OrbitPoint x{0.9, 0.7, -0.2};
    const int n = 2;
    const double horizon = 0.5;
    const double h = 1e-3;
    const int paths = 50000;
    std::vector<double> re(paths);
    for (int i = 0; i < paths; ++i) {
        NoiseStream rng(61, static_cast<std::uint64_t>(i));
        PathState s;
        s.position = x;
        for (int k = 0; k < 500; ++k) {
            std::array<double, 2> dw;
            rng.fill_normals(dw);
            accumulate_weights(s, x, x, n, p, h, dw);
        }
        re[i] = s.phase.real();
        REQUIRE(std::norm(s.phase) == doctest::Approx(std::exp(-p.lambda * n * n * horizon / x.d())).epsilon(1e-12));
    }
    // the Itô correction of the rotation turns the 1/d rate into 1/Q*²
    const double expected = std::exp(-p.lambda * n * n * horizon / (2.0 * x.q_star * x.q_star));
    CHECK(std::abs(oracle::mean(re) - expected) < 3.0 * oracle::stderr_of_mean(re));
}
