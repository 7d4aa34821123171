#pragma once
//
// Euler–Maruyama integration of the four processes of the reduction and the
// path weights that turn their expectations into kernels:
//
//   original     flat Brownian motion on Ṙ² × R², variance λ per unit time
//   adapted      the same process in adapted coordinates (Q*, f̃, a)
//   transformed  adapted process driven by the rotated noise (w̃^(m), w̃^b̄, w̃^(β))
//   xi           orbit-space part of the transformed process
//   xi_tilde     Brownian motion of the orbit metric, generator (λ/2)Δ_M̃
//
// Near the axis the drifts scale like 1/Q*², so every process except the
// flat one refines its step to h = min(dt, c·Q*²/λ). Paths that still come
// within eps_min of the axis are discarded and counted.

#include "orbitkernel/generators.hpp"
#include "orbitkernel/geometry.hpp"
#include "orbitkernel/random.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace orbitkernel {

/// Group-invariant potential V = c₁·Q*² + c₂·(f̃₁² + f̃₂²).
struct InvariantPotential {
    double c1 = 0.0;
    double c2 = 0.0;

    bool is_zero() const { return c1 == 0.0 && c2 == 0.0; }
    double operator()(const OrbitPoint& x) const { return c1 * x.q_star * x.q_star + c2 * x.rho_sq(); }
};

struct SimParams {
    double lambda = 1.0;       ///< μ²κ, diffusion scale (length²/time)
    double mass = 1.0;
    double dt = 1e-3;
    double t_total = 0.5;
    double eps_min = kDefaultEpsMin;
    std::uint64_t seed = 1;
    std::size_t n_paths = 1000;
    InvariantPotential potential;
    bool include_jacobian = true; ///< add J to the path weight
    double axis_refine = 0.01;    ///< c in h = c·Q*²/λ
    double min_substep = 1e-14; ///< c·eps_min²/λ for the defaults

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

enum class ProcessKind { original, adapted, transformed, xi, xi_tilde };
enum class ReducedMode { xi, xi_tilde };

std::string to_string(ProcessKind kind);
/// Throws ConfigError for unknown names.
ProcessKind parse_process_kind(const std::string& name);

using PathPosition = std::variant<EuclideanPoint, AdaptedPoint, OrbitPoint>;

struct PathState {
    PathPosition position;
    double time = 0.0;
    double weight_log = 0.0;   ///< ∫ [V/(λm) + J] du (J only if include_jacobian)
    double jacobian_log = 0.0; ///< ∫ J du, tracked regardless of include_jacobian
    Complex phase{1.0, 0.0};   ///< accumulated filtering factor D̂ₙ / e^{inθ₀}
};

/// Orbit-space projection of any path position.
OrbitPoint orbit_part(const PathPosition& pos, double eps_min = kDefaultEpsMin);

enum class StepStatus { ok, axis_hit };

/// Flat increment: every coordinate += √(λh)·dw_i.
StepStatus step_original(PathState& s, std::span<const double, 4> dw, const SimParams& p, double h);

/// Adapted-coordinate SDEs with noise (w^(m), w^(α), w¹, w²).
StepStatus step_adapted(PathState& s, std::span<const double, 4> dw, const SimParams& p, double h);

/// Transformed SDEs with noise (w̃^(m), w̃^1̄, w̃^2̄, w̃^(β)).
StepStatus step_transformed(PathState& s, std::span<const double, 4> dw, const SimParams& p,
                            double h);

/// Orbit-space SDE with noise (w̃^(m), w̃^1̄, w̃^2̄).
StepStatus step_reduced(PathState& s, std::span<const double, 3> dw, const SimParams& p,
                        double h, ReducedMode mode);

/// Add one step of Feynman–Kac weight (midpoint rule) and, for n ≠ 0, the
/// filtering factor exp{−λn²h/(2d) − i n √(λh) 𝒜_c X̃^c_b̄ w̃^b̄} at x_prev.
void accumulate_weights(PathState& s, const OrbitPoint& x_prev, const OrbitPoint& x_next, int n,
                        const SimParams& p, double h, std::span<const double, 2> dw_bar);

/// Step size actually used from state x: h = min(dt, max(min_substep, c·Q*²/λ)).
double refined_step(double q_star, const SimParams& p);

struct Sample {
    double time = 0.0;
    AdaptedPoint end;          ///< angle is NaN for orbit-space processes
    double weight_log = 0.0;
    double jacobian_log = 0.0;
    Complex phase{1.0, 0.0};
    bool discarded = false;
};

struct SampleSet {
    ProcessKind kind = ProcessKind::xi_tilde;
    int n = 0;
    std::vector<Sample> samples; ///< indexed by path
    std::size_t discarded = 0;
};

/// p.n_paths independent paths from start over [0, t], path i driven by
/// NoiseStream(p.seed, i). Deterministic given (p, kind, n, start, t).
SampleSet simulate_batch(ProcessKind kind, int n, const SimParams& p, const AdaptedPoint& start,
                         double t);

/// Columns: time,q_star,ft1,ft2,weight_log,phase_re,phase_im,discarded
void write_samples_csv(std::ostream& os, const SampleSet& set);

} // namespace orbitkernel
