#pragma once
//
// Both sides of the zero-momentum kernel relation
//
//   d_b^{-1/4} d_a^{-1/4} G_M̃(x_b, t; x_a) = (1/2π) ∫₀^{2π} G_P̃(θ·p_b, t; p_a) dθ
//
// G_M̃ is the kernel of (λ/2)Δ_M̃ + J with respect to the Riemannian volume
// √H dQ* df̃¹ df̃²; G_P̃ is the flat heat kernel with respect to the invariant
// volume whose fibre factor is the normalized Haar measure dθ/2π, i.e.
// 2π times the Lebesgue-normalized Gaussian. All kernels are compared as
// √H-weighted averages over an axis-aligned box in (Q*, f̃¹, f̃²).

#include "orbitkernel/geometry.hpp"
#include "orbitkernel/sde.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace orbitkernel {

/// Axis-aligned box in (Q*, f̃¹, f̃²).
struct Box {
    OrbitPoint center;
    double half_q = 0.1;
    double half_f1 = 0.1;
    double half_f2 = 0.1;

    bool contains(const OrbitPoint& x) const;
    double q_lo() const { return center.q_star - half_q; }
    double q_hi() const { return center.q_star + half_q; }
};

struct KernelQuery {
    OrbitPoint start;
    Box box;
    double t_elapsed = 0.5;
    SimParams params;
    int quad_points = 256;  ///< θ-quadrature nodes
    int box_order = 8;      ///< Gauss–Legendre points per box dimension
    int n_batches = 100;    ///< batch-means batches for the MC standard error

    /// Throws ConfigError if the box leaves q_star > eps_min or t ≤ 0.
    void validate() const;
};

/// 4D Gaussian (2πλt)^{-2} exp(−|pb − pa|²/(2λt)), Lebesgue-normalized.
double flat_heat_kernel(const EuclideanPoint& pa, const EuclideanPoint& pb, double t, double lambda);

/// (1/2π)∫ G_P̃ dθ between the gauge-surface lifts of a and b, trapezoid rule with
/// quad_points nodes. Throws QuadratureNotConverged if doubling the nodes moves the
/// result by more than 1e-10 relative.
double orbit_average_rhs(const OrbitPoint& a, const OrbitPoint& b, double t, double lambda,
                         int quad_points = 256);

/// √H-weighted box average of orbit_average_rhs(start, ·).
double orbit_average_rhs_box(const KernelQuery& q);

/// ∫_box √H dQ* df̃¹ df̃².
double box_riemannian_volume(const Box& box, int order = 8);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t hits = 0;
    std::size_t n_paths = 0;
    std::size_t discards = 0;
};

enum class JacobianWeight { as_simulated, removed };

/// Box-averaged kernel from endpoint samples: Σ_box exp(w)·d^{-power} / (N·∫_box √H).
/// Throws InsufficientSamples below 100 hits.
MonteCarloEstimate box_kernel_estimate(const SampleSet& set, const Box& box, int n_batches,
                                       JacobianWeight jac, double d_power = 0.0,
                                       int box_order = 8);

/// Simulates xi_tilde (n = 0) from q.start and returns the box-averaged kernel of
/// (λ/2)Δ_M̃ + J (+ V/(λm)).
MonteCarloEstimate reduced_kernel_mc(const KernelQuery& q);

struct GridSpec {
    double cell = 0.025;        ///< h in both Q* and ρ
    double q_max = 0.0;         ///< 0: chosen from start, box and √(λt)
    double rho_max = 0.0;
    double dt = 0.0;            ///< 0: cfl / (largest explicit diagonal)
    double cfl = 0.9;
    int max_modes = 64;
    double init_width_cells = 2.0;
    double mode_tolerance = 1e-10;
};

struct GridResult {
    double box_average = 0.0;
    double mass_initial = 0.0;
    double mass_final = 0.0;
    double absorbed_fraction = 0.0; ///< mass lost through the truncation boundary
    double dt = 0.0;
    double dt_max = 0.0;            ///< positivity bound of the explicit step
    std::size_t steps = 0;
    int modes_used = 0;
    bool boundary_mass_loss = false; ///< absorbed_fraction > 1%
};

/// Forward equation ∂u/∂t = (λ/2)Δ_M̃u + (J + V/(λm))u from a near-delta start,
/// solved as a cosine series in the f̃-plane angle with an explicit divergence-form
/// scheme in (Q*, ρ) per mode. Throws StabilityViolation if spec.dt exceeds the bound.
GridResult reduced_kernel_grid(const KernelQuery& q, const GridSpec& spec = {});

struct KernelReport {
    double lhs = 0.0;
    double lhs_stderr = 0.0;
    double rhs = 0.0;
    double residual = 0.0; ///< (lhs − rhs)/rhs
    double z = 0.0;        ///< (lhs − rhs)/lhs_stderr
    std::size_t n_paths = 0;
    std::size_t hits = 0;
    std::size_t discards = 0;
    bool quadrature_converged = true;
    // Same paths with J removed from the weights.
    double control_lhs = 0.0;
    double control_stderr = 0.0;
    double control_residual = 0.0;
    double control_z = 0.0;
    /// Box-averaged kernel before the d^{-1/4} factors (input to grid comparisons).
    double kernel_box = 0.0;
    double kernel_box_stderr = 0.0;
};

/// Runs the Monte-Carlo left side and the quadrature right side. Requires V = 0.
KernelReport verify_reduction_relation(const KernelQuery& q);

/// Same, reusing an existing xi_tilde sample set simulated for q.
KernelReport reduction_report_from_samples(const KernelQuery& q, const SampleSet& set);

} // namespace orbitkernel
