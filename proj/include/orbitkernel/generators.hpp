#pragma once
//
// Differential generators applied to test functions by central differences.
//
// Coefficients come from the closed-form geometry; derivatives are second
// order central differences with a configurable step, so every operator here
// carries an O(step²) truncation error plus O(eps/step²) round-off.

#include "orbitkernel/geometry.hpp"

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace orbitkernel {

using Complex = std::complex<double>;

/// Complex-valued function on the orbit space (a Fourier coefficient c_n).
using ScalarField = std::function<Complex(const OrbitPoint&)>;
/// Real-valued function on the orbit space.
using RealField = std::function<double(const OrbitPoint&)>;

/// Second-order central differences with step h in [1e-7, 1e-2].
class FdScheme {
public:
    explicit FdScheme(double step = 1e-4);
    double step() const { return step_; }

private:
    double step_;
};

/// The n-th reduced generator applied to phi at x:
///   (λ/2){∂²_Q* + (1/Q*)∂_Q* + R^{ab}∂²_ab − (1/Q*²) f̃·∂_f̃
///         + (in)(2/Q*²)(f̃₂∂_f̃₁ − f̃₁∂_f̃₂) − n²/Q*²} phi.
/// The sign of the imaginary term matches Fourier modes e^{ina} of the flat
/// Laplacian in the coordinates of geometry.hpp.
Complex apply_reduced_generator(const ScalarField& phi, int n, const OrbitPoint& x,
                                double lambda, const FdScheme& fd,
                                double eps_min = kDefaultEpsMin);

/// Flat 4D Laplacian of the equivariant lift phi(π(p))·e^{i n a(p)}.
Complex apply_flat_laplacian_lifted(const ScalarField& phi, int n, const EuclideanPoint& p,
                                    const FdScheme& fd, double eps_min = kDefaultEpsMin);

/// Laplace–Beltrami operator of the orbit metric in divergence form,
/// H^{-1/2} ∂_i(h^{ij} H^{1/2} ∂_j phi), by nested central differences.
double apply_lb_orbit(const RealField& phi, const OrbitPoint& x, const FdScheme& fd,
                      double eps_min = kDefaultEpsMin);

/// ⟨∂phi, ∂phi⟩ in the orbit metric.
double orbit_gradient_sq(const RealField& phi, const OrbitPoint& x, const FdScheme& fd,
                         double eps_min = kDefaultEpsMin);

/// Δσ + ¼⟨∂σ,∂σ⟩ for σ = ln d, by finite differences; equals 3/d analytically.
double jacobian_scalar_fd(const OrbitPoint& x, const FdScheme& fd,
                          double eps_min = kDefaultEpsMin);

/// |(λ/2)Δ₄[phi·e^{ina}](p) − e^{ina}·L_red^{(n)}[phi](π(p))|.
double equivariance_residual(const ScalarField& phi, int n, const EuclideanPoint& p,
                             double lambda, const FdScheme& fd,
                             double eps_min = kDefaultEpsMin);

/// Both sides of the filtering-rate identity
///   −λn²/(2d) = −λn²/(2Q*²) + (λn²/2)·𝒜ᵀR𝒜.
struct FilterRateSides {
    double solution_rate;  ///< rate in the exponent of the D̂ₙ solution
    double equation_rate;  ///< linear-equation rate plus the Itô correction
};
FilterRateSides filter_rate_sides(const OrbitPoint& x, double lambda, int n);

/// A named test function used by the operator checks.
struct TestFunction {
    std::string name;
    ScalarField field;
};

ScalarField constant_field(double c);
/// c0 + c1 Q* + c2 f̃₁ + c3 f̃₂
ScalarField affine_field(double c0, double c1, double c2, double c3);
/// Q*^a f̃₁^b f̃₂^c
ScalarField monomial_field(int a, int b, int c);
/// exp(−|x − x₀|² / (2 s²))
ScalarField gaussian_bump(const OrbitPoint& center, double width);

/// The five-member family used by the equivariance checks.
std::vector<TestFunction> standard_test_functions();

} // namespace orbitkernel
