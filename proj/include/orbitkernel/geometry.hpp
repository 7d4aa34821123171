#pragma once
//
// Closed-form geometry of the SO(2)-symmetric system on Ṙ² × R².
//
// The group acts by rotating Q clockwise and f counter-clockwise. Adapted
// coordinates split a point into the orbit-space part (Q*, f̃¹, f̃²) and the
// group angle a; the gauge surface is the half line Q₂ = 0, Q₁ > 0:
//
//   Q₁ = Q* cos a        f₁ = f̃₁ cos a − f̃₂ sin a
//   Q₂ = −Q* sin a       f₂ = f̃₁ sin a + f̃₂ cos a
//
// Everything below is a pure function of its arguments.

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace orbitkernel {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Default radius of the excluded neighbourhood of the axis Q = 0.
inline constexpr double kDefaultEpsMin = 1e-6;

using Mat2 = Eigen::Matrix<double, 2, 2, Eigen::RowMajor>;
using Mat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;
using Mat4 = Eigen::Matrix<double, 4, 4, Eigen::RowMajor>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Point (Q¹, Q², f¹, f²) of Ṙ² × R² in the original flat coordinates.
struct EuclideanPoint {
    double q1 = 1.0;
    double q2 = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;

    double q_radius_sq() const { return q1 * q1 + q2 * q2; }
};

/// Point of the orbit space M̃ in gauge-surface coordinates (Q*, f̃¹, f̃²).
struct OrbitPoint {
    double q_star = 1.0;
    double ft1 = 0.0;
    double ft2 = 0.0;

    double rho_sq() const { return ft1 * ft1 + ft2 * ft2; }
    /// Squared norm of the Killing field, d = Q*² + f̃₁² + f̃₂².
    double d() const { return q_star * q_star + rho_sq(); }
};

/// Bundle coordinates (Q*, f̃¹, f̃², a) with a in [0, 2π).
struct AdaptedPoint {
    double q_star = 1.0;
    double ft1 = 0.0;
    double ft2 = 0.0;
    double angle = 0.0;

    OrbitPoint base() const { return {q_star, ft1, ft2}; }
};

/// Every geometric object at a point, in the basis order (∂Q*, ∂f̃¹, ∂f̃², ∂a).
struct GeometryBundle {
    Mat4 g_adapted;    ///< metric G_ÃB̃ in adapted coordinates
    Mat4 g_inverse;    ///< G^ÃB̃, closed form
    double det_g = 0;  ///< Q*²
    double d_scalar = 0;
    Vec3 conn;         ///< mechanical connection (𝒜_Q*, 𝒜_f1, 𝒜_f2)
    Vec2 killing_q;    ///< Killing field projected on the gauge surface, Q part
    Vec2 killing_f;    ///< Killing field, f̃ part
    double lambda2 = 0;
    double phi_fp = 0; ///< Faddeev–Popov matrix (1×1)
    Vec2 proj_n;       ///< projector components N^b₂
    Mat2 r_matrix;     ///< R^{ab}, the f̃-block of the orbit inverse metric
    Mat2 x_sqrt;       ///< symmetric square root of R
    Vec2 z_vec;        ///< Z_c solving R Z = −K_(f̃)/γ
    double x_group = 0; ///< d^{-1/2}
    Mat3 h_orbit;      ///< orbit-space metric
    Mat3 h_orbit_inv;  ///< its numerical inverse
    double h_det = 0;  ///< Q*²/d
    double sigma = 0;  ///< ln d
    double gamma = 0;  ///< Q*²
};

/// Test hook: corrupt one bundle entry so that identity checks can be shown to fire.
enum class GeometryFault {
    none,
    flip_conn_f1, ///< flip the sign of 𝒜_f1 before Z is derived from it
};

double normalize_angle(double angle);

EuclideanPoint group_act(const EuclideanPoint& p, double theta);

/// Throws DegeneratePoint if Q₁² + Q₂² < eps_min².
AdaptedPoint to_adapted(const EuclideanPoint& p, double eps_min = kDefaultEpsMin);

EuclideanPoint from_adapted(const AdaptedPoint& x);

/// Throws DegeneratePoint if q_star < eps_min.
GeometryBundle geometry_at(const OrbitPoint& x, double eps_min = kDefaultEpsMin,
                           GeometryFault fault = GeometryFault::none);

inline GeometryBundle geometry_at(const AdaptedPoint& x, double eps_min = kDefaultEpsMin)
{
    return geometry_at(x.base(), eps_min);
}

/// Symmetric square root of R in closed form: I + v vᵀ / (Q* (√d + Q*)), v = (f̃₂, −f̃₁).
Mat2 sqrt_r_matrix(const OrbitPoint& x);

/// Reduction Jacobian potential J = −(λ/8)·(3/d), λ = μ²κ.
double jacobian_potential(const OrbitPoint& x, double lambda);

/// Riemannian volume density √H = Q*/√d of the orbit space.
inline double orbit_volume_density(const OrbitPoint& x)
{
    return x.q_star / std::sqrt(x.d());
}

/// Debug dump: one JSON object keyed by the GeometryBundle field names,
/// numbers printed with 17 significant digits.
std::string to_debug_json(const GeometryBundle& g);

} // namespace orbitkernel
