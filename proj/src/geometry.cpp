#include "orbitkernel/geometry.hpp"

#include "orbitkernel/errors.hpp"

#include <Eigen/LU>

#include <cstdio>
#include <sstream>

namespace orbitkernel {

double normalize_angle(double angle)
{
    double a = std::fmod(angle, kTwoPi);
    if (a < 0.0) {
        a += kTwoPi;
    }
    // fmod of a tiny negative value can round up to exactly 2π
    if (a >= kTwoPi) {
        a = 0.0;
    }
    return a;
}

EuclideanPoint group_act(const EuclideanPoint& p, double theta)
{
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {
        p.q1 * c + p.q2 * s,
        -p.q1 * s + p.q2 * c,
        p.f1 * c - p.f2 * s,
        p.f1 * s + p.f2 * c,
    };
}

AdaptedPoint to_adapted(const EuclideanPoint& p, double eps_min)
{
    const double r2 = p.q_radius_sq();
    if (!(r2 >= eps_min * eps_min) || r2 == 0.0) {
        throw DegeneratePoint("to_adapted: point within eps_min of the axis Q = 0");
    }
    const double a = normalize_angle(std::atan2(-p.q2, p.q1));
    const double c = std::cos(a);
    const double s = std::sin(a);
    return {
        std::sqrt(r2),
        p.f1 * c + p.f2 * s,
        -p.f1 * s + p.f2 * c,
        a,
    };
}

EuclideanPoint from_adapted(const AdaptedPoint& x)
{
    const double c = std::cos(x.angle);
    const double s = std::sin(x.angle);
    return {
        x.q_star * c,
        -x.q_star * s,
        x.ft1 * c - x.ft2 * s,
        x.ft1 * s + x.ft2 * c,
    };
}

Mat2 sqrt_r_matrix(const OrbitPoint& x)
{
    const double q = x.q_star;
    const double coef = 1.0 / (q * (std::sqrt(x.d()) + q));
    const double v1 = x.ft2;
    const double v2 = -x.ft1;
    Mat2 m;
    m << 1.0 + coef * v1 * v1, coef * v1 * v2,
         coef * v1 * v2, 1.0 + coef * v2 * v2;
    return m;
}

GeometryBundle geometry_at(const OrbitPoint& x, double eps_min, GeometryFault fault)
{
    if (!(x.q_star >= eps_min)) {
        throw DegeneratePoint("geometry_at: q_star below eps_min");
    }
    const double q = x.q_star;
    const double q2 = q * q;
    const double f1 = x.ft1;
    const double f2 = x.ft2;
    const double d = x.d();

    GeometryBundle g;
    g.d_scalar = d;
    g.gamma = q2;
    g.det_g = q2;
    g.sigma = std::log(d);

    g.g_adapted << 1, 0, 0, 0,
                   0, 1, 0, -f2,
                   0, 0, 1, f1,
                   0, -f2, f1, d;
    g.g_inverse << 1, 0, 0, 0,
                   0, (f2 * f2 + q2) / q2, -f1 * f2 / q2, f2 / q2,
                   0, -f1 * f2 / q2, (f1 * f1 + q2) / q2, -f1 / q2,
                   0, f2 / q2, -f1 / q2, 1.0 / q2;

    g.conn << 0.0, -f2 / d, f1 / d;
    if (fault == GeometryFault::flip_conn_f1) {
        g.conn(1) = -g.conn(1);
    }
    g.killing_q << 0.0, -q;
    g.killing_f << -f2, f1;

    g.phi_fp = -q;
    g.lambda2 = -1.0 / q;
    g.proj_n << -f2 / q, f1 / q;

    g.r_matrix << 1.0 + f2 * f2 / q2, -f1 * f2 / q2,
                  -f1 * f2 / q2, 1.0 + f1 * f1 / q2;
    g.x_sqrt = sqrt_r_matrix(x);

    // Z is minus the f̃-part of the connection
    g.z_vec << -g.conn(1), -g.conn(2);
    g.x_group = 1.0 / std::sqrt(d);

    g.h_orbit << 1, 0, 0,
                 0, (f1 * f1 + q2) / d, f1 * f2 / d,
                 0, f1 * f2 / d, (f2 * f2 + q2) / d;
    g.h_orbit_inv = g.h_orbit.inverse();
    g.h_det = q2 / d;
    return g;
}

double jacobian_potential(const OrbitPoint& x, double lambda)
{
    return -(lambda / 8.0) * (3.0 / x.d());
}

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename M>
std::string matrix_json(const M& m)
{
    std::ostringstream os;
    os << '[';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << (i ? "," : "") << '[';
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            os << (j ? "," : "") << num(m(i, j));
        }
        os << ']';
    }
    os << ']';
    return os.str();
}

template <typename V>
std::string vector_json(const V& v)
{
    std::ostringstream os;
    os << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        os << (i ? "," : "") << num(v(i));
    }
    os << ']';
    return os.str();
}

} // namespace

std::string to_debug_json(const GeometryBundle& g)
{
    std::ostringstream os;
    os << "{\"g_adapted\":" << matrix_json(g.g_adapted)
       << ",\"g_inverse\":" << matrix_json(g.g_inverse)
       << ",\"det_g\":" << num(g.det_g)
       << ",\"d_scalar\":" << num(g.d_scalar)
       << ",\"conn\":" << vector_json(g.conn)
       << ",\"killing_q\":" << vector_json(g.killing_q)
       << ",\"killing_f\":" << vector_json(g.killing_f)
       << ",\"lambda2\":" << num(g.lambda2)
       << ",\"phi_fp\":" << num(g.phi_fp)
       << ",\"proj_n\":" << vector_json(g.proj_n)
       << ",\"r_matrix\":" << matrix_json(g.r_matrix)
       << ",\"x_sqrt\":" << matrix_json(g.x_sqrt)
       << ",\"z_vec\":" << vector_json(g.z_vec)
       << ",\"x_group\":" << num(g.x_group)
       << ",\"h_orbit\":" << matrix_json(g.h_orbit)
       << ",\"h_orbit_inv\":" << matrix_json(g.h_orbit_inv)
       << ",\"h_det\":" << num(g.h_det)
       << ",\"sigma\":" << num(g.sigma)
       << ",\"gamma\":" << num(g.gamma) << '}';
    return os.str();
}

} // namespace orbitkernel
