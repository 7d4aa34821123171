#include "orbitkernel/generators.hpp"

#include "orbitkernel/errors.hpp"

#include <array>
#include <cmath>

namespace orbitkernel {

FdScheme::FdScheme(double step) : step_(step)
{
    if (!(step >= 1e-7 && step <= 1e-2)) {
        throw ConfigError("FdScheme: step must lie in [1e-7, 1e-2]");
    }
}

namespace {

void require_clear_of_axis(double q_star, const FdScheme& fd, double eps_min, const char* who)
{
    if (!(q_star > eps_min + fd.step())) {
        throw DegeneratePoint(std::string(who) + ": stencil reaches the axis");
    }
}

OrbitPoint shifted(const OrbitPoint& x, int axis, double delta)
{
    OrbitPoint y = x;
    switch (axis) {
    case 0: y.q_star += delta; break;
    case 1: y.ft1 += delta; break;
    default: y.ft2 += delta; break;
    }
    return y;
}

// diag(1, R): inverse orbit metric
Mat3 orbit_inverse_metric(const OrbitPoint& x)
{
    const double q2 = x.q_star * x.q_star;
    Mat3 m;
    m << 1, 0, 0,
         0, 1.0 + x.ft2 * x.ft2 / q2, -x.ft1 * x.ft2 / q2,
         0, -x.ft1 * x.ft2 / q2, 1.0 + x.ft1 * x.ft1 / q2;
    return m;
}

Vec3 central_gradient(const RealField& phi, const OrbitPoint& x, double h)
{
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
        g(i) = (phi(shifted(x, i, h)) - phi(shifted(x, i, -h))) / (2.0 * h);
    }
    return g;
}

} // namespace

Complex apply_reduced_generator(const ScalarField& phi, int n, const OrbitPoint& x,
                                double lambda, const FdScheme& fd, double eps_min)
{
    require_clear_of_axis(x.q_star, fd, eps_min, "apply_reduced_generator");
    const double h = fd.step();
    const Complex c0 = phi(x);

    std::array<Complex, 3> first;
    std::array<Complex, 3> second;
    for (int i = 0; i < 3; ++i) {
        const Complex up = phi(shifted(x, i, h));
        const Complex dn = phi(shifted(x, i, -h));
        first[i] = (up - dn) / (2.0 * h);
        second[i] = (up - 2.0 * c0 + dn) / (h * h);
    }
    const Complex mixed =
        (phi(shifted(shifted(x, 1, h), 2, h)) - phi(shifted(shifted(x, 1, h), 2, -h))
         - phi(shifted(shifted(x, 1, -h), 2, h)) + phi(shifted(shifted(x, 1, -h), 2, -h)))
        / (4.0 * h * h);

    const double q = x.q_star;
    const double q2 = q * q;
    const double f1 = x.ft1;
    const double f2 = x.ft2;
    const double r11 = 1.0 + f2 * f2 / q2;
    const double r22 = 1.0 + f1 * f1 / q2;
    const double r12 = -f1 * f2 / q2;
    const Complex in(0.0, static_cast<double>(n));

    Complex value = second[0] + first[0] / q
                    + r11 * second[1] + 2.0 * r12 * mixed + r22 * second[2]
                    - (f1 * first[1] + f2 * first[2]) / q2
                    + in * (2.0 / q2) * (f2 * first[1] - f1 * first[2])
                    - static_cast<double>(n) * n / q2 * c0;
    return 0.5 * lambda * value;
}

Complex apply_flat_laplacian_lifted(const ScalarField& phi, int n, const EuclideanPoint& p,
                                    const FdScheme& fd, double eps_min)
{
    require_clear_of_axis(std::sqrt(p.q_radius_sq()), fd, eps_min,
                          "apply_flat_laplacian_lifted");
    const double h = fd.step();
    auto lifted = [&](const EuclideanPoint& y) {
        const AdaptedPoint a = to_adapted(y, eps_min);
        return phi(a.base()) * std::polar(1.0, static_cast<double>(n) * a.angle);
    };
    const Complex c0 = lifted(p);
    Complex sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        EuclideanPoint up = p;
        EuclideanPoint dn = p;
        double* u = i == 0 ? &up.q1 : i == 1 ? &up.q2 : i == 2 ? &up.f1 : &up.f2;
        double* v = i == 0 ? &dn.q1 : i == 1 ? &dn.q2 : i == 2 ? &dn.f1 : &dn.f2;
        *u += h;
        *v -= h;
        sum += lifted(up) - 2.0 * c0 + lifted(dn);
    }
    return sum / (h * h);
}

double apply_lb_orbit(const RealField& phi, const OrbitPoint& x, const FdScheme& fd,
                      double eps_min)
{
    require_clear_of_axis(x.q_star, fd, eps_min + fd.step(), "apply_lb_orbit");
    const double h = fd.step();
    auto flux = [&](const OrbitPoint& y, int i) {
        const Vec3 grad = central_gradient(phi, y, h);
        return orbit_volume_density(y) * orbit_inverse_metric(y).row(i).dot(grad);
    };
    double div = 0.0;
    for (int i = 0; i < 3; ++i) {
        div += (flux(shifted(x, i, h), i) - flux(shifted(x, i, -h), i)) / (2.0 * h);
    }
    return div / orbit_volume_density(x);
}

double orbit_gradient_sq(const RealField& phi, const OrbitPoint& x, const FdScheme& fd,
                         double eps_min)
{
    require_clear_of_axis(x.q_star, fd, eps_min, "orbit_gradient_sq");
    const Vec3 grad = central_gradient(phi, x, fd.step());
    return grad.dot(orbit_inverse_metric(x) * grad);
}

double jacobian_scalar_fd(const OrbitPoint& x, const FdScheme& fd, double eps_min)
{
    // ln d − ln d(x), with d(y) − d(x) factored so the values carry no cancellation
    const RealField sigma = [x](const OrbitPoint& y) {
        const double dd = (y.q_star - x.q_star) * (y.q_star + x.q_star) + (y.ft1 - x.ft1) * (y.ft1 + x.ft1)
                          + (y.ft2 - x.ft2) * (y.ft2 + x.ft2);
        return std::log1p(dd / x.d());
    };
    return apply_lb_orbit(sigma, x, fd, eps_min)
           + 0.25 * orbit_gradient_sq(sigma, x, fd, eps_min);
}

double equivariance_residual(const ScalarField& phi, int n, const EuclideanPoint& p,
                             double lambda, const FdScheme& fd, double eps_min)
{
    const AdaptedPoint a = to_adapted(p, eps_min);
    const Complex lifted = 0.5 * lambda * apply_flat_laplacian_lifted(phi, n, p, fd, eps_min);
    const Complex reduced = std::polar(1.0, static_cast<double>(n) * a.angle)
                            * apply_reduced_generator(phi, n, a.base(), lambda, fd, eps_min);
    return std::abs(lifted - reduced);
}

FilterRateSides filter_rate_sides(const OrbitPoint& x, double lambda, int n)
{
    const GeometryBundle g = geometry_at(x);
    const Vec2 conn_f(g.conn(1), g.conn(2));
    const double n2 = static_cast<double>(n) * n;
    return {
        -lambda * n2 / (2.0 * g.d_scalar),
        -lambda * n2 / (2.0 * g.gamma) + 0.5 * lambda * n2 * conn_f.dot(g.r_matrix * conn_f),
    };
}

ScalarField constant_field(double c)
{
    return [c](const OrbitPoint&) { return Complex(c, 0.0); };
}

ScalarField affine_field(double c0, double c1, double c2, double c3)
{
    return [=](const OrbitPoint& x) {
        return Complex(c0 + c1 * x.q_star + c2 * x.ft1 + c3 * x.ft2, 0.0);
    };
}

ScalarField monomial_field(int a, int b, int c)
{
    return [=](const OrbitPoint& x) {
        return Complex(std::pow(x.q_star, a) * std::pow(x.ft1, b) * std::pow(x.ft2, c), 0.0);
    };
}

ScalarField gaussian_bump(const OrbitPoint& center, double width)
{
    return [=](const OrbitPoint& x) {
        const double dq = x.q_star - center.q_star;
        const double d1 = x.ft1 - center.ft1;
        const double d2 = x.ft2 - center.ft2;
        return Complex(std::exp(-(dq * dq + d1 * d1 + d2 * d2) / (2.0 * width * width)), 0.0);
    };
}

std::vector<TestFunction> standard_test_functions()
{
    return {
        {"constant", constant_field(1.0)},
        {"affine", affine_field(0.3, 0.5, -0.7, 0.2)},
        {"quadratic", [](const OrbitPoint& x) {
             return Complex(x.q_star * x.q_star + x.ft1 * x.ft1, 0.0);
         }},
        {"cubic_mixed", monomial_field(1, 1, 1)},
        {"gaussian_bump", gaussian_bump({1.5, 0.4, -0.3}, 0.8)},
    };
}

} // namespace orbitkernel
