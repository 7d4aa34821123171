#include "orbitkernel/errors.hpp"
#include "orbitkernel/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace orbitkernel;

TEST_CASE("compensated sum keeps small terms")
{
    CompensatedSum s;
    s.add(1.0);
    for (int i = 0; i < 1000000; ++i) s.add(1e-16);
    s.add(-1.0);
    CHECK(s.value() == doctest::Approx(1e-10).epsilon(1e-6));

    CompensatedSum a;
    CompensatedSum b;
    a.add(1e16);
    b.add(1.0);
    b.add(-1e16);
    a.merge(b);
    CHECK(a.value() == 1.0);
}

TEST_CASE("mean and standard error")
{
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const MeanEstimate m = mean_and_stderr(v);
    CHECK(m.mean == 2.5);
    // sample variance 5/3, stderr sqrt(5/12)
    CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 12.0)));
    CHECK_THROWS_AS(batch_means(std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1 exactly")
{
    for (int n : {1, 2, 5, 8, 16}) {
        const GaussRule r = gauss_legendre(n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
            const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
            CHECK(s == doctest::Approx(exact).epsilon(1e-13).scale(1.0));
        }
    }
}

TEST_CASE("KS statistic on hand-computed samples")
{
    // F_a jumps at 1,2,3; F_b at 2.5,3.5: sup difference 2/3 at x in [2, 2.5)
    CHECK(ks_statistic({1.0, 2.0, 3.0}, {2.5, 3.5}) == doctest::Approx(2.0 / 3.0));
    CHECK(ks_statistic({1.0, 2.0}, {1.0, 2.0}) == 0.0);
    CHECK(ks_statistic({0.0}, {1.0}) == 1.0);
}

TEST_CASE("KS critical value")
{
    // c(0.01) = 1.62762...
    const double c = std::sqrt(-std::log(0.005) / 2.0);
    CHECK(c == doctest::Approx(1.6276236));
    CHECK(ks_critical_value(100000, 100000, 0.01) == doctest::Approx(c * std::sqrt(2.0 / 100000.0)));
}
