#include "orbitkernel/stats.hpp"

#include "orbitkernel/errors.hpp"

#include <algorithm>
#include <cmath>

namespace orbitkernel {

void CompensatedSum::add(double v)
{
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
        comp_ += (sum_ - t) + v;
    } else {
        comp_ += (v - t) + sum_;
    }
    sum_ = t;
}

void CompensatedSum::merge(const CompensatedSum& other)
{
    add(other.sum_);
    add(other.comp_);
}

MeanEstimate mean_and_stderr(std::span<const double> values)
{
    MeanEstimate out;
    out.count = values.size();
    if (values.empty()) {
        return out;
    }
    CompensatedSum s;
    for (double v : values) {
        s.add(v);
    }
    out.mean = s.value() / static_cast<double>(values.size());
    if (values.size() > 1) {
        CompensatedSum ss;
        for (double v : values) {
            ss.add((v - out.mean) * (v - out.mean));
        }
        const double var = ss.value() / static_cast<double>(values.size() - 1);
        out.std_error = std::sqrt(var / static_cast<double>(values.size()));
    }
    return out;
}

MeanEstimate batch_means(std::span<const double> batch_values)
{
    if (batch_values.size() < 2) {
        throw ConfigError("batch_means: need at least two batches");
    }
    return mean_and_stderr(batch_values);
}

double ks_statistic(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty()) {
        throw ConfigError("ks_statistic: empty sample");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double sup = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return sup;
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha)
{
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    return c * std::sqrt((dn + dm) / (dn * dm));
}

GaussRule gauss_legendre(int n)
{
    if (n < 1) {
        throw ConfigError("gauss_legendre: n must be positive");
    }
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        rule.nodes[static_cast<std::size_t>(i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

} // namespace orbitkernel
