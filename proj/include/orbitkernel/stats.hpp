#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace orbitkernel {

/// Neumaier-compensated running sum; merging is order-independent up to rounding
/// far below the statistical error of any estimate built on it.
class CompensatedSum {
public:
    void add(double v);
    void merge(const CompensatedSum& other);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

/// Sample mean and its standard error.
MeanEstimate mean_and_stderr(std::span<const double> values);

/// Mean of per-batch values and the batch-means standard error.
MeanEstimate batch_means(std::span<const double> batch_values);

/// Two-sample Kolmogorov–Smirnov statistic sup |F₁ − F₂|. Inputs are copied and sorted.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Asymptotic critical value c(α)·sqrt((n+m)/(n·m)), c(α) = sqrt(−ln(α/2)/2).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

/// Nodes and weights of n-point Gauss–Legendre quadrature on [−1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussRule gauss_legendre(int n);

} // namespace orbitkernel
