#include "orbitkernel/kernels.hpp"

#include "orbitkernel/errors.hpp"
#include "orbitkernel/stats.hpp"

#include <algorithm>
#include <cmath>

namespace orbitkernel {

bool Box::contains(const OrbitPoint& x) const
{
    return std::abs(x.q_star - center.q_star) <= half_q && std::abs(x.ft1 - center.ft1) <= half_f1
           && std::abs(x.ft2 - center.ft2) <= half_f2;
}

void KernelQuery::validate() const
{
    params.validate();
    if (!(t_elapsed > 0.0) || !std::isfinite(t_elapsed)) {
        throw ConfigError("KernelQuery: t_elapsed must be positive");
    }
    if (!(box.half_q > 0.0 && box.half_f1 > 0.0 && box.half_f2 > 0.0)) {
        throw ConfigError("KernelQuery: box half-widths must be positive");
    }
    if (!(box.q_lo() > params.eps_min)) {
        throw ConfigError("KernelQuery: box must lie in q_star > eps_min");
    }
    if (!(start.q_star > params.eps_min)) {
        throw ConfigError("KernelQuery: start must lie in q_star > eps_min");
    }
    if (quad_points < 8) {
        throw ConfigError("KernelQuery: quad_points must be at least 8");
    }
    if (box_order < 1 || box_order > 64) {
        throw ConfigError("KernelQuery: box_order must lie in [1, 64]");
    }
    if (n_batches < 30) {
        throw ConfigError("KernelQuery: at least 30 batches are required");
    }
}

double flat_heat_kernel(const EuclideanPoint& pa, const EuclideanPoint& pb, double t, double lambda)
{
    const double dq1 = pb.q1 - pa.q1;
    const double dq2 = pb.q2 - pa.q2;
    const double df1 = pb.f1 - pa.f1;
    const double df2 = pb.f2 - pa.f2;
    const double r2 = dq1 * dq1 + dq2 * dq2 + df1 * df1 + df2 * df2;
    const double var = lambda * t;
    const double norm = 1.0 / (kTwoPi * var);
    return norm * norm * std::exp(-r2 / (2.0 * var));
}

namespace {

double trapezoid_orbit_average(const EuclideanPoint& pa, const EuclideanPoint& pb, double t,
                               double lambda, int nodes)
{
    CompensatedSum s;
    for (int k = 0; k < nodes; ++k) {
        const double theta = kTwoPi * k / nodes;
        s.add(flat_heat_kernel(pa, group_act(pb, theta), t, lambda));
    }
    return s.value() / nodes;
}

// Tensor Gauss–Legendre nodes over the box with weights √H·|cell|.
struct BoxNode {
    OrbitPoint x;
    double weight;
};

std::vector<BoxNode> box_nodes(const Box& box, int order)
{
    const GaussRule rule = gauss_legendre(order);
    std::vector<BoxNode> nodes;
    nodes.reserve(static_cast<std::size_t>(order) * order * order);
    const double jac = box.half_q * box.half_f1 * box.half_f2;
    for (int i = 0; i < order; ++i) {
        for (int j = 0; j < order; ++j) {
            for (int k = 0; k < order; ++k) {
                OrbitPoint x{box.center.q_star + box.half_q * rule.nodes[i],
                             box.center.ft1 + box.half_f1 * rule.nodes[j],
                             box.center.ft2 + box.half_f2 * rule.nodes[k]};
                const double w = rule.weights[i] * rule.weights[j] * rule.weights[k] * jac;
                nodes.push_back({x, w * orbit_volume_density(x)});
            }
        }
    }
    return nodes;
}

} // namespace

double orbit_average_rhs(const OrbitPoint& a, const OrbitPoint& b, double t, double lambda,
                         int quad_points)
{
    if (!(t > 0.0)) {
        throw ConfigError("orbit_average_rhs: t must be positive");
    }
    const EuclideanPoint pa = from_adapted({a.q_star, a.ft1, a.ft2, 0.0});
    const EuclideanPoint pb = from_adapted({b.q_star, b.ft1, b.ft2, 0.0});
    const double coarse = trapezoid_orbit_average(pa, pb, t, lambda, quad_points);
    const double fine = trapezoid_orbit_average(pa, pb, t, lambda, 2 * quad_points);
    const double scale = std::max(std::abs(fine), std::abs(coarse));
    if (scale > 0.0 && std::abs(fine - coarse) > 1e-10 * scale) {
        throw QuadratureNotConverged("orbit_average_rhs: doubling the θ nodes changed the result");
    }
    // G_P̃ = 2π·G_flat: kernel against the normalized-Haar invariant volume
    return kTwoPi * fine;
}

double box_riemannian_volume(const Box& box, int order)
{
    CompensatedSum s;
    for (const auto& n : box_nodes(box, order)) {
        s.add(n.weight);
    }
    return s.value();
}

double orbit_average_rhs_box(const KernelQuery& q)
{
    CompensatedSum num;
    CompensatedSum den;
    for (const auto& n : box_nodes(q.box, q.box_order)) {
        num.add(n.weight
                * orbit_average_rhs(q.start, n.x, q.t_elapsed, q.params.lambda, q.quad_points));
        den.add(n.weight);
    }
    return num.value() / den.value();
}

MonteCarloEstimate box_kernel_estimate(const SampleSet& set, const Box& box, int n_batches,
                                       JacobianWeight jac, double d_power, int box_order)
{
    const std::size_t n = set.samples.size();
    if (n_batches < 2 || static_cast<std::size_t>(n_batches) > n) {
        throw ConfigError("box_kernel_estimate: invalid batch count");
    }
    const double volume = box_riemannian_volume(box, box_order);
    std::vector<CompensatedSum> batch_sums(static_cast<std::size_t>(n_batches));
    std::vector<std::size_t> batch_sizes(static_cast<std::size_t>(n_batches), 0);
    MonteCarloEstimate out;
    out.n_paths = n;
    out.discards = set.discarded;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t b = i * static_cast<std::size_t>(n_batches) / n;
        ++batch_sizes[b];
        const Sample& s = set.samples[i];
        if (s.discarded) {
            continue;
        }
        const OrbitPoint y = s.end.base();
        if (!box.contains(y)) {
            continue;
        }
        ++out.hits;
        double w = s.weight_log;
        if (jac == JacobianWeight::removed) {
            w -= s.jacobian_log;
        }
        double c = std::exp(w);
        if (d_power != 0.0) {
            c *= std::pow(y.d(), -d_power);
        }
        batch_sums[b].add(c);
    }
    if (out.hits < 100) {
        throw InsufficientSamples("box_kernel_estimate: fewer than 100 endpoints in the box");
    }
    std::vector<double> values(static_cast<std::size_t>(n_batches));
    for (std::size_t b = 0; b < values.size(); ++b) {
        values[b] = batch_sums[b].value() / (static_cast<double>(batch_sizes[b]) * volume);
    }
    const MeanEstimate m = batch_means(values);
    // batches differ in size by at most one path; the size-weighted mean is the plain estimator
    CompensatedSum total;
    for (const auto& s : batch_sums) {
        total.merge(s);
    }
    out.estimate = total.value() / (static_cast<double>(n) * volume);
    out.std_error = m.std_error;
    return out;
}

MonteCarloEstimate reduced_kernel_mc(const KernelQuery& q)
{
    q.validate();
    const SampleSet set =
        simulate_batch(ProcessKind::xi_tilde, 0, q.params, {q.start.q_star, q.start.ft1, q.start.ft2, 0.0},
                       q.t_elapsed);
    return box_kernel_estimate(set, q.box, q.n_batches, JacobianWeight::as_simulated, 0.0,
                               q.box_order);
}

KernelReport reduction_report_from_samples(const KernelQuery& q, const SampleSet& set)
{
    q.validate();
    if (!q.params.potential.is_zero()) {
        throw ConfigError("verify_reduction_relation: the relation is checked for V = 0 only");
    }
    KernelReport r;
    const double start_factor = std::pow(q.start.d(), -0.25);

    const MonteCarloEstimate plain =
        box_kernel_estimate(set, q.box, q.n_batches, JacobianWeight::as_simulated, 0.0, q.box_order);
    const MonteCarloEstimate weighted =
        box_kernel_estimate(set, q.box, q.n_batches, JacobianWeight::as_simulated, 0.25, q.box_order);
    const MonteCarloEstimate control =
        box_kernel_estimate(set, q.box, q.n_batches, JacobianWeight::removed, 0.25, q.box_order);

    r.kernel_box = plain.estimate;
    r.kernel_box_stderr = plain.std_error;
    r.lhs = start_factor * weighted.estimate;
    r.lhs_stderr = start_factor * weighted.std_error;
    r.n_paths = weighted.n_paths;
    r.hits = weighted.hits;
    r.discards = weighted.discards;

    r.rhs = orbit_average_rhs_box(q);
    r.residual = (r.lhs - r.rhs) / r.rhs;
    r.z = (r.lhs - r.rhs) / r.lhs_stderr;

    r.control_lhs = start_factor * control.estimate;
    r.control_stderr = start_factor * control.std_error;
    r.control_residual = (r.control_lhs - r.rhs) / r.rhs;
    r.control_z = (r.control_lhs - r.rhs) / r.control_stderr;
    return r;
}

KernelReport verify_reduction_relation(const KernelQuery& q)
{
    q.validate();
    if (!q.params.potential.is_zero()) {
        throw ConfigError("verify_reduction_relation: the relation is checked for V = 0 only");
    }
    const SampleSet set =
        simulate_batch(ProcessKind::xi_tilde, 0, q.params, {q.start.q_star, q.start.ft1, q.start.ft2, 0.0},
                       q.t_elapsed);
    return reduction_report_from_samples(q, set);
}

} // namespace orbitkernel
