// Finite-volume solver for the forward equation on the orbit space.
//
// In (Q*, ρ, φ) with f̃ = ρ(cos φ, sin φ) the orbit metric is diagonal:
//   h^{QQ} = 1, h^{ρρ} = 1, h^{φφ} = d/(ρ²Q*²),  √g = Q*ρ/√d.
// Nothing depends on φ, so u = Σ_k u_k(Q*, ρ) cos k(φ − φ_a) and each mode obeys
//   ∂_t u_k = (λ/2)(1/√g)[∂_Q(√g ∂_Q u_k) + ∂_ρ(√g ∂_ρ u_k)] − c_k u_k,
//   c_k = (λ/2)k²(1/ρ² + 1/Q*²) − J − V/(λm).
// The (Q*, ρ) part is explicit Euler on cell centres (i + ½)h with √g face
// weights; √g vanishes on Q* = 0 and ρ = 0, which makes those faces no-flux.
// The diagonal part is applied as exp(−c_k dt). Outer faces are absorbing.

#include "orbitkernel/errors.hpp"
#include "orbitkernel/kernels.hpp"
#include "orbitkernel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace orbitkernel {

namespace {

struct Layout {
    int nq = 0;
    int nr = 0;
    double h = 0.0;
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * nr + j; }
    std::size_t size() const { return static_cast<std::size_t>(nq) * nr; }
    double q(int i) const { return (i + 0.5) * h; }
    double r(int j) const { return (j + 0.5) * h; }
};

double metric_weight(double q, double r)
{
    const double d = q * q + r * r;
    return d > 0.0 ? q * r / std::sqrt(d) : 0.0;
}

struct EvalNode {
    double q;
    double r;
    double dphi;
    double weight;
};

// Bilinear interpolation on cell centres, clamped to the outermost centres.
double interpolate(const Layout& g, const std::vector<double>& u, double q, double r)
{
    const double fi = std::clamp(q / g.h - 0.5, 0.0, g.nq - 1.0);
    const double fj = std::clamp(r / g.h - 0.5, 0.0, g.nr - 1.0);
    const int i0 = std::min(static_cast<int>(fi), g.nq - 2);
    const int j0 = std::min(static_cast<int>(fj), g.nr - 2);
    const double a = fi - i0;
    const double b = fj - j0;
    return (1 - a) * (1 - b) * u[g.index(i0, j0)] + a * (1 - b) * u[g.index(i0 + 1, j0)]
           + (1 - a) * b * u[g.index(i0, j0 + 1)] + a * b * u[g.index(i0 + 1, j0 + 1)];
}

} // namespace

GridResult reduced_kernel_grid(const KernelQuery& q, const GridSpec& spec)
{
    q.validate();
    if (!(spec.cell > 0.0) || !(spec.cfl > 0.0 && spec.cfl <= 1.0) || spec.max_modes < 1
        || !(spec.init_width_cells > 0.0)) {
        throw ConfigError("reduced_kernel_grid: invalid grid specification");
    }
    const double lambda = q.params.lambda;
    const double t = q.t_elapsed;
    const double spread = 7.0 * std::sqrt(lambda * t);
    const double rho_a = std::sqrt(q.start.rho_sq());
    const double phi_a = std::atan2(q.start.ft2, q.start.ft1);
    const Box& box = q.box;
    const double box_rho =
        std::hypot(std::abs(box.center.ft1) + box.half_f1, std::abs(box.center.ft2) + box.half_f2);

    Layout g;
    g.h = spec.cell;
    const double q_max = spec.q_max > 0.0 ? spec.q_max : std::max(q.start.q_star, box.q_hi()) + spread;
    const double rho_max = spec.rho_max > 0.0 ? spec.rho_max : std::max(rho_a, box_rho) + spread;
    g.nq = static_cast<int>(std::ceil(q_max / g.h));
    g.nr = static_cast<int>(std::ceil(rho_max / g.h));
    if (g.nq < 4 || g.nr < 4) {
        throw ConfigError("reduced_kernel_grid: grid too coarse for the domain");
    }
    if (box.q_hi() > g.nq * g.h || box_rho > g.nr * g.h || q.start.q_star > g.nq * g.h
        || rho_a > g.nr * g.h) {
        throw ConfigError("reduced_kernel_grid: start and box must lie inside the grid");
    }

    const std::size_t n_cells = g.size();
    std::vector<double> w(n_cells);
    // coefficients of the explicit update towards the four neighbours
    std::vector<double> c_qm(n_cells), c_qp(n_cells), c_rm(n_cells), c_rp(n_cells);
    std::vector<double> base_decay(n_cells), angular(n_cells);
    const double h2 = g.h * g.h;
    double max_diag = 0.0;
    for (int i = 0; i < g.nq; ++i) {
        for (int j = 0; j < g.nr; ++j) {
            const std::size_t k = g.index(i, j);
            const double qc = g.q(i);
            const double rc = g.r(j);
            w[k] = metric_weight(qc, rc);
            const double scale = 0.5 * lambda / (w[k] * h2);
            c_qm[k] = scale * metric_weight(i * g.h, rc);
            c_qp[k] = scale * metric_weight((i + 1) * g.h, rc);
            c_rm[k] = scale * metric_weight(qc, j * g.h);
            c_rp[k] = scale * metric_weight(qc, (j + 1) * g.h);
            max_diag = std::max(max_diag, c_qm[k] + c_qp[k] + c_rm[k] + c_rp[k]);
            const OrbitPoint x{qc, rc, 0.0};
            double pot = q.params.include_jacobian ? jacobian_potential(x, lambda) : 0.0;
            pot += q.params.potential(x) / (lambda * q.params.mass);
            base_decay[k] = -pot;
            angular[k] = 0.5 * lambda * (1.0 / (rc * rc) + 1.0 / (qc * qc));
        }
    }

    GridResult result;
    result.dt_max = 1.0 / max_diag;
    double dt = spec.dt;
    if (dt > 0.0) {
        if (dt > result.dt_max) {
            throw StabilityViolation("reduced_kernel_grid: dt exceeds the explicit positivity bound");
        }
    } else {
        dt = spec.cfl * result.dt_max;
    }
    const auto steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-12));
    dt = t / static_cast<double>(steps);
    result.dt = dt;
    result.steps = steps;

    // Initial data: isotropic Gaussian in (Q*, f̃) of width init_width_cells·h,
    // projected on cos k(φ − φ_a) by an M-point trapezoid rule in φ.
    const double width = spec.init_width_cells * g.h;
    const int modes = spec.max_modes;
    const int m_nodes = 4 * modes;
    std::vector<std::vector<double>> init(static_cast<std::size_t>(modes), std::vector<double>(n_cells, 0.0));
    const double cutoff = 10.0 * width;
    for (int i = 0; i < g.nq; ++i) {
        const double dq = g.q(i) - q.start.q_star;
        if (std::abs(dq) > cutoff) continue;
        for (int j = 0; j < g.nr; ++j) {
            const double rc = g.r(j);
            if (std::abs(rc - rho_a) > cutoff) continue;
            const std::size_t k = g.index(i, j);
            for (int m = 0; m < m_nodes; ++m) {
                const double dphi = kTwoPi * m / m_nodes;
                const double dist2 = dq * dq + rc * rc + rho_a * rho_a - 2.0 * rc * rho_a * std::cos(dphi);
                const double v = std::exp(-dist2 / (2.0 * width * width));
                for (int mode = 0; mode < modes; ++mode) {
                    init[mode][k] += v * std::cos(mode * dphi);
                }
            }
            for (int mode = 0; mode < modes; ++mode) {
                // cosine-series coefficient: (1/π)∫ u cos, halved for k = 0
                init[mode][k] *= (mode == 0 ? 1.0 : 2.0) / m_nodes;
            }
        }
    }
    CompensatedSum mass0;
    for (std::size_t k = 0; k < n_cells; ++k) {
        mass0.add(init[0][k] * w[k] * h2 * kTwoPi);
    }
    const double norm = 1.0 / mass0.value();
    result.mass_initial = 1.0;

    std::vector<EvalNode> nodes;
    {
        const GaussRule rule = gauss_legendre(q.box_order);
        const double jac = box.half_q * box.half_f1 * box.half_f2;
        for (int a = 0; a < q.box_order; ++a) {
            for (int b = 0; b < q.box_order; ++b) {
                for (int c = 0; c < q.box_order; ++c) {
                    const OrbitPoint x{box.center.q_star + box.half_q * rule.nodes[a],
                                       box.center.ft1 + box.half_f1 * rule.nodes[b],
                                       box.center.ft2 + box.half_f2 * rule.nodes[c]};
                    const double wt = rule.weights[a] * rule.weights[b] * rule.weights[c] * jac
                                      * orbit_volume_density(x);
                    nodes.push_back({x.q_star, std::sqrt(x.rho_sq()),
                                     std::atan2(x.ft2, x.ft1) - phi_a, wt});
                }
            }
        }
    }
    double node_weight_sum = 0.0;
    for (const auto& n : nodes) node_weight_sum += n.weight;

    std::vector<double> u(n_cells), next(n_cells), decay(n_cells);
    CompensatedSum box_sum;
    double mode0_peak = 0.0;
    int quiet_modes = 0;
    for (int mode = 0; mode < modes; ++mode) {
        for (std::size_t k = 0; k < n_cells; ++k) {
            u[k] = init[mode][k] * norm;
            decay[k] = std::exp(-(base_decay[k] + mode * mode * angular[k]) * dt);
        }
        CompensatedSum absorbed;
        for (std::size_t step = 0; step < steps; ++step) {
            for (int i = 0; i < g.nq; ++i) {
                for (int j = 0; j < g.nr; ++j) {
                    const std::size_t k = g.index(i, j);
                    const double uc = u[k];
                    const double uqm = i > 0 ? u[k - g.nr] : 0.0;
                    const double uqp = i + 1 < g.nq ? u[k + g.nr] : 0.0;
                    const double urm = j > 0 ? u[k - 1] : 0.0;
                    const double urp = j + 1 < g.nr ? u[k + 1] : 0.0;
                    const double lap = c_qm[k] * (uqm - uc) + c_qp[k] * (uqp - uc)
                                       + c_rm[k] * (urm - uc) + c_rp[k] * (urp - uc);
                    next[k] = decay[k] * (uc + dt * lap);
                }
            }
            if (mode == 0) {
                // mass leaving through the absorbing outer faces during this step
                double out = 0.0;
                for (int j = 0; j < g.nr; ++j) {
                    const std::size_t k = g.index(g.nq - 1, j);
                    out += c_qp[k] * u[k] * w[k];
                }
                for (int i = 0; i < g.nq; ++i) {
                    const std::size_t k = g.index(i, g.nr - 1);
                    out += c_rp[k] * u[k] * w[k];
                }
                absorbed.add(out * dt * h2 * kTwoPi);
            }
            u.swap(next);
        }

        double peak = 0.0;
        for (double v : u) peak = std::max(peak, std::abs(v));
        CompensatedSum contrib;
        for (const auto& n : nodes) {
            contrib.add(n.weight * interpolate(g, u, n.q, n.r) * std::cos(mode * n.dphi));
        }
        box_sum.add(contrib.value());
        result.modes_used = mode + 1;

        if (mode == 0) {
            CompensatedSum mass;
            for (std::size_t k = 0; k < n_cells; ++k) {
                mass.add(u[k] * w[k] * h2 * kTwoPi);
            }
            result.mass_final = mass.value();
            result.absorbed_fraction = absorbed.value();
            mode0_peak = peak;
        } else if (peak < spec.mode_tolerance * mode0_peak) {
            if (++quiet_modes >= 2) {
                break;
            }
        } else {
            quiet_modes = 0;
        }
    }
    result.box_average = box_sum.value() / node_weight_sum;
    result.boundary_mass_loss = result.absorbed_fraction > 0.01;
    return result;
}

} // namespace orbitkernel
