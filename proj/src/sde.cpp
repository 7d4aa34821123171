#include "orbitkernel/sde.hpp"

#include "orbitkernel/errors.hpp"
#include "orbitkernel/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace orbitkernel {

void SimParams::validate() const
{
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(lambda)) throw ConfigError("SimParams: lambda must be > 0");
    if (!positive(mass)) throw ConfigError("SimParams: mass must be > 0");
    if (!positive(dt)) throw ConfigError("SimParams: dt must be > 0");
    if (!positive(t_total)) throw ConfigError("SimParams: t_total must be > 0");
    if (dt > t_total) throw ConfigError("SimParams: dt must not exceed t_total");
    if (!positive(eps_min)) throw ConfigError("SimParams: eps_min must be > 0");
    if (n_paths == 0) throw ConfigError("SimParams: n_paths must be positive");
    if (!positive(axis_refine)) throw ConfigError("SimParams: axis_refine must be > 0");
    if (!positive(min_substep) || min_substep > dt) {
        throw ConfigError("SimParams: min_substep must lie in (0, dt]");
    }
    if (!std::isfinite(potential.c1) || !std::isfinite(potential.c2)) {
        throw ConfigError("SimParams: potential coefficients must be finite");
    }
}

std::string to_string(ProcessKind kind)
{
    switch (kind) {
    case ProcessKind::original: return "original";
    case ProcessKind::adapted: return "adapted";
    case ProcessKind::transformed: return "transformed";
    case ProcessKind::xi: return "xi";
    case ProcessKind::xi_tilde: return "xi_tilde";
    }
    return "unknown";
}

ProcessKind parse_process_kind(const std::string& name)
{
    for (auto k : {ProcessKind::original, ProcessKind::adapted, ProcessKind::transformed,
                   ProcessKind::xi, ProcessKind::xi_tilde}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw ConfigError("unknown process kind '" + name + "'");
}

OrbitPoint orbit_part(const PathPosition& pos, double eps_min)
{
    if (const auto* e = std::get_if<EuclideanPoint>(&pos)) {
        return to_adapted(*e, eps_min).base();
    }
    if (const auto* a = std::get_if<AdaptedPoint>(&pos)) {
        return a->base();
    }
    return std::get<OrbitPoint>(pos);
}

double refined_step(double q_star, const SimParams& p)
{
    const double h = p.axis_refine * q_star * q_star / p.lambda;
    return std::min(p.dt, std::max(p.min_substep, h));
}

StepStatus step_original(PathState& s, std::span<const double, 4> dw, const SimParams& p, double h)
{
    auto& x = std::get<EuclideanPoint>(s.position);
    const double sd = std::sqrt(p.lambda * h);
    EuclideanPoint next{x.q1 + sd * dw[0], x.q2 + sd * dw[1], x.f1 + sd * dw[2], x.f2 + sd * dw[3]};
    s.time += h;
    if (next.q_radius_sq() < p.eps_min * p.eps_min) {
        return StepStatus::axis_hit;
    }
    x = next;
    return StepStatus::ok;
}

StepStatus step_adapted(PathState& s, std::span<const double, 4> dw, const SimParams& p, double h)
{
    auto& x = std::get<AdaptedPoint>(s.position);
    const double sd = std::sqrt(p.lambda * h);
    const double q = x.q_star;
    const double q2 = q * q;
    const double half = 0.5 * p.lambda * h;
    const double w_m = dw[0];
    const double w_alpha = dw[1];

    // ε^{ab} f̃^b with ε¹² = +1 is (f̃₂, −f̃₁)
    const double eps_f1 = x.ft2;
    const double eps_f2 = -x.ft1;

    AdaptedPoint next;
    next.q_star = q + half / q + sd * w_m;
    next.ft1 = x.ft1 - half * x.ft1 / q2 + sd * (-eps_f1 / q * w_alpha + dw[2]);
    next.ft2 = x.ft2 - half * x.ft2 / q2 + sd * (-eps_f2 / q * w_alpha + dw[3]);
    next.angle = normalize_angle(x.angle - sd * w_alpha / q);
    s.time += h;
    if (!(next.q_star >= p.eps_min)) {
        return StepStatus::axis_hit;
    }
    x = next;
    return StepStatus::ok;
}

StepStatus step_transformed(PathState& s, std::span<const double, 4> dw, const SimParams& p,
                            double h)
{
    auto& x = std::get<AdaptedPoint>(s.position);
    const double sd = std::sqrt(p.lambda * h);
    const double q = x.q_star;
    const double q2 = q * q;
    const double half = 0.5 * p.lambda * h;
    const OrbitPoint base = x.base();
    const double d = base.d();
    const Mat2 xs = sqrt_r_matrix(base);
    const Vec2 wb(dw[1], dw[2]);
    const Vec2 xw = xs * wb;
    // Z = (f̃₂, −f̃₁)/d
    const double z_dot = (x.ft2 * xw(0) - x.ft1 * xw(1)) / d;

    AdaptedPoint next;
    next.q_star = q + half / q + sd * dw[0];
    next.ft1 = x.ft1 - half * x.ft1 / q2 + sd * xw(0);
    next.ft2 = x.ft2 - half * x.ft2 / q2 + sd * xw(1);
    next.angle = normalize_angle(x.angle + sd * (z_dot + dw[3] / std::sqrt(d)));
    s.time += h;
    if (!(next.q_star >= p.eps_min)) {
        return StepStatus::axis_hit;
    }
    x = next;
    return StepStatus::ok;
}

StepStatus step_reduced(PathState& s, std::span<const double, 3> dw, const SimParams& p,
                        double h, ReducedMode mode)
{
    auto& x = std::get<OrbitPoint>(s.position);
    const double sd = std::sqrt(p.lambda * h);
    const double q = x.q_star;
    const double q2 = q * q;
    const double half = 0.5 * p.lambda * h;
    const Mat2 xs = sqrt_r_matrix(x);
    const Vec2 xw = xs * Vec2(dw[1], dw[2]);

    double drift_q = 1.0 / q;
    double drift_f = 1.0 / q2;
    if (mode == ReducedMode::xi_tilde) {
        const double d = x.d();
        drift_q -= q / d;
        drift_f += 1.0 / d;
    }
    OrbitPoint next;
    next.q_star = q + half * drift_q + sd * dw[0];
    next.ft1 = x.ft1 - half * drift_f * x.ft1 + sd * xw(0);
    next.ft2 = x.ft2 - half * drift_f * x.ft2 + sd * xw(1);
    s.time += h;
    if (!(next.q_star >= p.eps_min)) {
        return StepStatus::axis_hit;
    }
    x = next;
    return StepStatus::ok;
}

void accumulate_weights(PathState& s, const OrbitPoint& x_prev, const OrbitPoint& x_next, int n,
                        const SimParams& p, double h, std::span<const double, 2> dw_bar)
{
    const OrbitPoint mid{0.5 * (x_prev.q_star + x_next.q_star), 0.5 * (x_prev.ft1 + x_next.ft1),
                         0.5 * (x_prev.ft2 + x_next.ft2)};
    const double jac = jacobian_potential(mid, p.lambda) * h;
    s.jacobian_log += jac;
    if (p.include_jacobian) {
        s.weight_log += jac;
    }
    if (!p.potential.is_zero()) {
        s.weight_log += p.potential(mid) / (p.lambda * p.mass) * h;
    }
    if (n != 0) {
        const double d = x_prev.d();
        const Vec2 xw = sqrt_r_matrix(x_prev) * Vec2(dw_bar[0], dw_bar[1]);
        // 𝒜_f = (−f̃₂, f̃₁)/d
        const double conn_xw = (-x_prev.ft2 * xw(0) + x_prev.ft1 * xw(1)) / d;
        const double nn = static_cast<double>(n);
        const double decay = -p.lambda * nn * nn * h / (2.0 * d);
        const double rotation = -nn * std::sqrt(p.lambda * h) * conn_xw;
        s.phase *= std::polar(std::exp(decay), rotation);
    }
}

namespace {

PathState initial_state(ProcessKind kind, const AdaptedPoint& start)
{
    PathState s;
    switch (kind) {
    case ProcessKind::original: s.position = from_adapted(start); break;
    case ProcessKind::adapted:
    case ProcessKind::transformed: s.position = start; break;
    case ProcessKind::xi:
    case ProcessKind::xi_tilde: s.position = start.base(); break;
    }
    return s;
}

Sample run_path(ProcessKind kind, int n, const SimParams& p, const AdaptedPoint& start, double t,
                std::uint64_t path_index)
{
    NoiseStream rng(p.seed, path_index);
    PathState s = initial_state(kind, start);
    // the filtering factor needs the w̃^b̄ noise, present only in these kinds
    const int phase_n = (kind == ProcessKind::original || kind == ProcessKind::adapted) ? 0 : n;
    std::array<double, 4> dw{};
    Sample out;
    OrbitPoint prev = orbit_part(s.position, p.eps_min);
    while (s.time < t) {
        const double remaining = t - s.time;
        double h = kind == ProcessKind::original ? p.dt : refined_step(prev.q_star, p);
        if (h >= remaining || remaining - h < 1e-9 * h) {
            h = remaining;
        }
        StepStatus status = StepStatus::ok;
        switch (kind) {
        case ProcessKind::original:
            rng.fill_normals(dw);
            status = step_original(s, std::span<const double, 4>(dw), p, h);
            break;
        case ProcessKind::adapted:
            rng.fill_normals(dw);
            status = step_adapted(s, std::span<const double, 4>(dw), p, h);
            break;
        case ProcessKind::transformed:
            rng.fill_normals(dw);
            status = step_transformed(s, std::span<const double, 4>(dw), p, h);
            break;
        case ProcessKind::xi:
        case ProcessKind::xi_tilde:
            rng.fill_normals(std::span<double>(dw.data(), 3));
            status = step_reduced(s, std::span<const double, 3>(dw.data(), 3), p, h,
                                  kind == ProcessKind::xi ? ReducedMode::xi : ReducedMode::xi_tilde);
            break;
        }
        if (status == StepStatus::axis_hit) {
            out.discarded = true;
            break;
        }
        if (remaining == h) {
            s.time = t;
        }
        const OrbitPoint next = orbit_part(s.position, p.eps_min);
        accumulate_weights(s, prev, next, phase_n, p, h, std::span<const double, 2>(dw.data() + 1, 2));
        prev = next;
    }
    out.time = s.time;
    out.weight_log = s.weight_log;
    out.jacobian_log = s.jacobian_log;
    out.phase = s.phase;
    if (const auto* a = std::get_if<AdaptedPoint>(&s.position)) {
        out.end = *a;
    } else if (const auto* e = std::get_if<EuclideanPoint>(&s.position)) {
        out.end = out.discarded ? AdaptedPoint{prev.q_star, prev.ft1, prev.ft2, 0.0}
                                : to_adapted(*e, p.eps_min);
    } else {
        const auto& o = std::get<OrbitPoint>(s.position);
        out.end = {o.q_star, o.ft1, o.ft2, std::numeric_limits<double>::quiet_NaN()};
    }
    return out;
}

} // namespace

SampleSet simulate_batch(ProcessKind kind, int n, const SimParams& p, const AdaptedPoint& start,
                         double t)
{
    p.validate();
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw ConfigError("simulate_batch: horizon must be positive");
    }
    if (!(start.q_star >= p.eps_min)) {
        throw ConfigError("simulate_batch: start point inside the axis guard");
    }
    SampleSet set;
    set.kind = kind;
    set.n = n;
    set.samples.resize(p.n_paths);
    parallel_for_chunks(p.n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            set.samples[i] = run_path(kind, n, p, start, t, i);
        }
    });
    for (const auto& s : set.samples) {
        set.discarded += s.discarded ? 1 : 0;
    }
    return set;
}

void write_samples_csv(std::ostream& os, const SampleSet& set)
{
    os << "time,q_star,ft1,ft2,weight_log,phase_re,phase_im,discarded\n";
    char buf[256];
    for (const auto& s : set.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", s.time,
                      s.end.q_star, s.end.ft1, s.end.ft2, s.weight_log, s.phase.real(),
                      s.phase.imag(), s.discarded ? 1 : 0);
        os << buf;
    }
}

} // namespace orbitkernel
