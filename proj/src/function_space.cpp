#include "fracdyn/function_space.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fracdyn/caputo_solver.hpp"
#include "fracdyn/errors.hpp"
#include "fracdyn/mittag_leffler.hpp"

namespace fracdyn {

namespace {

// m^p - (m-1)^p for m >= 1 without cancellation.
double power_step(double m, double p) { return -std::pow(m, p) * std::expm1(p * std::log1p(-1.0 / m)); }

std::size_t steps_in(double length, double step) {
    return static_cast<std::size_t>(std::llround(length / step));
}

}  // namespace

double rho(const SampledFunction& f, const SampledFunction& h, RhoParams p) {
    if (p.n_max < 1) throw PreconditionError("rho needs n_max >= 1");
    if (f.dimension() != h.dimension()) throw PreconditionError("rho needs functions of equal dimension");
    const double need = static_cast<double>(p.n_max);
    const double slack = 1e-9 * need;
    if (f.horizon() < need - slack || h.horizon() < need - slack)
        throw DomainError("rho needs both functions sampled on [0, n_max]");
    const SampledFunction hh = h.step() == f.step() ? h : h.resample(f.step(), f.size() - 1);

    const std::size_t d = f.dimension();
    double total = 0.0, sup = 0.0;
    std::size_t i = 0;
    for (std::size_t n = 1; n <= p.n_max; ++n) {
        const double edge = static_cast<double>(n) + slack;
        for (; i < f.size() && f.theta(i) <= edge; ++i) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double e = f.at(i, c) - hh.at(i, c);
                s += e * e;
            }
            sup = std::max(sup, std::sqrt(s));
        }
        total += std::ldexp(sup / (1.0 + sup), -static_cast<int>(n));
    }
    return total;
}

SampledFunction apply_T(double tau, const SampledFunction& f, const FieldDef& field, std::span<const double> params,
                        double alpha, double dt, double horizon, ApplyReport* report) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw PreconditionError("tau must be finite and non-negative");
    if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw PreconditionError("output horizon must be positive");
    if (f.dimension() != field.dimension()) throw PreconditionError("function dimension does not match the field");

    const std::size_t k = steps_in(tau, dt);
    const std::size_t m = steps_in(horizon, dt);
    const double snapped = static_cast<double>(k) * dt;
    const std::size_t d = field.dimension();
    if (report) {
        report->tau = snapped;
        report->snap_error = std::abs(tau - snapped);
        report->extended = f.horizon() < snapped + static_cast<double>(m) * dt - 1e-9 * dt;
    }

    // Forcing term f(tau + theta) on the output grid; exact samples when the grids agree.
    const SampledFunction shifted = f.step() == dt && k + m < f.size()
        ? SampledFunction(dt, d, std::vector<double>(f.values().begin() + k * d, f.values().begin() + (k + m + 1) * d))
        : SampledFunction::from_function(dt, m, d, [&](double theta, std::span<double> out) {
              f.value_at(snapped + theta, out);
          });
    if (k == 0) return shifted;

    const Trajectory x = solve_svie(f, field, params, alpha, snapped, dt);
    if (x.escape) throw DomainError("solution of the integral equation escaped before tau");
    const double h = x.dt;

    std::vector<double> g((k + 1) * d);
    for (std::size_t i = 0; i <= k; ++i) field.eval_into(x.row(i), params, std::span<double>(g.data() + i * d, d));

    // Interval [s_i, s_{i+1}] seen from tau + theta_j sits at distance index r = j + k - i.
    std::vector<double> left(k + m + 1, 0.0), right(k + m + 1, 0.0);
    const double scale = std::pow(h, alpha) / gamma_function(alpha);
    for (std::size_t r = 2; r <= k + m; ++r) {
        const double rr = static_cast<double>(r);
        const double i0 = power_step(rr, alpha) / alpha;
        const double i1 = rr * i0 - power_step(rr, alpha + 1.0) / (alpha + 1.0);
        left[r] = scale * (i0 - i1);
        right[r] = scale * i1;
    }

    std::vector<double> values(shifted.values());
    for (std::size_t c = 0; c < d; ++c) values[c] = x.at(k, c);
    for (std::size_t j = 1; j <= m; ++j) {
        for (std::size_t c = 0; c < d; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const std::size_t r = j + k - i;
                acc += left[r] * g[i * d + c] + right[r] * g[(i + 1) * d + c];
            }
            values[j * d + c] += acc;
        }
    }
    return SampledFunction(dt, d, std::move(values));
}

double semigroup_defect(double tau1, double tau2, const SampledFunction& f, const FieldDef& field,
                        std::span<const double> params, double alpha, double dt, RhoParams p) {
    const double horizon = static_cast<double>(p.n_max);
    const auto direct = apply_T(tau1 + tau2, f, field, params, alpha, dt, horizon);
    const auto inner = apply_T(tau2, f, field, params, alpha, dt, horizon + tau1);
    const auto composed = apply_T(tau1, inner, field, params, alpha, dt, horizon);
    return rho(direct, composed, p);
}

double state_space_defect(double alpha, double t, double s, double lam) {
    if (!(t > 0.0) || !(s > 0.0)) throw PreconditionError("state_space_defect needs t, s > 0");
    if (!(lam > 0.0)) throw PreconditionError("state_space_defect needs lam > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    auto e = [&](double u) { return ml_eval(alpha, 1.0, -lam * std::pow(u, alpha)); };
    return std::abs(e(t + s) - e(t) * e(s));
}

}  // namespace fracdyn
