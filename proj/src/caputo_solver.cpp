#include "fracdyn/caputo_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fracdyn/errors.hpp"

namespace fracdyn {

namespace {

constexpr double kCorrectorTolerance = 1e-12;
constexpr std::size_t kCorrectorPasses = 10;

// (k+1)^a - k^a without cancellation for large k.
double rectangle_weight(double a, std::size_t k) {
    if (k == 0) return 1.0;
    const double kk = static_cast<double>(k);
    return std::pow(kk, a) * std::expm1(a * std::log1p(1.0 / kk));
}

// (k+2)^p - 2(k+1)^p + k^p with p = a + 1.
double trapezoid_weight(double a, std::size_t k) {
    const double p = a + 1.0;
    if (k == 0) return std::exp2(p) - 2.0;
    const double kk = static_cast<double>(k);
    const double u = std::expm1(p * std::log1p(2.0 / kk));
    const double v = std::expm1(p * std::log1p(1.0 / kk));
    return std::pow(kk, p) * (u - 2.0 * v);
}

// n^p - (n - a)(n+1)^a with p = a + 1, the corrector weight of the initial value.
double trapezoid_start_weight(double a, std::size_t n) {
    if (n == 0) return a;
    const double nn = static_cast<double>(n);
    const double w = std::expm1(a * std::log1p(1.0 / nn));
    return std::pow(nn, a) * (a - (nn - a) * w);
}

bool beyond(std::span<const double> x, std::size_t& component) {
    for (std::size_t c = 0; c < x.size(); ++c) {
        if (!(std::abs(x[c]) <= kEscapeThreshold)) {
            component = c;
            return true;
        }
    }
    return false;
}

struct CorrectorResult {
    std::size_t iterations;
    double residual;
};

// Solves y = forcing + c (g(y) + history). Fixed-point passes first; if they
// stop contracting (c |g'| >= 1 on stiff transients) the remaining budget goes
// to damped Newton with a forward-difference Jacobian.
class Corrector {
public:
    Corrector(const FieldDef& field, std::span<const double> params, double c)
        : field_(field), params_(params), c_(c), d_(field.dimension()), prev_(d_), gy_(d_), r_(d_), trial_(d_),
          jac_(d_ * d_), step_(d_) {}

    CorrectorResult solve(const double* forcing, const std::vector<double>& history, std::vector<double>& y) {
        std::size_t it = 0;
        double residual = 0.0, last = std::numeric_limits<double>::infinity();
        while (it < kCorrectorPasses) {
            prev_ = y;
            if (!eval(prev_, gy_)) break;
            residual = 0.0;
            for (std::size_t c = 0; c < d_; ++c) {
                y[c] = forcing[c] + c_ * (gy_[c] + history[c]);
                residual = std::max(residual, std::abs(y[c] - prev_[c]) / std::max(1.0, std::abs(y[c])));
            }
            ++it;
            if (residual <= kCorrectorTolerance) return {it, residual};
            if (it >= 2 && residual > 0.5 * last) {
                y = prev_;
                break;
            }
            last = residual;
        }
        if (it >= kCorrectorPasses && residual <= kCorrectorTolerance) return {it, residual};
        return newton(forcing, history, y, it);
    }

private:
    const FieldDef& field_;
    std::span<const double> params_;
    double c_;
    std::size_t d_;
    std::vector<double> prev_, gy_, r_, trial_, jac_, step_;

    static constexpr std::size_t kNewtonIterations = 40;

    bool eval(const std::vector<double>& x, std::vector<double>& out) {
        for (double v : x)
            if (!(std::abs(v) <= kEscapeThreshold)) return false;
        field_.eval_into(x, params_, out);
        return true;
    }

    // r = y - forcing - c (g(y) + history); returns max norm scaled by |y|.
    double defect(const double* forcing, const std::vector<double>& history, const std::vector<double>& y,
                  std::vector<double>& r) {
        if (!eval(y, gy_)) return std::numeric_limits<double>::infinity();
        double norm = 0.0;
        for (std::size_t c = 0; c < d_; ++c) {
            r[c] = y[c] - forcing[c] - c_ * (gy_[c] + history[c]);
            norm = std::max(norm, std::abs(r[c]) / std::max(1.0, std::abs(y[c])));
        }
        return norm;
    }

    CorrectorResult newton(const double* forcing, const std::vector<double>& history, std::vector<double>& y,
                           std::size_t it) {
        double norm = defect(forcing, history, y, r_);
        if (!std::isfinite(norm)) return {it, norm};
        for (std::size_t k = 0; k < kNewtonIterations && norm > kCorrectorTolerance; ++k, ++it) {
            // J = I - c dg/dy
            const std::vector<double> g0 = gy_;
            for (std::size_t j = 0; j < d_; ++j) {
                trial_ = y;
                const double h = 1e-7 * std::max(1.0, std::abs(y[j]));
                trial_[j] += h;
                if (!eval(trial_, gy_)) return {it, norm};
                for (std::size_t i = 0; i < d_; ++i)
                    jac_[i * d_ + j] = (i == j ? 1.0 : 0.0) - c_ * (gy_[i] - g0[i]) / h;
            }
            if (!solve_linear(jac_, r_, step_)) break;
            double lambda = 1.0;
            double trial_norm = std::numeric_limits<double>::infinity();
            for (int halvings = 0; halvings < 30; ++halvings, lambda *= 0.5) {
                for (std::size_t c = 0; c < d_; ++c) trial_[c] = y[c] - lambda * step_[c];
                trial_norm = defect(forcing, history, trial_, prev_);
                if (trial_norm < norm) break;
            }
            if (!(trial_norm < norm)) break;
            y = trial_;
            r_ = prev_;
            norm = trial_norm;
        }
        return {it, norm};
    }

    // Gaussian elimination with partial pivoting on a copy of A.
    bool solve_linear(std::vector<double> A, std::vector<double> b, std::vector<double>& x) const {
        const std::size_t n = d_;
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t piv = col;
            for (std::size_t i = col + 1; i < n; ++i)
                if (std::abs(A[i * n + col]) > std::abs(A[piv * n + col])) piv = i;
            if (A[piv * n + col] == 0.0) return false;
            if (piv != col) {
                for (std::size_t j = 0; j < n; ++j) std::swap(A[col * n + j], A[piv * n + j]);
                std::swap(b[col], b[piv]);
            }
            for (std::size_t i = col + 1; i < n; ++i) {
                const double m = A[i * n + col] / A[col * n + col];
                for (std::size_t j = col; j < n; ++j) A[i * n + j] -= m * A[col * n + j];
                b[i] -= m * b[col];
            }
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = b[i];
            for (std::size_t j = i + 1; j < n; ++j) s -= A[i * n + j] * x[j];
            x[i] = s / A[i * n + i];
        }
        return true;
    }
};

// Shared scheme for x_n = forcing_n + I^alpha g(x)(t_n). `forcing` holds
// (steps + 1) rows of d values.
Trajectory integrate(const FieldDef& field, std::span<const double> params, double alpha, std::size_t steps, double h,
                     const std::vector<double>& forcing) {
    const std::size_t d = field.dimension();
    const std::size_t N = steps;

    Trajectory tr;
    tr.alpha = alpha;
    tr.dt = h;
    tr.dimension = d;
    tr.times.reserve(N + 1);
    tr.states.reserve((N + 1) * d);

    // Weights stored reversed so the history sums run over contiguous memory:
    // b_{n-j} = rb[N-1-n+j].
    std::vector<double> rb(N), ra(N);
    for (std::size_t k = 0; k < N; ++k) {
        rb[N - 1 - k] = rectangle_weight(alpha, k);
        ra[N - 1 - k] = trapezoid_weight(alpha, k);
    }
    const double hp = std::pow(h, alpha);
    const double cp = hp / std::tgamma(alpha + 1.0);
    const double cc = hp / std::tgamma(alpha + 2.0);

    // Field history, one contiguous column per component.
    std::vector<std::vector<double>> F(d, std::vector<double>(N + 1));
    std::vector<double> x(forcing.begin(), forcing.begin() + d);
    std::vector<double> fx(d), y(d), hist(d);
    Corrector corrector(field, params, cc);

    tr.times.push_back(0.0);
    tr.states.insert(tr.states.end(), x.begin(), x.end());
    field.eval_into(x, params, fx);
    for (std::size_t c = 0; c < d; ++c) F[c][0] = fx[c];

    for (std::size_t n = 0; n < N; ++n) {
        const double* b = rb.data() + (N - 1 - n);
        const double* a = ra.data() + (N - 1 - n);
        const double a0 = trapezoid_start_weight(alpha, n);
        const double* f_next = forcing.data() + (n + 1) * d;

        for (std::size_t c = 0; c < d; ++c) {
            const double* Fc = F[c].data();
            double sp = b[0] * Fc[0];
            double sc = 0.0;
#pragma omp simd reduction(+ : sp, sc)
            for (std::size_t j = 1; j <= n; ++j) {
                sp += b[j] * Fc[j];
                sc += a[j] * Fc[j];
            }
            y[c] = f_next[c] + cp * sp;
            hist[c] = a0 * Fc[0] + sc;
        }

        std::size_t escaped_component = 0;
        bool escaped = beyond(y, escaped_component);
        std::size_t passes = 0;
        double residual = 0.0;
        if (!escaped) {
            const CorrectorResult r = corrector.solve(f_next, hist, y);
            passes = r.iterations;
            residual = r.residual;
            escaped = beyond(y, escaped_component);
        }
        tr.meta.max_corrector_iterations = std::max(tr.meta.max_corrector_iterations, passes);
        tr.meta.total_corrector_iterations += passes;
        if (!escaped) tr.meta.max_corrector_residual = std::max(tr.meta.max_corrector_residual, residual);

        tr.times.push_back(h * static_cast<double>(n + 1));
        if (escaped) {
            const double v = y[escaped_component];
            tr.states.insert(tr.states.end(), y.begin(), y.end());
            tr.escape = EscapeMarker{n + 1, escaped_component, v < 0 ? -1 : 1};
            return tr;
        }
        tr.states.insert(tr.states.end(), y.begin(), y.end());
        field.eval_into(y, params, fx);
        for (std::size_t c = 0; c < d; ++c) F[c][n + 1] = fx[c];
    }
    return tr;
}

}  // namespace

std::size_t grid_steps(double t_end, double dt) {
    const double r = t_end / dt;
    const double nearest = std::round(r);
    const double steps = std::abs(r - nearest) <= 1e-9 * std::max(1.0, r) ? nearest : std::ceil(r);
    return static_cast<std::size_t>(std::max(1.0, steps));
}

void CaputoProblem::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0, 1)");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw PreconditionError("t_end must be positive");
    if (!(dt > 0.0) || !(dt < t_end)) throw PreconditionError("dt must satisfy 0 < dt < t_end");
    if (t_end / dt > static_cast<double>(kMaxSteps)) throw PreconditionError("t_end / dt exceeds the 1e7 step budget");
    if (x0.size() != field.dimension()) throw PreconditionError("x0 length does not match the field dimension");
    if (params.size() != field.parameters().size()) throw PreconditionError("parameter count mismatch");
    for (double v : x0)
        if (!std::isfinite(v)) throw PreconditionError("x0 must be finite");
}

std::vector<double> Trajectory::component(std::size_t c) const {
    std::vector<double> out(size());
    for (std::size_t n = 0; n < size(); ++n) out[n] = at(n, c);
    return out;
}

Trajectory solve_pece(const CaputoProblem& p) {
    p.validate();
    const std::size_t N = grid_steps(p.t_end, p.dt);
    const double h = p.t_end / static_cast<double>(N);
    std::vector<double> forcing;
    forcing.reserve((N + 1) * p.x0.size());
    for (std::size_t n = 0; n <= N; ++n) forcing.insert(forcing.end(), p.x0.begin(), p.x0.end());
    return integrate(p.field, p.params, p.alpha, N, h, forcing);
}

Trajectory solve_svie(const SampledFunction& forcing, const FieldDef& field, std::span<const double> params,
                      double alpha, double t_end, double dt) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0, 1)");
    if (!(t_end > 0.0) || !(dt > 0.0) || !(dt <= t_end)) throw PreconditionError("need 0 < dt <= t_end");
    if (t_end / dt > static_cast<double>(kMaxSteps)) throw PreconditionError("t_end / dt exceeds the 1e7 step budget");
    if (forcing.dimension() != field.dimension()) throw PreconditionError("forcing dimension does not match the field");
    if (params.size() != field.parameters().size()) throw PreconditionError("parameter count mismatch");
    if (forcing.horizon() < t_end * (1.0 - 1e-12)) throw PreconditionError("forcing does not cover [0, t_end]");

    const std::size_t N = grid_steps(t_end, dt);
    const double h = t_end / static_cast<double>(N);
    const SampledFunction grid = forcing.resample(h, N);
    return integrate(field, params, alpha, N, h, grid.values());
}

ConvergenceOrder convergence_order(const CaputoProblem& p, int levels) {
    if (levels < 3) throw PreconditionError("convergence_order needs at least 3 levels");
    p.validate();

    auto endpoint = [&](double dt) {
        CaputoProblem q = p;
        q.dt = dt;
        const Trajectory tr = solve_pece(q);
        if (tr.escape) throw PreconditionError("trajectory escaped during the convergence study");
        const auto last = tr.final_state();
        return std::vector<double>(last.begin(), last.end());
    };

    const auto reference = endpoint(p.dt / std::ldexp(1.0, levels));
    ConvergenceOrder out;
    for (int k = 0; k < levels; ++k) {
        const double dt = p.dt / std::ldexp(1.0, k);
        const auto x = endpoint(dt);
        double err = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) err = std::max(err, std::abs(x[c] - reference[c]));
        out.dts.push_back(dt);
        out.errors.push_back(err);
    }
    if (std::all_of(out.errors.begin(), out.errors.end(), [](double e) { return e < 1e-14; })) {
        out.exact = true;
        return out;
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (std::size_t i = 0; i < out.dts.size(); ++i) {
        if (out.errors[i] <= 0.0) continue;
        const double lx = std::log(out.dts[i]), ly = std::log(out.errors[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        n += 1;
    }
    if (n < 2) {
        out.exact = true;
        return out;
    }
    out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return out;
}

}  // namespace fracdyn
