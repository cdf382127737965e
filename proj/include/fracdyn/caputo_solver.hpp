#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fracdyn/field_expr.hpp"
#include "fracdyn/sampled_function.hpp"

namespace fracdyn {

inline constexpr double kEscapeThreshold = 1e8;
inline constexpr std::size_t kMaxSteps = 10'000'000;

/// Initial value problem D^alpha x = g(x), x(0) = x0, with 0 < alpha < 1,
/// solved on [0, t_end] with nominal step dt.
struct CaputoProblem {
    double alpha = 0.5;
    FieldDef field;
    std::vector<double> params;
    std::vector<double> x0;
    double t_end = 1.0;
    double dt = 1e-2;

    /// Throws PreconditionError describing the first violated constraint.
    void validate() const;
};

/// Number of grid intervals used for [0, t_end] with nominal step dt. The
/// actual step is t_end / steps, which equals dt whenever dt divides t_end.
std::size_t grid_steps(double t_end, double dt);

struct EscapeMarker {
    std::size_t index;      // first grid index past the threshold
    std::size_t component;  // coordinate that escaped
    int sign;               // direction of escape, +1 or -1
};

struct SolverMeta {
    std::size_t max_corrector_iterations = 0;
    std::size_t total_corrector_iterations = 0;
    double max_corrector_residual = 0.0;
};

/// Uniform-grid solution. `states` is row-major with one row per time point.
/// If the solution escaped, the grid stops at the escape index.
struct Trajectory {
    double alpha = 0.0;
    double dt = 0.0;
    std::size_t dimension = 0;
    std::vector<double> times;
    std::vector<double> states;
    SolverMeta meta;
    std::optional<EscapeMarker> escape;

    std::size_t size() const noexcept { return times.size(); }
    double at(std::size_t n, std::size_t c = 0) const { return states[n * dimension + c]; }
    std::span<const double> row(std::size_t n) const { return {states.data() + n * dimension, dimension}; }
    std::span<const double> final_state() const { return row(size() - 1); }
    /// Column c as a separate vector.
    std::vector<double> component(std::size_t c) const;
};

/// Fractional Adams predictor-corrector for x(t) = x0 + I^alpha g(x)(t).
/// The predictor uses product-rectangle weights, the corrector
/// product-trapezoid weights iterated to residual <= 1e-12 (at most 10 passes).
Trajectory solve_pece(const CaputoProblem& p);

/// Same scheme for x(t) = f(t) + I^alpha g(x)(t). The forcing is resampled by
/// linear interpolation when its grid differs from the solver's.
Trajectory solve_svie(const SampledFunction& forcing, const FieldDef& field, std::span<const double> params,
                      double alpha, double t_end, double dt);

struct ConvergenceOrder {
    bool exact = false;  // every error was below 1e-14
    double slope = 0.0;
    std::vector<double> dts;
    std::vector<double> errors;
};

/// Solves at dt / 2^k for k < levels and compares x(t_end) with a reference
/// solve at dt / 2^levels; the slope is the least-squares fit of log error
/// against log dt.
ConvergenceOrder convergence_order(const CaputoProblem& p, int levels);

}  // namespace fracdyn
