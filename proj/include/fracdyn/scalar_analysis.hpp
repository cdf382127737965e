#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracdyn/caputo_solver.hpp"
#include "fracdyn/errors.hpp"
#include "fracdyn/field_expr.hpp"

namespace fracdyn {

/// A zero of g with |g'| below the non-degeneracy threshold.
class DegenerateZeroError : public Error {
public:
    DegenerateZeroError(double zero, double derivative)
        : Error("degenerate zero at x = " + std::to_string(zero) + " (g' = " + std::to_string(derivative) + ")"),
          zero_(zero) {}
    double zero() const noexcept { return zero_; }

private:
    double zero_;
};

/// Seed at or beyond the zero bounding its basin.
class BasinError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// Bisection could not bracket a solution.
class BracketError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

inline constexpr double kDegenerateDerivative = 1e-6;

struct ScanInterval {
    double lo;
    double hi;
};

/// Sampled check of <x, g(x)> <= a - b |x|^2 on a box.
struct DissipativityCertificate {
    double a = 0.0;
    double b = 0.0;
    std::vector<ScanInterval> scan;
    double worst_margin = 0.0;       // min of a - b|x|^2 - <g(x), x>
    std::vector<double> worst_point;
    bool passed = false;
    std::string note;                // always records that nothing is claimed beyond the box

    /// sqrt(a/b), the radius that contains every zero when the check passes.
    double zero_radius() const;
};

/// Samples a grid of at least n_samples points over the box (one interval per
/// coordinate). Passes when the worst margin is non-negative up to rounding.
DissipativityCertificate check_h1(const FieldDef& field, std::span<const double> params, double a, double b,
                                  const std::vector<ScanInterval>& box, std::size_t n_samples = 1000);

/// [-sqrt(a/b) - 1, sqrt(a/b) + 1].
ScanInterval default_scan_interval(const DissipativityCertificate& cert);

/// Sorted zeros of a scalar field with g' at each.
struct ZeroSet {
    std::vector<double> zeros;
    std::vector<double> derivs;
    std::vector<bool> degenerate;
    bool even_count = false;  // warning: an even count means the scan missed something or (H1) fails

    std::size_t size() const noexcept { return zeros.size(); }
    bool empty() const noexcept { return zeros.empty(); }
    bool stable(std::size_t i) const { return derivs[i] < 0.0; }
    bool has_degenerate() const;
    /// Odd count with derivative signs alternating -, +, -, ..., -.
    bool alternates() const;
};

/// Sign-change bracketing on `resolution` subintervals, bisection to width
/// <= 1e-12, plus a tangency search at local minima of |g|. Zeros with
/// |g'| < 1e-6 raise DegenerateZeroError unless `tolerate_degenerate`, in which
/// case they are kept and flagged.
ZeroSet find_zeros(const FieldDef& field, std::span<const double> params, ScanInterval scan,
                   std::size_t resolution = 1000, bool tolerate_degenerate = false);

struct AttractorInterval {
    double lo;
    double hi;
};

AttractorInterval attractor_interval(const ZeroSet& zs);

/// Decay rate of the Mittag-Leffler envelope toward the stable zero x_star
/// from eta, from the shifted field f(w) = g(w + x_star):
/// min(|f'(0)|/2, min of |f(w)/w| over [eps, |eta - x_star|] on eta's side).
double gamma_rate_constant(const FieldDef& field, std::span<const double> params, double x_star, double eta);

struct EnvelopeReport {
    bool holds = true;
    double worst_ratio = 0.0;  // max of observed distance / envelope
    std::optional<std::size_t> first_violation;
    std::size_t points = 0;
};

/// |x(t_n) - x_star| <= E_alpha(-gamma t_n^alpha) |eta - x_star| (1 + 1e-3).
EnvelopeReport envelope_check(const Trajectory& traj, double x_star, double gamma);

/// d(x(t_n), N) >= E_alpha(-L t_n^alpha) d(eta, N) (1 - 1e-3); worst_ratio is
/// the max of envelope / distance.
EnvelopeReport lower_bound_check(const Trajectory& traj, const ZeroSet& zs, double lipschitz);

/// max |g'| over the hull of {eta} and the attractor interval, widened by 10%.
double default_lipschitz(const FieldDef& field, std::span<const double> params, const ZeroSet& zs, double eta);

/// Limit of x(t, eta) as t -> infinity from the sign structure of the zero
/// set. Returns +-infinity when the solution is unbounded on that side.
double classify_limit(const FieldDef& field, std::span<const double> params, const ZeroSet& zs, double eta);

/// Slope of log|x(t) - x_star| against log t on [t_end/100, t_end].
double rate_fit(const Trajectory& traj, double x_star);

/// zeta with x(t_back, zeta) = eta within tol, by bisection on the distance to
/// the zero the backward solution approaches (in log scale).
double backward_extend(const FieldDef& field, std::span<const double> params, double alpha, const ZeroSet& zs,
                       double eta, double t_back, double dt, double tol = 1e-10);

struct HeteroclinicOrbit {
    double source;
    double target;
    double eta;
    std::vector<double> times;   // negative horizons first, then the forward grid
    std::vector<double> values;
    bool strictly_between = true;
};

/// Orbit through eta inside (z_i, z_{i+1}), i = interval_index. The backward
/// part is sampled at horizons T_back, T_back/2, ... down to about dt.
HeteroclinicOrbit heteroclinic_orbit(const FieldDef& field, std::span<const double> params, double alpha,
                                     const ZeroSet& zs, std::size_t interval_index, double eta, double t_back,
                                     double t_fwd, double dt);

}  // namespace fracdyn
