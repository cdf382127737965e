#pragma once

#include <cstddef>
#include <span>

#include "fracdyn/field_expr.hpp"
#include "fracdyn/sampled_function.hpp"

namespace fracdyn {

struct RhoParams {
    std::size_t n_max = 20;  // terms kept of sum_n 2^-n rho_n; truncation error <= 2^-n_max
};

/// sum_{n=1}^{n_max} 2^-n s_n / (1 + s_n) with s_n = sup_{[0,n]} |f - h|
/// (Euclidean norm). h is resampled onto f's grid when the grids differ.
/// DomainError when either function stops before n_max.
double rho(const SampledFunction& f, const SampledFunction& h, RhoParams p = {});

struct ApplyReport {
    double tau = 0.0;         // tau snapped to the dt grid
    double snap_error = 0.0;  // |requested tau - tau|
    bool extended = false;    // f was shorter than tau + horizon and was held at its last value
};

/// (T_tau f)(theta) = f(tau + theta) + (1/Gamma(alpha)) int_0^tau (tau + theta - s)^(alpha-1) g(x_f(s)) ds
/// on theta = 0, dt, ..., horizon, where x_f solves x = f + I^alpha g(x) on
/// [0, tau]. The integral uses product-trapezoid weights on the solver grid;
/// theta = 0 takes the solver's endpoint.
SampledFunction apply_T(double tau, const SampledFunction& f, const FieldDef& field, std::span<const double> params,
                        double alpha, double dt, double horizon, ApplyReport* report = nullptr);

/// rho(T_{tau1+tau2} f, T_{tau1} T_{tau2} f) on outputs of horizon n_max.
double semigroup_defect(double tau1, double tau2, const SampledFunction& f, const FieldDef& field,
                        std::span<const double> params, double alpha, double dt, RhoParams p = {});

/// |E_alpha(-lam (t+s)^alpha) - E_alpha(-lam t^alpha) E_alpha(-lam s^alpha)|,
/// the failure of the linear flow x -> E_alpha(-lam t^alpha) x to compose.
/// Valid for 0 < alpha <= 1.
double state_space_defect(double alpha, double t, double s, double lam);

}  // namespace fracdyn
