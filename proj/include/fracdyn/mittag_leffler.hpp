#pragma once

namespace fracdyn {

/// Arguments of the two-parameter Mittag-Leffler function E_{alpha,beta}(z)
/// restricted to the real line.
class MLQuery {
public:
    /// Throws DomainError unless 0 < alpha <= 2 and beta > 0.
    MLQuery(double alpha, double beta, double z);

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double z() const noexcept { return z_; }

private:
    double alpha_;
    double beta_;
    double z_;
};

/// Gamma function for x in (0, 170]. DomainError for x <= 0, OverflowError
/// above 170.
double gamma_function(double x);

/// 1/Gamma(x) on the whole real line (zero at the poles).
double reciprocal_gamma(double x);

/// E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha k + beta).
///
/// Evaluation regimes:
///   - z > 0: power series (all terms positive).
///   - z < 0 with |z|^{1/alpha} <= 5: power series with compensated
///     summation; cancellation costs at most a factor e^5.
///   - z < 0 otherwise: inverse Laplace transform collapsed onto the
///     branch cut. The cut integral is taken from its algebraic asymptotic
///     expansion when that converges to round-off, else by tanh-sinh
///     quadrature. For 1 < alpha <= 2 the residues of the two poles on the
///     principal sheet are added. alpha == 1 is handled by a Kummer
///     transformed (Poisson weighted) sum.
///
/// Throws OverflowError when the result exceeds double range and
/// EvaluationError if a regime fails to converge.
double ml_eval(const MLQuery& q);
double ml_eval(double alpha, double beta, double z);

/// E_alpha(-rate * t^alpha) for alpha in (0,1), rate > 0, t >= 0.
double ml_decay(double alpha, double rate, double t);

namespace detail {
// Individual regimes, exposed for cross-checking in tests.
double ml_series(double alpha, double beta, double z);
double ml_cut_integral_quadrature(double alpha, double beta, double z);
double ml_cut_integral_asymptotic(double alpha, double beta, double z, bool* converged);
double ml_pole_residues(double alpha, double beta, double z);
double ml_alpha_one_negative(double beta, double z);
}  // namespace detail

}  // namespace fracdyn
