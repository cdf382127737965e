#include "fracdyn/mittag_leffler.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fracdyn/errors.hpp"

namespace fracdyn {

namespace {

constexpr double kPi = std::numbers::pi;

// Series regime on the negative axis is used while |z|^{1/alpha} stays below
// this value; the largest term is then at most ~e^5 times the result.
constexpr double kSeriesExponentLimit = 5.0;

// exp(-60) is far below double round-off relative to the cut integrand.
constexpr double kCutExponentCutoff = 60.0;

// sin(pi x) with exact zeros at the integers.
double sin_pi(double x) {
    double r = std::fmod(x, 2.0);
    if (r < 0.0) r += 2.0;
    if (r == 0.0 || r == 1.0) return 0.0;
    if (r == 0.5) return 1.0;
    if (r == 1.5) return -1.0;
    return std::sin(kPi * r);
}

double cos_pi(double x) {
    double r = std::fmod(x, 2.0);
    if (r < 0.0) r += 2.0;
    if (r == 0.5 || r == 1.5) return 0.0;
    if (r == 0.0) return 1.0;
    if (r == 1.0) return -1.0;
    return std::cos(kPi * r);
}

std::string describe(double alpha, double beta, double z) {
    std::ostringstream os;
    os.precision(17);
    os << "(alpha=" << alpha << ", beta=" << beta << ", z=" << z << ")";
    return os.str();
}

// integrate() is non-const in this Boost release and extends its abscissa
// tables lazily, so every thread keeps its own instance.
boost::math::quadrature::tanh_sinh<double>& integrator() {
    thread_local boost::math::quadrature::tanh_sinh<double> instance(15);
    return instance;
}

double ml_negative_large(double alpha, double beta, double z) {
    if (alpha == 1.0) return detail::ml_alpha_one_negative(beta, z);

    // Shift beta into (1 - alpha, 1] so the cut integrand is bounded at 0:
    // E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z.
    if (beta > 1.0) {
        const double lower = ml_negative_large(alpha, beta - alpha, z);
        return (lower - reciprocal_gamma(beta - alpha)) / z;
    }

    const double residues = detail::ml_pole_residues(alpha, beta, z);
    bool converged = false;
    double cut = detail::ml_cut_integral_asymptotic(alpha, beta, z, &converged);
    if (!converged) cut = detail::ml_cut_integral_quadrature(alpha, beta, z);
    return residues + cut;
}

}  // namespace

MLQuery::MLQuery(double alpha, double beta, double z) : alpha_(alpha), beta_(beta), z_(z) {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw DomainError("Mittag-Leffler alpha must lie in (0, 2], got " + std::to_string(alpha));
    }
    if (!(beta > 0.0)) {
        throw DomainError("Mittag-Leffler beta must be positive, got " + std::to_string(beta));
    }
    if (!std::isfinite(z)) throw DomainError("Mittag-Leffler argument must be finite");
}

double gamma_function(double x) {
    if (!(x > 0.0)) throw DomainError("gamma_function: argument must be positive, got " + std::to_string(x));
    if (x > 170.0) throw OverflowError("gamma_function: argument above 170 overflows, got " + std::to_string(x));
    return std::tgamma(x);
}

double reciprocal_gamma(double x) {
    if (x <= 0.0 && x == std::floor(x)) return 0.0;
    if (x > 170.0) return std::exp(-std::lgamma(x));
    return 1.0 / std::tgamma(x);
}

namespace detail {

double ml_series(double alpha, double beta, double z) {
    if (z == 0.0) return reciprocal_gamma(beta);
    const double ax = std::abs(z);
    const double reach = std::pow(ax, 1.0 / alpha);
    const auto cap = static_cast<long>(100.0 + std::ceil(10.0 * std::max(1.0, reach) / alpha));
    const double log_ax = std::log(ax);

    // Neumaier compensated summation.
    double sum = 0.0;
    double comp = 0.0;
    double power = 1.0;
    double previous = std::numeric_limits<double>::infinity();
    bool past_peak = false;
    for (long k = 0; k <= cap; ++k) {
        const double arg = alpha * static_cast<double>(k) + beta;
        double term;
        if (arg < 170.0 && std::abs(power) < 1e300) {
            term = power * reciprocal_gamma(arg);
            power *= z;
        } else {
            const double mag = std::exp(static_cast<double>(k) * log_ax - std::lgamma(arg));
            term = (z < 0.0 && (k % 2 == 1)) ? -mag : mag;
            power = std::numeric_limits<double>::infinity();
        }
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        if (!std::isfinite(sum)) {
            throw OverflowError("Mittag-Leffler series overflow at " + describe(alpha, beta, z));
        }
        const double mag = std::abs(term);
        if (mag < previous) past_peak = true;
        previous = mag;
        if (past_peak && (mag == 0.0 || mag <= 1e-17 * std::abs(sum + comp))) return sum + comp;
    }
    throw EvaluationError("Mittag-Leffler series did not converge at " + describe(alpha, beta, z));
}

double ml_pole_residues(double alpha, double beta, double z) {
    // Poles of s^{alpha-beta}/(s^alpha - z) on the principal sheet for z < 0
    // sit at |z|^{1/alpha} exp(+-i pi/alpha); they exist only when alpha > 1.
    if (alpha <= 1.0 || z >= 0.0) return 0.0;
    const double radius = std::pow(-z, 1.0 / alpha);
    const std::complex<double> s = std::polar(radius, kPi / alpha);
    const std::complex<double> log_s(std::log(radius), kPi / alpha);
    const std::complex<double> value = std::exp((1.0 - beta) * log_s + s);
    return 2.0 / alpha * value.real();
}

double ml_cut_integral_asymptotic(double alpha, double beta, double z, bool* converged) {
    // -sum_{k>=1} z^{-k} / Gamma(beta - alpha k): the large-|z| expansion of
    // the branch cut contribution.
    const int cap = std::max(40, static_cast<int>(std::floor(10.0 / alpha)));
    const double inv = 1.0 / z;
    double power = 1.0;
    double sum = 0.0;
    double last = std::numeric_limits<double>::infinity();
    bool any_nonzero = false;
    *converged = false;
    for (int k = 1; k <= cap; ++k) {
        power *= inv;
        const double term = -power * reciprocal_gamma(beta - alpha * k);
        if (term == 0.0) continue;
        const double mag = std::abs(term);
        if (any_nonzero && mag > last) return sum;  // divergent tail reached first
        any_nonzero = true;
        last = mag;
        sum += term;
        if (mag <= 1e-17 * std::abs(sum)) {
            *converged = true;
            return sum;
        }
    }
    if (!any_nonzero) *converged = true;
    return sum;
}

double ml_cut_integral_quadrature(double alpha, double beta, double z) {
    // (1/(alpha pi)) int_0^inf exp(-c^{1/alpha}) c^{(1-beta)/alpha}
    //   [c sin(pi beta) + z sin(pi(alpha-beta))] / (c^2 - 2 z c cos(pi alpha) + z^2) dc
    const double s_beta = sin_pi(beta);
    const double s_diff = sin_pi(alpha - beta);
    const double centre = z * cos_pi(alpha);
    const double width = std::abs(z * sin_pi(alpha));
    const double inv_alpha = 1.0 / alpha;
    const double power = (1.0 - beta) / alpha;
    const double upper = std::pow(kCutExponentCutoff, alpha);

    auto integrand = [&](double c) {
        if (c <= 0.0) return power == 0.0 ? z * s_diff / (z * z) : 0.0;
        const double shifted = c - centre;
        const double denom = shifted * shifted + width * width;
        const double weight = std::exp(-std::pow(c, inv_alpha)) * (power == 0.0 ? 1.0 : std::pow(c, power));
        return weight * (c * s_beta + z * s_diff) / denom;
    };

    // Split around the near-pole of the rational factor when it sits on the
    // positive axis (cos(pi alpha) < 0).
    std::vector<double> cuts{0.0, upper};
    if (centre > 0.0) {
        for (double p : {centre - width, centre, centre + width}) {
            if (p > 0.0 && p < upper) cuts.push_back(p);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double total = 0.0;
    double total_l1 = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double err = 0.0;
        double l1 = 0.0;
        // Each piece is mapped onto [0, 1]: this Boost release mishandles the
        // left end of intervals whose lower limit is not near zero.
        const double a = cuts[i];
        const double len = cuts[i + 1] - cuts[i];
        auto piece = [&](double u) { return integrand(a + len * u); };
        total += len * integrator().integrate(piece, 0.0, 1.0, 1e-14, &err, &l1);
        total_err += len * err;
        total_l1 += len * l1;
    }
    if (!std::isfinite(total) || total_err > 1e-10 * std::max(total_l1, std::abs(total))) {
        throw EvaluationError("Mittag-Leffler cut quadrature failed at " + describe(alpha, beta, z));
    }
    return total / (alpha * kPi);
}

double ml_alpha_one_negative(double beta, double z) {
    // Kummer: E_{1,beta}(-x) = (1/Gamma(beta)) sum_k Pois(k; x) (beta-1)/(beta-1+k),
    // with the k = 0 factor equal to 1. All weights are bounded, no overflow.
    const double x = -z;
    if (beta == 1.0) return std::exp(z);
    if (x > 1e5) {
        bool converged = false;
        const double cut = ml_cut_integral_asymptotic(1.0, beta, z, &converged);
        if (!converged) throw EvaluationError("Mittag-Leffler alpha=1 expansion failed at " + describe(1.0, beta, z));
        return cut;
    }
    const double log_x = std::log(x);
    const auto upper = static_cast<long>(x + 40.0 * std::sqrt(x) + 60.0);
    double sum = 0.0;
    double comp = 0.0;
    for (long k = 0; k <= upper; ++k) {
        const double kd = static_cast<double>(k);
        const double weight = std::exp(-x + kd * log_x - std::lgamma(kd + 1.0));
        const double factor = (k == 0) ? 1.0 : (beta - 1.0) / (beta - 1.0 + kd);
        const double term = weight * factor;
        const double t = sum + term;
        comp += (std::abs(sum) >= std::abs(term)) ? (sum - t) + term : (term - t) + sum;
        sum = t;
    }
    return (sum + comp) * reciprocal_gamma(beta);
}

}  // namespace detail

double ml_eval(const MLQuery& q) {
    const double alpha = q.alpha();
    const double beta = q.beta();
    const double z = q.z();
    if (z == 0.0) return reciprocal_gamma(beta);

    double value;
    if (z > 0.0) {
        // Dominant growth is exp(z^{1/alpha}).
        if (std::pow(z, 1.0 / alpha) > 720.0) {
            throw OverflowError("Mittag-Leffler value overflows at " + describe(alpha, beta, z));
        }
        value = detail::ml_series(alpha, beta, z);
    } else if (std::pow(-z, 1.0 / alpha) <= kSeriesExponentLimit) {
        value = detail::ml_series(alpha, beta, z);
    } else {
        value = ml_negative_large(alpha, beta, z);
    }
    if (!std::isfinite(value)) {
        throw EvaluationError("Mittag-Leffler evaluation produced a non-finite value at " + describe(alpha, beta, z));
    }
    return value;
}

double ml_eval(double alpha, double beta, double z) { return ml_eval(MLQuery(alpha, beta, z)); }

double ml_decay(double alpha, double rate, double t) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ml_decay: alpha must lie in (0, 1)");
    if (!(rate > 0.0)) throw DomainError("ml_decay: rate must be positive");
    if (!(t >= 0.0)) throw DomainError("ml_decay: t must be non-negative");
    if (t == 0.0) return 1.0;
    return ml_eval(alpha, 1.0, -rate * std::pow(t, alpha));
}

}  // namespace fracdyn
