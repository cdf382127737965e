#include "fracdyn/scalar_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracdyn/mittag_leffler.hpp"

namespace fracdyn {

namespace {

constexpr double kEnvelopeSlack = 1e-3;

void require_scalar(const FieldDef& field) {
    if (field.dimension() != 1) throw PreconditionError("operation requires a scalar field");
}

double g_at(const FieldDef& field, std::span<const double> params, double x) { return field.eval_scalar(x, params); }

double g_prime(const FieldDef& field, std::span<const double> params, double x) {
    const double s[] = {x};
    return numeric_derivative(field, 0, s, 0, params);
}

bool same_point(double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(b)); }

// Bisects down to adjacent doubles, well inside the 1e-12 width target.
double bisect(const FieldDef& field, std::span<const double> params, double a, double b, double ga) {
    for (;;) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double gm = g_at(field, params, m);
        if (gm == 0.0) return m;
        if ((gm < 0.0) == (ga < 0.0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// Golden-section minimisation of |g| on [a, b].
double minimise_abs(const FieldDef& field, std::span<const double> params, double a, double b) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = std::abs(g_at(field, params, c)), fd = std::abs(g_at(field, params, d));
    while (b - a > 1e-13 * std::max(1.0, std::abs(a))) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = std::abs(g_at(field, params, c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = std::abs(g_at(field, params, d));
        }
    }
    return 0.5 * (a + b);
}

struct Interval {
    std::size_t index;  // zs.zeros[index] < eta < zs.zeros[index + 1]
};

std::optional<Interval> locate(const ZeroSet& zs, double eta) {
    for (std::size_t i = 0; i + 1 < zs.size(); ++i)
        if (zs.zeros[i] < eta && eta < zs.zeros[i + 1]) return Interval{i};
    return std::nullopt;
}

double distance_to_set(double x, const std::vector<double>& points) {
    double d = std::numeric_limits<double>::infinity();
    for (double p : points) d = std::min(d, std::abs(x - p));
    return d;
}

}  // namespace

double DissipativityCertificate::zero_radius() const { return std::sqrt(a / b); }

DissipativityCertificate check_h1(const FieldDef& field, std::span<const double> params, double a, double b,
                                  const std::vector<ScanInterval>& box, std::size_t n_samples) {
    if (!(a > 0.0) || !(b > 0.0)) throw PreconditionError("dissipativity constants must be positive");
    if (n_samples < 1000) throw PreconditionError("check_h1 needs at least 1000 samples");
    const std::size_t d = field.dimension();
    if (box.size() != d) throw PreconditionError("scan box must have one interval per coordinate");
    for (const auto& s : box)
        if (!(s.lo < s.hi)) throw PreconditionError("scan interval must satisfy lo < hi");

    std::size_t per_axis = d == 1 ? n_samples : 2;
    while (std::pow(static_cast<double>(per_axis), static_cast<double>(d)) < static_cast<double>(n_samples)) ++per_axis;

    DissipativityCertificate cert;
    cert.a = a;
    cert.b = b;
    cert.scan = box;
    cert.worst_margin = std::numeric_limits<double>::infinity();
    cert.passed = true;
    cert.note = "sampled on the scan box only; inconclusive beyond scan";

    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d), g(d);
    for (;;) {
        for (std::size_t c = 0; c < d; ++c)
            x[c] = box[c].lo + (box[c].hi - box[c].lo) * static_cast<double>(idx[c]) / static_cast<double>(per_axis - 1);
        field.eval_into(x, params, g);
        double xx = 0.0, gx = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            xx += x[c] * x[c];
            gx += g[c] * x[c];
        }
        const double margin = a - b * xx - gx;
        if (margin < cert.worst_margin) {
            cert.worst_margin = margin;
            cert.worst_point = x;
        }
        if (margin < -1e-12 * (a + b * xx + std::abs(gx))) cert.passed = false;

        std::size_t c = 0;
        while (c < d && ++idx[c] == per_axis) idx[c++] = 0;
        if (c == d) break;
    }
    return cert;
}

ScanInterval default_scan_interval(const DissipativityCertificate& cert) {
    const double r = cert.zero_radius();
    return {-r - 1.0, r + 1.0};
}

bool ZeroSet::has_degenerate() const { return std::find(degenerate.begin(), degenerate.end(), true) != degenerate.end(); }

bool ZeroSet::alternates() const {
    if (zeros.size() % 2 == 0) return false;
    for (std::size_t i = 0; i < derivs.size(); ++i) {
        const bool want_stable = i % 2 == 0;
        if (want_stable ? !(derivs[i] < 0.0) : !(derivs[i] > 0.0)) return false;
    }
    return true;
}

ZeroSet find_zeros(const FieldDef& field, std::span<const double> params, ScanInterval scan, std::size_t resolution,
                   bool tolerate_degenerate) {
    require_scalar(field);
    if (resolution < 1000) throw PreconditionError("find_zeros needs at least 1000 subintervals");
    if (!(scan.lo < scan.hi)) throw PreconditionError("scan interval must satisfy lo < hi");

    const std::size_t n = resolution;
    std::vector<double> xs(n + 1), gs(n + 1);
    double scale = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        xs[i] = scan.lo + (scan.hi - scan.lo) * static_cast<double>(i) / static_cast<double>(n);
        gs[i] = g_at(field, params, xs[i]);
        scale = std::max(scale, std::abs(gs[i]));
    }
    const double tangency = 1e-12 * std::max(1.0, scale);

    std::vector<double> found;
    for (std::size_t i = 0; i <= n; ++i) {
        if (gs[i] == 0.0) {
            found.push_back(xs[i]);
            continue;
        }
        if (i < n && gs[i + 1] != 0.0 && (gs[i] < 0.0) != (gs[i + 1] < 0.0)) {
            found.push_back(bisect(field, params, xs[i], xs[i + 1], gs[i]));
            continue;
        }
        // Touching zeros do not change sign; look for them at local minima of |g|.
        if (i > 0 && i < n && std::abs(gs[i]) <= std::abs(gs[i - 1]) && std::abs(gs[i]) <= std::abs(gs[i + 1]) &&
            (gs[i - 1] < 0.0) == (gs[i] < 0.0) && (gs[i + 1] < 0.0) == (gs[i] < 0.0) && gs[i - 1] != 0.0 &&
            gs[i + 1] != 0.0) {
            const double xm = minimise_abs(field, params, xs[i - 1], xs[i + 1]);
            if (std::abs(g_at(field, params, xm)) <= tangency) found.push_back(xm);
        }
    }
    std::sort(found.begin(), found.end());

    ZeroSet zs;
    for (double z : found) {
        if (!zs.zeros.empty() && std::abs(z - zs.zeros.back()) <= 1e-9 * std::max(1.0, std::abs(z))) continue;
        const double d = g_prime(field, params, z);
        const bool degenerate = std::abs(d) < kDegenerateDerivative;
        if (degenerate && !tolerate_degenerate) throw DegenerateZeroError(z, d);
        zs.zeros.push_back(z);
        zs.derivs.push_back(d);
        zs.degenerate.push_back(degenerate);
    }
    zs.even_count = zs.zeros.size() % 2 == 0;
    return zs;
}

AttractorInterval attractor_interval(const ZeroSet& zs) {
    if (zs.empty()) throw PreconditionError("attractor interval of an empty zero set");
    if (zs.has_degenerate()) throw PreconditionError("zero set contains degenerate zeros");
    return {zs.zeros.front(), zs.zeros.back()};
}

double gamma_rate_constant(const FieldDef& field, std::span<const double> params, double x_star, double eta) {
    require_scalar(field);
    if (!std::isfinite(eta) || !std::isfinite(x_star)) throw PreconditionError("arguments must be finite");
    const double slope = g_prime(field, params, x_star);
    if (!(slope < 0.0)) throw PreconditionError("x_star must be a stable steady state (g'(x_star) < 0)");
    if (std::abs(g_at(field, params, x_star)) > 1e-8) throw PreconditionError("x_star is not a zero of the field");
    const double half_slope = 0.5 * std::abs(slope);
    if (eta == x_star) return half_slope;

    const double w_eta = eta - x_star;
    const double side = w_eta < 0.0 ? -1.0 : 1.0;
    const double reach = std::abs(w_eta);
    // q(w) = -f(w)/w is positive exactly while w stays in the basin of x_star.
    auto q = [&](double r) {
        const double w = side * r;
        return -g_at(field, params, x_star + w) / w;
    };

    constexpr int kGrid = 1000;
    for (int j = 1; j <= kGrid; ++j) {
        const double r = reach * j / kGrid;
        if (!(q(r) > 0.0))
            throw BasinError("eta is at or beyond the zero adjacent to x_star (g changes sign at " +
                             std::to_string(x_star + side * r) + ")");
    }

    double eps = 0.5 * reach;
    for (;;) {
        bool ok = true;
        for (int j = 1; j <= kGrid && ok; ++j) ok = q(eps * j / kGrid) >= half_slope;
        if (ok) break;
        eps *= 0.5;
        if (eps < 1e-12 * std::max(1.0, reach)) throw EvaluationError("no radius satisfies the mean-value bound");
    }

    double gamma = half_slope;
    for (int j = 0; j < kGrid; ++j) {
        const double r = eps + (reach - eps) * j / (kGrid - 1);
        gamma = std::min(gamma, q(r));
    }
    return gamma;
}

EnvelopeReport envelope_check(const Trajectory& traj, double x_star, double gamma) {
    if (traj.dimension != 1) throw PreconditionError("envelope_check needs a scalar trajectory");
    if (!(gamma > 0.0)) throw PreconditionError("gamma must be positive");
    EnvelopeReport rep;
    const double d0 = std::abs(traj.at(0) - x_star);
    for (std::size_t n = 0; n < traj.size(); ++n) {
        const double dist = std::abs(traj.at(n) - x_star);
        const double bound = ml_decay(traj.alpha, gamma, traj.times[n]) * d0;
        const double ratio = dist == 0.0 ? 0.0 : (bound > 0.0 ? dist / bound : std::numeric_limits<double>::infinity());
        const bool escaped = traj.escape && traj.escape->index == n;
        rep.worst_ratio = std::max(rep.worst_ratio, escaped ? std::numeric_limits<double>::infinity() : ratio);
        if ((escaped || ratio > 1.0 + kEnvelopeSlack) && !rep.first_violation) {
            rep.first_violation = n;
            rep.holds = false;
        }
        ++rep.points;
    }
    return rep;
}

EnvelopeReport lower_bound_check(const Trajectory& traj, const ZeroSet& zs, double lipschitz) {
    if (traj.dimension != 1) throw PreconditionError("lower_bound_check needs a scalar trajectory");
    if (!(lipschitz > 0.0)) throw PreconditionError("L must be positive");
    if (zs.empty()) throw PreconditionError("zero set is empty");
    EnvelopeReport rep;
    const double d0 = distance_to_set(traj.at(0), zs.zeros);
    for (std::size_t n = 0; n < traj.size(); ++n) {
        const double dist = distance_to_set(traj.at(n), zs.zeros);
        const double bound = ml_decay(traj.alpha, lipschitz, traj.times[n]) * d0;
        const double ratio = bound == 0.0 ? 0.0 : (dist > 0.0 ? bound / dist : std::numeric_limits<double>::infinity());
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        if (dist < bound * (1.0 - kEnvelopeSlack) && !rep.first_violation) {
            rep.first_violation = n;
            rep.holds = false;
        }
        ++rep.points;
    }
    return rep;
}

double default_lipschitz(const FieldDef& field, std::span<const double> params, const ZeroSet& zs, double eta) {
    require_scalar(field);
    double lo = eta, hi = eta;
    if (!zs.empty()) {
        lo = std::min(lo, zs.zeros.front());
        hi = std::max(hi, zs.zeros.back());
    }
    const double mid = 0.5 * (lo + hi);
    const double half = std::max(0.5 * (hi - lo), 1e-3) * 1.1;
    double L = 0.0;
    for (int j = 0; j <= 1000; ++j) L = std::max(L, std::abs(g_prime(field, params, mid - half + 2.0 * half * j / 1000)));
    return L;
}

double classify_limit(const FieldDef& field, std::span<const double> params, const ZeroSet& zs, double eta) {
    require_scalar(field);
    const double inf = std::numeric_limits<double>::infinity();
    if (zs.empty()) {
        const double g = g_at(field, params, eta);
        return g > 0.0 ? inf : (g < 0.0 ? -inf : eta);
    }
    for (double z : zs.zeros)
        if (same_point(eta, z)) return z;
    const std::size_t m = zs.size();
    if (eta < zs.zeros.front()) return zs.stable(0) ? zs.zeros.front() : -inf;
    if (eta > zs.zeros.back()) return zs.stable(m - 1) ? zs.zeros.back() : inf;
    const std::size_t i = locate(zs, eta)->index;
    // g > 0 right of an unstable zero, g < 0 right of a stable one.
    return zs.stable(i) ? zs.zeros[i] : zs.zeros[i + 1];
}

double rate_fit(const Trajectory& traj, double x_star) {
    if (traj.dimension != 1) throw PreconditionError("rate_fit needs a scalar trajectory");
    if (traj.escape) throw PreconditionError("rate_fit on an escaped trajectory");
    const double t_end = traj.times.back();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.times[i];
        const double d = std::abs(traj.at(i) - x_star);
        if (t <= 0.0 || t < t_end / 100.0 || !(d > 1e-12)) continue;
        const double lx = std::log(t), ly = std::log(d);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 20) throw InsufficientDataError("fewer than 20 usable points in the rate-fit window");
    const double nn = static_cast<double>(n);
    return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

double backward_extend(const FieldDef& field, std::span<const double> params, double alpha, const ZeroSet& zs,
                       double eta, double t_back, double dt, double tol) {
    require_scalar(field);
    if (!(t_back > 0.0)) throw PreconditionError("t_back must be positive");
    if (!(tol > 0.0)) throw PreconditionError("tol must be positive");
    for (double z : zs.zeros)
        if (same_point(eta, z)) return eta;
    const auto where = locate(zs, eta);
    if (!where) throw PreconditionError("eta must lie strictly between two adjacent zeros");
    const std::size_t i = where->index;

    // Backward in time the solution runs toward the unstable end of the interval.
    const bool from_left = !zs.stable(i);
    const double source = from_left ? zs.zeros[i] : zs.zeros[i + 1];
    const double side = from_left ? 1.0 : -1.0;

    auto image = [&](double zeta) {
        CaputoProblem p{alpha, field, std::vector<double>(params.begin(), params.end()), {zeta}, t_back, dt};
        const Trajectory tr = solve_pece(p);
        if (tr.escape) throw BracketError("forward solve escaped during backward extension");
        return tr.final_state()[0];
    };
    // psi is increasing in u, zeta = source + side * exp(u).
    auto psi = [&](double u) { return side * (image(source + side * std::exp(u)) - eta); };

    double hi = std::log(std::abs(eta - source));
    const double psi_hi = psi(hi);
    if (std::abs(psi_hi) <= tol) return eta;
    const double floor_distance = std::max(1e-300, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(source));
    double lo = std::log(floor_distance);
    const double psi_lo = psi(lo);
    if (!(psi_lo < 0.0) || !(psi_hi > 0.0))
        throw BracketError("no sign change: eta is too close to a zero for the requested horizon");

    double best_u = hi, best = std::abs(psi_hi);
    for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double v = psi(mid);
        if (std::abs(v) < best) {
            best = std::abs(v);
            best_u = mid;
        }
        if (v == 0.0) break;
        (v < 0.0 ? lo : hi) = mid;
    }
    if (best > tol) throw BracketError("backward extension did not reach the requested tolerance");
    return source + side * std::exp(best_u);
}

HeteroclinicOrbit heteroclinic_orbit(const FieldDef& field, std::span<const double> params, double alpha,
                                     const ZeroSet& zs, std::size_t interval_index, double eta, double t_back,
                                     double t_fwd, double dt) {
    require_scalar(field);
    if (zs.size() < 2 || interval_index + 1 >= zs.size())
        throw PreconditionError("interval index does not name a bounded interval between adjacent zeros");
    const double left = zs.zeros[interval_index], right = zs.zeros[interval_index + 1];
    if (!(left < eta && eta < right)) throw PreconditionError("eta must lie strictly inside the chosen interval");

    HeteroclinicOrbit orbit;
    orbit.eta = eta;
    if (zs.stable(interval_index)) {
        orbit.source = right;
        orbit.target = left;
    } else {
        orbit.source = left;
        orbit.target = right;
    }

    std::vector<double> horizons;
    for (double h = t_back; h >= 2.0 * dt; h *= 0.5) horizons.push_back(h);
    for (double h : horizons) {
        orbit.times.push_back(-h);
        orbit.values.push_back(backward_extend(field, params, alpha, zs, eta, h, dt));
    }

    CaputoProblem p{alpha, field, std::vector<double>(params.begin(), params.end()), {eta}, t_fwd, dt};
    const Trajectory fwd = solve_pece(p);
    for (std::size_t n = 0; n < fwd.size(); ++n) {
        orbit.times.push_back(fwd.times[n]);
        orbit.values.push_back(fwd.at(n));
    }
    for (double v : orbit.values)
        if (!(std::min(left, right) < v && v < std::max(left, right))) orbit.strictly_between = false;
    return orbit;
}

}  // namespace fracdyn
