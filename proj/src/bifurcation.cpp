#include "fracdyn/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracdyn/caputo_solver.hpp"
#include "fracdyn/mittag_leffler.hpp"

namespace fracdyn {

namespace {

constexpr std::size_t kFoldFitPoints = 10;

struct Run {
    std::size_t count;
    std::size_t first;
    std::size_t last;
};

double half_spread(const ZeroSet& zs) { return 0.5 * (zs.zeros.back() - zs.zeros.front()); }

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

std::vector<std::size_t> BifurcationDiagram::counts() const {
    std::vector<std::size_t> c;
    for (const auto& zs : zero_sets) c.push_back(zs.size());
    return c;
}

BifurcationDiagram sweep(const FieldDef& family, std::span<const double> params, std::string_view parameter,
                         double lo, double hi, std::size_t m, ScanInterval scan, std::size_t resolution) {
    if (m < 3) throw PreconditionError("a sweep needs at least 3 parameter values");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw PreconditionError("parameter range must be finite with lo < hi");
    if (params.size() != family.parameters().size())
        throw PreconditionError("expected one value per field parameter");
    const std::size_t k = family.parameter_index(parameter);

    BifurcationDiagram diag;
    diag.parameter = std::string(parameter);
    std::vector<double> p(params.begin(), params.end());
    for (std::size_t i = 0; i < m; ++i) {
        p[k] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
        diag.gammas.push_back(p[k]);
        diag.zero_sets.push_back(find_zeros(family, p, scan, resolution, true));
    }

    for (std::size_t i = 0; i < m; ++i) {
        const ZeroSet& zs = diag.zero_sets[i];
        struct Pair {
            double distance;
            std::size_t branch;
            std::size_t zero;
        };
        std::vector<Pair> pairs;
        for (std::size_t b = 0; b < diag.branches.size(); ++b) {
            const Branch& br = diag.branches[b];
            if (i == 0 || br.slices.back() != i - 1) continue;
            for (std::size_t j = 0; j < zs.size(); ++j)
                pairs.push_back({std::abs(zs.zeros[j] - br.zeros.back()), b, j});
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            return a.distance < b.distance || (a.distance == b.distance && a.zero < b.zero);
        });
        std::vector<bool> zero_used(zs.size(), false), branch_used(diag.branches.size(), false);
        auto extend = [&](Branch& br, std::size_t j) {
            br.slices.push_back(i);
            br.zeros.push_back(zs.zeros[j]);
            br.stable.push_back(zs.stable(j));
            zero_used[j] = true;
        };
        for (const Pair& pr : pairs) {
            if (zero_used[pr.zero] || branch_used[pr.branch]) continue;
            branch_used[pr.branch] = true;
            extend(diag.branches[pr.branch], pr.zero);
        }
        for (std::size_t j = 0; j < zs.size(); ++j) {
            if (zero_used[j]) continue;
            diag.branches.emplace_back();
            extend(diag.branches.back(), j);
        }
    }
    return diag;
}

Classification classify(const BifurcationDiagram& diag) {
    Classification out;
    out.label = "none";

    std::vector<Run> runs;
    for (std::size_t i = 0; i < diag.zero_sets.size(); ++i) {
        const ZeroSet& zs = diag.zero_sets[i];
        if (zs.has_degenerate()) continue;
        if (!runs.empty() && runs.back().count == zs.size() && runs.back().last + 1 == i)
            runs.back().last = i;
        else
            runs.push_back({zs.size(), i, i});
    }
    for (const Run& r : runs) out.runs.push_back(r.count);
    if (runs.size() != 2) return out;

    const auto [few, many] = runs[0].count < runs[1].count ? std::pair{runs[0], runs[1]} : std::pair{runs[1], runs[0]};
    const bool saddle = few.count == 0 && many.count == 2;
    const bool pitchfork = few.count == 1 && many.count == 3;
    if (!saddle && !pitchfork) return out;

    double critical = 0.0;
    std::size_t degenerate = 0;
    for (std::size_t i = runs[0].last + 1; i < runs[1].first; ++i) {
        critical += diag.gammas[i];
        ++degenerate;
    }
    critical = degenerate ? critical / static_cast<double>(degenerate)
                          : 0.5 * (diag.gammas[runs[0].last] + diag.gammas[runs[1].first]);
    out.critical_gamma = critical;

    // Slices of the many-zero run ordered by distance to the critical value.
    std::vector<std::size_t> near;
    for (std::size_t i = many.first; i <= many.last; ++i)
        if (diag.gammas[i] != critical) near.push_back(i);
    std::sort(near.begin(), near.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(diag.gammas[a] - critical) < std::abs(diag.gammas[b] - critical);
    });
    if (near.size() < 3) return out;
    near.resize(std::min(near.size(), kFoldFitPoints));

    if (pitchfork) {
        const std::size_t single = few.last < many.first ? few.last : few.first;
        const std::size_t closest = near.front();
        const ZeroSet& three = diag.zero_sets[closest];
        if (!(std::abs(three.zeros[1] - diag.zero_sets[single].zeros[0]) < half_spread(three))) return out;
    }

    std::vector<double> lx, ly;
    for (std::size_t i : near) {
        const double s = half_spread(diag.zero_sets[i]);
        if (!(s > 0.0)) return out;
        lx.push_back(std::log(std::abs(diag.gammas[i] - critical)));
        ly.push_back(std::log(s));
    }
    out.exponent = fit_slope(lx, ly);
    if (std::abs(out.exponent - 0.5) <= 0.1) out.label = saddle ? "saddle-node" : "pitchfork";
    return out;
}

DivergenceReport divergence_check(const FieldDef& family, std::span<const double> params, double alpha, double x0,
                                  double t_end, double dt, std::optional<double> g_sup) {
    if (family.dimension() != 1) throw PreconditionError("divergence_check needs a scalar field");
    const auto tr = solve_pece(CaputoProblem{alpha, family, {params.begin(), params.end()}, {x0}, t_end, dt});
    DivergenceReport rep;
    rep.final_value = tr.final_state()[0];
    if (tr.escape && tr.escape->sign < 0) {
        rep.diverges = true;
        rep.escape_time = tr.times[tr.escape->index];
    }
    if (g_sup) {
        rep.bound_checked = true;
        const double scale = *g_sup / gamma_function(alpha + 1.0);
        for (std::size_t n = 0; n < tr.size(); ++n) {
            const double bound = x0 + scale * std::pow(tr.times[n], alpha);
            if (tr.at(n) > bound + 1e-9 * (1.0 + std::abs(bound))) {
                rep.bound_holds = false;
                break;
            }
        }
    }
    return rep;
}

}  // namespace fracdyn
