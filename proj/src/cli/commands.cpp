#include "fracdyn/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "fracdyn/bifurcation.hpp"
#include "fracdyn/caputo_solver.hpp"
#include "fracdyn/cli/catalog.hpp"
#include "fracdyn/cli/report.hpp"
#include "fracdyn/cli/verify.hpp"
#include "fracdyn/function_space.hpp"
#include "fracdyn/mittag_leffler.hpp"
#include "fracdyn/triangular_systems.hpp"

namespace fracdyn::cli {

namespace {

constexpr std::size_t kMaxTriangular = 4;
constexpr double kLimitTolerance = 0.05;
constexpr double kSeparatrixGap = 1e-3;

const std::set<std::string> kBooleanFlags{"--help", "-h", "--batch"};

const std::vector<std::string> kFieldCommands{"simulate", "attractor", "limits",    "heteroclinic",
                                              "triangular", "bifurcate", "semigroup", "verify-scalar"};

double to_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw UsageError(what + ": '" + s + "' is not a number");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) parts.push_back(cur);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

std::vector<double> number_list(const std::string& s, const std::string& what) {
    std::vector<double> v;
    for (const auto& p : split(s, ',')) v.push_back(to_double(p, what));
    return v;
}

ScanInterval interval(const std::string& s, const std::string& what) {
    const auto p = split(s, ':');
    if (p.size() != 2) throw UsageError(what + " must be lo:hi");
    const ScanInterval iv{to_double(p[0], what), to_double(p[1], what)};
    if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
        throw UsageError(what + " must satisfy lo < hi");
    return iv;
}

// "--flag value" becomes "--flag=value" so values may start with '-'.
std::vector<std::string> join_values(const std::vector<std::string>& args) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        const bool value_flag = a.size() > 2 && a.rfind("--", 0) == 0 && a.find('=') == std::string::npos &&
                                !kBooleanFlags.count(a);
        if (value_flag && i + 1 < args.size()) {
            out.push_back(a + "=" + args[i + 1]);
            ++i;
        } else {
            out.push_back(a);
        }
    }
    return out;
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

nlohmann::json interval_json(const ScanInterval& s) { return nlohmann::json::array({s.lo, s.hi}); }

nlohmann::json numbers_json(std::span<const double> v) {
    auto a = nlohmann::json::array();
    for (double x : v) a.push_back(json_number(x));
    return a;
}

struct Resolved {
    const CatalogEntry* entry = nullptr;
    std::optional<FieldDef> field;
    std::optional<TriangularField> tri;
    std::vector<double> params;
    std::vector<ScanInterval> scan;
    std::optional<Certificate> certificate;
};

std::vector<double> apply_params(const std::vector<std::string>& names, std::vector<double> values,
                                 const std::vector<std::pair<std::string, double>>& overrides) {
    for (const auto& [name, v] : overrides) {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw UsageError("unknown parameter '" + name + "'");
        values[static_cast<std::size_t>(it - names.begin())] = v;
    }
    return values;
}

Resolved resolve(const RunConfig& cfg) {
    Resolved r;
    const FieldSource& src = cfg.source;
    if (!src.catalog.empty()) {
        r.entry = find_entry(src.catalog);
        if (!r.entry) throw UsageError("unknown catalog field '" + src.catalog + "'");
        r.params = apply_params(r.entry->param_names, r.entry->param_values, src.params);
        r.certificate = r.entry->certificate;
        r.scan = r.entry->scan;
        if (r.entry->triangular()) r.tri = r.entry->triangular_field();
        r.field = r.entry->field();
    } else {
        std::vector<std::string> names;
        for (const auto& [name, v] : src.params) {
            if (std::find(names.begin(), names.end(), name) != names.end())
                throw UsageError("parameter '" + name + "' given twice");
            names.push_back(name);
            r.params.push_back(v);
        }
        if (!src.f.empty()) {
            r.tri = TriangularField::parse(src.f, src.h, names);
            r.field = r.tri->assembled();
        } else {
            r.field = FieldDef::parse(src.components, names);
        }
    }
    if (cfg.a && cfg.b) r.certificate = Certificate{*cfg.a, *cfg.b};
    const std::size_t d = r.field->dimension();
    if (cfg.scan) {
        r.scan.assign(d, *cfg.scan);
    } else if (r.scan.size() != d) {
        const double half = r.certificate ? std::sqrt(r.certificate->a / r.certificate->b) + 1.0 : 10.0;
        r.scan.assign(d, ScanInterval{-half, half});
    }
    return r;
}

const FieldDef& scalar_field(const Resolved& r, const std::string& command) {
    if (r.field->dimension() != 1) throw UsageError(command + " needs a scalar field");
    return *r.field;
}

// Writes to --out when given, otherwise to `fallback`.
template <class Body>
void with_output(const std::string& path, std::ostream& fallback, Body body) {
    if (path.empty()) {
        body(fallback);
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error("cannot open '" + path + "' for writing");
    body(file);
}

int finish(const Report& rep, std::ostream& out) {
    rep.write(out);
    return rep.all_passed() ? kExitSuccess : kExitFailure;
}

int cmd_ml(const RunConfig& cfg, std::istream& in, std::ostream& out) {
    if (!cfg.batch) {
        if (!cfg.z) throw UsageError("ml needs --z or --batch");
        out << format_number(ml_eval(cfg.alpha, cfg.beta, *cfg.z)) << '\n';
        return kExitSuccess;
    }
    CsvWriter csv(out, {"alpha", "beta", "z", "value"});
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        double a = 0, b = 0, z = 0;
        std::string extra;
        if (!(ls >> a >> b >> z) || (ls >> extra))
            throw UsageError("line " + std::to_string(lineno) + ": expected 'alpha beta z'");
        double v = 0.0;
        try {
            v = ml_eval(a, b, z);
        } catch (const DomainError& e) {
            throw UsageError("line " + std::to_string(lineno) + ": " + e.what());
        }
        const double row[] = {a, b, z, v};
        csv.row(row);
    }
    return kExitSuccess;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Resolved r = resolve(cfg);
    const std::size_t d = r.field->dimension();
    if (cfg.x0.size() != d) throw UsageError("--x0 needs " + std::to_string(d) + " value(s)");
    const auto tr = solve_pece(CaputoProblem{cfg.alpha, *r.field, r.params, cfg.x0, *cfg.t_end, *cfg.dt});
    with_output(cfg.out, out, [&](std::ostream& os) {
        std::vector<std::string> header{"t"};
        for (std::size_t c = 0; c < d; ++c) header.push_back("x" + std::to_string(c + 1));
        CsvWriter csv(os, header);
        std::vector<double> row(d + 1);
        for (std::size_t n = 0; n < tr.size(); ++n) {
            row[0] = tr.times[n];
            for (std::size_t c = 0; c < d; ++c) row[c + 1] = tr.at(n, c);
            csv.row(row);
        }
    });
    if (tr.escape)
        err << "note: x" << tr.escape->component + 1 << " escaped to " << (tr.escape->sign > 0 ? "+" : "-")
            << "infinity at t = " << format_number(tr.times[tr.escape->index]) << '\n';
    return kExitSuccess;
}

int cmd_attractor(const RunConfig& cfg, std::ostream& out) {
    const Resolved r = resolve(cfg);
    const FieldDef& g = scalar_field(r, "attractor");
    const ScanInterval scan = r.scan[0];
    Report rep(cfg.to_json());
    if (r.certificate) {
        const auto c = check_h1(g, r.params, r.certificate->a, r.certificate->b, {scan}, std::max<std::size_t>(cfg.resolution, 1000));
        rep.add("check_h1", c.passed, c.worst_margin,
                {{"a", c.a}, {"b", c.b}, {"scan", interval_json(scan)}, {"worst_point", c.worst_point}, {"note", c.note}});
    }
    ZeroSet zs;
    try {
        zs = find_zeros(g, r.params, scan, cfg.resolution);
    } catch (const DegenerateZeroError& e) {
        rep.add("non_degenerate_zeros", false, -1.0, {{"zero", e.zero()}, {"message", e.what()}});
        return finish(rep, out);
    }
    double min_slope = std::numeric_limits<double>::infinity();
    for (double s : zs.derivs) min_slope = std::min(min_slope, std::abs(s));
    rep.add("non_degenerate_zeros", true, zs.empty() ? 0.0 : min_slope - kDegenerateDerivative,
            {{"zeros", zs.zeros}, {"derivatives", zs.derivs}});
    rep.add("odd_zero_count", !zs.even_count, 0.0, {{"count", zs.size()}});
    rep.add("alternating_stability", zs.alternates(), 0.0, nlohmann::json::object());
    if (r.certificate && !zs.empty()) {
        const double radius = std::sqrt(r.certificate->a / r.certificate->b);
        const double reach = std::max(std::abs(zs.zeros.front()), std::abs(zs.zeros.back()));
        rep.add("zeros_within_radius", reach <= radius * (1 + 1e-12), radius - reach, {{"radius", radius}});
    }
    if (zs.empty()) {
        rep.add("attractor_interval", false, 0.0, {{"message", "no zeros on the scan interval"}});
    } else {
        const auto ai = attractor_interval(zs);
        rep.add("attractor_interval", true, 0.0, {{"lo", ai.lo}, {"hi", ai.hi}});
    }
    return finish(rep, out);
}

bool near_unstable(const ZeroSet& zs, double eta) {
    for (std::size_t i = 0; i < zs.size(); ++i)
        if (!zs.stable(i) && std::abs(eta - zs.zeros[i]) < kSeparatrixGap) return true;
    return false;
}

int cmd_limits(const RunConfig& cfg, std::ostream& out) {
    const Resolved r = resolve(cfg);
    const FieldDef& g = scalar_field(r, "limits");
    if (cfg.etas.empty()) throw UsageError("limits needs --eta");
    Report rep(cfg.to_json());
    const ZeroSet zs = find_zeros(g, r.params, r.scan[0], cfg.resolution);
    auto predicted = nlohmann::json::array();
    std::vector<double> limits;
    for (double eta : cfg.etas) {
        limits.push_back(classify_limit(g, r.params, zs, eta));
        predicted.push_back({{"eta", eta}, {"limit", json_number(limits.back())}});
    }
    rep.add("classify_limit", true, 0.0, {{"zeros", zs.zeros}, {"limits", predicted}});
    if (cfg.t_end) {
        const double dt = cfg.dt.value_or(0.1);
        auto runs = nlohmann::json::array();
        double worst = 0.0;
        bool ok = true;
        for (std::size_t k = 0; k < cfg.etas.size(); ++k) {
            const double eta = cfg.etas[k];
            if (near_unstable(zs, eta)) {
                runs.push_back({{"eta", eta}, {"skipped", "within 1e-3 of an unstable zero"}});
                continue;
            }
            const auto tr = solve_pece(CaputoProblem{cfg.alpha, g, r.params, {eta}, *cfg.t_end, dt});
            const double end = tr.final_state()[0];
            bool agree;
            if (std::isinf(limits[k])) {
                agree = tr.escape && (tr.escape->sign > 0) == (limits[k] > 0);
            } else {
                agree = !tr.escape && std::abs(end - limits[k]) < kLimitTolerance;
                worst = std::max(worst, std::abs(end - limits[k]));
            }
            ok = ok && agree;
            runs.push_back({{"eta", eta}, {"endpoint", json_number(end)}, {"escaped", tr.escape.has_value()}});
        }
        rep.add("solver_agreement", ok, kLimitTolerance - worst, {{"t_end", *cfg.t_end}, {"dt", dt}, {"runs", runs}});
    }
    return finish(rep, out);
}

int cmd_heteroclinic(const RunConfig& cfg, std::ostream& out) {
    const Resolved r = resolve(cfg);
    const FieldDef& g = scalar_field(r, "heteroclinic");
    if (cfg.etas.size() != 1) throw UsageError("heteroclinic needs exactly one --eta");
    const double eta = cfg.etas[0];
    const double dt = cfg.dt.value_or(0.05);
    const ZeroSet zs = find_zeros(g, r.params, r.scan[0], cfg.resolution);
    std::optional<std::size_t> index;
    for (std::size_t i = 0; i + 1 < zs.size(); ++i)
        if (zs.zeros[i] < eta && eta < zs.zeros[i + 1]) index = i;
    if (!index) throw UsageError("--eta must lie strictly between two adjacent zeros");

    const auto orbit = heteroclinic_orbit(g, r.params, cfg.alpha, zs, *index, eta, cfg.t_back, cfg.t_fwd, dt);
    Report rep(cfg.to_json());
    const double back = orbit.values.front();
    const double fwd = orbit.values.back();
    rep.add("backward_limit", std::abs(back - orbit.source) <= 1e-2, 1e-2 - std::abs(back - orbit.source),
            {{"horizon", cfg.t_back}, {"value", back}, {"source", orbit.source}});
    rep.add("forward_limit", std::abs(fwd - orbit.target) <= 1e-2, 1e-2 - std::abs(fwd - orbit.target),
            {{"t_fwd", cfg.t_fwd}, {"value", fwd}, {"target", orbit.target}});
    const auto again = solve_pece(CaputoProblem{cfg.alpha, g, r.params, {back}, cfg.t_back, dt});
    const double trip = std::abs(again.final_state()[0] - eta);
    rep.add("round_trip", trip <= 1e-6, 1e-6 - trip, {{"error", trip}});
    rep.add("strictly_between", orbit.strictly_between, 0.0, {{"points", orbit.values.size()}});
    if (!cfg.out.empty()) {
        with_output(cfg.out, out, [&](std::ostream& os) {
            CsvWriter csv(os, {"t", "x1"});
            for (std::size_t n = 0; n < orbit.times.size(); ++n) {
                const double row[] = {orbit.times[n], orbit.values[n]};
                csv.row(row);
            }
        });
    }
    return finish(rep, out);
}

int cmd_triangular(const RunConfig& cfg, std::ostream& out) {
    const Resolved r = resolve(cfg);
    if (!r.tri) throw UsageError("triangular needs a triangular field (--catalog fig2|sec3text or --f1 ...)");
    if (!r.certificate) throw UsageError("triangular needs --a and --b");
    const TriangularField& tf = *r.tri;
    const std::size_t d = tf.dimension();
    Report rep(cfg.to_json());

    TriangularReport vr;
    try {
        vr = validate_triangular(tf, r.params, r.scan, r.certificate->a, r.certificate->b);
    } catch (const VanishingFactorError& e) {
        rep.add("h_nonvanishing", false, -1.0,
                {{"component", e.component() + 1}, {"witness", e.witness()}, {"value", e.value()}});
        return finish(rep, out);
    } catch (const DegenerateZeroError& e) {
        rep.add("non_degenerate_zeros", false, -1.0, {{"zero", e.zero()}, {"message", e.what()}});
        return finish(rep, out);
    }
    double min_h = std::numeric_limits<double>::infinity();
    for (double v : vr.min_abs_h) min_h = std::min(min_h, v);
    rep.add("h_nonvanishing", true, min_h - 1e-9, {{"min_abs_h", vr.min_abs_h}, {"sign", vr.h_sign}});
    rep.add("check_h1", vr.dissipativity.passed, vr.dissipativity.worst_margin,
            {{"a", vr.dissipativity.a}, {"b", vr.dissipativity.b}, {"worst_point", vr.dissipativity.worst_point},
             {"note", vr.dissipativity.note}});
    for (std::size_t i = 0; i < d; ++i) {
        const ZeroSet& zs = vr.zero_sets[i];
        rep.add("zero_set_f" + std::to_string(i + 1), !zs.even_count, 0.0,
                {{"zeros", zs.zeros}, {"derivatives", zs.derivs}});
    }
    const auto pa = product_attractor(tf, r.params, r.scan, cfg.resolution);
    auto box = nlohmann::json::array();
    for (const auto& iv : pa.intervals) box.push_back({iv.lo, iv.hi});
    rep.add("product_attractor", true, 0.0, {{"box", box}});

    if (cfg.seeds == 0) return finish(rep, out);

    const double t_end = cfg.t_end.value_or(1e3), dt = cfg.dt.value_or(0.1);
    std::mt19937_64 rng(cfg.rng_seed);
    std::vector<std::uniform_real_distribution<double>> draw;
    for (const auto& s : r.scan) draw.emplace_back(s.lo, s.hi);
    auto near_separatrix = [&](const std::vector<double>& x) {
        for (std::size_t i = 0; i < d; ++i) {
            const ZeroSet& zs = pa.zero_sets[i];
            for (std::size_t j = 0; j < zs.size(); ++j) {
                const bool stable = zs.derivs[j] * vr.h_sign[i] < 0.0;
                if (!stable && std::abs(x[i] - zs.zeros[j]) < kSeparatrixGap) return true;
            }
        }
        return false;
    };

    auto runs = nlohmann::json::array();
    std::vector<Trajectory> orbits;
    double worst = 0.0;
    bool ok = true;
    while (orbits.size() < cfg.seeds) {
        std::vector<double> x0(d);
        for (std::size_t i = 0; i < d; ++i) x0[i] = draw[i](rng);
        if (near_separatrix(x0)) continue;
        const auto want = componentwise_limits(tf, r.params, r.scan, x0);
        orbits.push_back(solve_pece(CaputoProblem{cfg.alpha, *r.field, r.params, x0, t_end, dt}));
        const auto& tr = orbits.back();
        const auto end = tr.final_state();
        bool seed_ok = !tr.escape;
        for (std::size_t i = 0; i < d && seed_ok; ++i) {
            if (std::isinf(want[i])) {
                seed_ok = false;
                continue;
            }
            const double err = std::abs(end[i] - want[i]);
            worst = std::max(worst, err);
            seed_ok = err < kLimitTolerance;
        }
        seed_ok = seed_ok && pa.contains(end, kLimitTolerance);
        ok = ok && seed_ok;
        runs.push_back({{"x0", x0}, {"limit", numbers_json(want)}, {"endpoint", numbers_json(end)}, {"pass", seed_ok}});
    }
    rep.add("seed_limits", ok, kLimitTolerance - worst, {{"t_end", t_end}, {"dt", dt}, {"runs", runs}});

    if (!cfg.out.empty()) {
        with_output(cfg.out, out, [&](std::ostream& os) {
            std::vector<std::string> header{"seed", "t"};
            for (std::size_t c = 0; c < d; ++c) header.push_back("x" + std::to_string(c + 1));
            CsvWriter csv(os, header);
            std::vector<double> row(d + 2);
            for (std::size_t k = 0; k < orbits.size(); ++k) {
                for (std::size_t n = 0; n < orbits[k].size(); ++n) {
                    row[0] = static_cast<double>(k);
                    row[1] = orbits[k].times[n];
                    for (std::size_t c = 0; c < d; ++c) row[c + 2] = orbits[k].at(n, c);
                    csv.row(row);
                }
            }
        });
    }
    return finish(rep, out);
}

int cmd_bifurcate(const RunConfig& cfg, std::ostream& out) {
    RunConfig resolved_cfg = cfg;
    if (!cfg.family.empty() && cfg.family != "custom") resolved_cfg.source.catalog = cfg.family;
    const Resolved r = resolve(resolved_cfg);
    const FieldDef& g = scalar_field(r, "bifurcate");
    const ScanInterval scan = cfg.scan.value_or(ScanInterval{-2, 2});
    const auto diag = sweep(g, r.params, cfg.gamma_name, cfg.gamma_lo, cfg.gamma_hi, cfg.gamma_count, scan, cfg.resolution);
    const auto cls = classify(diag);

    Report rep(cfg.to_json());
    rep.add("sweep", true, 0.0, {{"parameter", diag.parameter}, {"slices", diag.gammas.size()}, {"count_runs", cls.runs}});
    nlohmann::json details{{"label", cls.label}, {"exponent", cls.exponent}};
    details["critical_gamma"] = cls.critical_gamma ? nlohmann::json(*cls.critical_gamma) : nlohmann::json(nullptr);
    const double margin = cls.label == "none" ? 0.0 : 0.1 - std::abs(cls.exponent - 0.5);
    rep.add("classification", cfg.expect.empty() || cls.label == cfg.expect, margin, details);

    if (!cfg.etas.empty()) {
        const double t_end = cfg.t_end.value_or(100.0), dt = cfg.dt.value_or(0.01);
        const std::size_t k = g.parameter_index(cfg.gamma_name);
        // For gamma - x^2 the field never exceeds gamma, which bounds every solution from above.
        const bool saddle = r.entry && r.entry->name == "saddle";
        auto runs = nlohmann::json::array();
        bool ok = true;
        for (double eta : cfg.etas) {
            const auto dc = divergence_check(g, r.params, cfg.alpha, eta, t_end, dt,
                                             saddle ? std::optional<double>(r.params[k]) : std::nullopt);
            ok = ok && dc.bound_holds;
            nlohmann::json run{{"eta", eta}, {"diverges", dc.diverges}, {"final_value", json_number(dc.final_value)}};
            if (dc.escape_time) run["escape_time"] = *dc.escape_time;
            if (dc.bound_checked) run["bound_holds"] = dc.bound_holds;
            runs.push_back(run);
        }
        rep.add("divergence_check", ok, 0.0, {{"gamma", r.params[k]}, {"t_end", t_end}, {"dt", dt}, {"runs", runs}});
    }

    if (!cfg.out.empty()) {
        with_output(cfg.out, out, [&](std::ostream& os) {
            CsvWriter csv(os, {"gamma", "zero", "stability"});
            for (std::size_t i = 0; i < diag.gammas.size(); ++i) {
                const ZeroSet& zs = diag.zero_sets[i];
                for (std::size_t j = 0; j < zs.size(); ++j) {
                    const double row[] = {diag.gammas[i], zs.zeros[j]};
                    csv.row(row, zs.degenerate[j] ? "degenerate" : (zs.stable(j) ? "stable" : "unstable"));
                }
            }
        });
    }
    return finish(rep, out);
}

int cmd_semigroup(const RunConfig& cfg, std::ostream& out) {
    const Resolved r = resolve(cfg);
    const std::size_t d = r.field->dimension();
    std::vector<double> x0 = cfg.x0.empty() ? std::vector<double>(d, 0.5) : cfg.x0;
    if (x0.size() != d) throw UsageError("--x0 needs " + std::to_string(d) + " value(s)");
    const double base = cfg.dt.value_or(0.02);
    const double span = cfg.tau1 + cfg.tau2 + static_cast<double>(cfg.n_max);

    std::vector<double> dts, defects, ratios;
    for (std::size_t k = 0; k <= cfg.dt_levels; ++k) {
        const double dt = std::ldexp(base, -static_cast<int>(k));
        const auto f = SampledFunction::constant(x0, dt, static_cast<std::size_t>(std::ceil(span / dt)) + 1);
        dts.push_back(dt);
        defects.push_back(semigroup_defect(cfg.tau1, cfg.tau2, f, *r.field, r.params, cfg.alpha, dt, {cfg.n_max}));
    }
    constexpr double kRoundoff = 1e-12;
    bool shrinking = true;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < defects.size(); ++k) {
        const double ratio = defects[k + 1] > 0.0 ? defects[k] / defects[k + 1] : std::numeric_limits<double>::infinity();
        ratios.push_back(ratio);
        const bool at_floor = defects[k + 1] <= kRoundoff;
        shrinking = shrinking && (ratio >= 1.5 || at_floor);
        margin = std::min(margin, at_floor ? kRoundoff - defects[k + 1] : ratio - 1.5);
    }
    Report rep(cfg.to_json());
    rep.add("semigroup_defect", shrinking, margin,
            {{"tau1", cfg.tau1}, {"tau2", cfg.tau2}, {"dts", dts}, {"defects", defects}, {"ratios", numbers_json(ratios)},
             {"roundoff_floor", kRoundoff}});
    const double ssd = state_space_defect(cfg.alpha, 1.0, 1.0, cfg.lambda);
    rep.add("state_space_defect", ssd > 0.01, ssd - 0.01,
            {{"alpha", cfg.alpha}, {"t", 1.0}, {"s", 1.0}, {"lambda", cfg.lambda}, {"value", ssd}});
    return finish(rep, out);
}

int cmd_verify_scalar(const RunConfig& cfg, std::ostream& out) {
    const Resolved r = resolve(cfg);
    const FieldDef& g = scalar_field(r, "verify-scalar");
    Report rep(cfg.to_json());
    ScalarSuiteInput in;
    in.field = &g;
    in.params = r.params;
    in.scan = r.scan[0];
    in.certificate = r.certificate;
    in.alpha = cfg.alpha;
    in.etas = cfg.etas;
    in.t_end = cfg.t_end.value_or(1e3);
    in.dt = cfg.dt.value_or(0.1);
    in.gamma_scale = cfg.fault == "inflate-gamma" ? 10.0 : 1.0;
    verify_scalar_field(rep, in);
    return finish(rep, out);
}

int dispatch(const RunConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err) {
    if (cfg.command == "ml") return cmd_ml(cfg, in, out);
    if (cfg.command == "simulate") return cmd_simulate(cfg, out, err);
    if (cfg.command == "attractor") return cmd_attractor(cfg, out);
    if (cfg.command == "limits") return cmd_limits(cfg, out);
    if (cfg.command == "heteroclinic") return cmd_heteroclinic(cfg, out);
    if (cfg.command == "triangular") return cmd_triangular(cfg, out);
    if (cfg.command == "bifurcate") return cmd_bifurcate(cfg, out);
    if (cfg.command == "semigroup") return cmd_semigroup(cfg, out);
    if (cfg.command == "verify-scalar") return cmd_verify_scalar(cfg, out);
    if (cfg.command == "verify") return finish(run_verify(cfg), out);
    throw UsageError("unknown command '" + cfg.command + "'");
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j{{"command", command}, {"alpha", alpha}};
    nlohmann::json field = nlohmann::json::object();
    if (!source.catalog.empty()) field["catalog"] = source.catalog;
    if (!source.components.empty()) field["components"] = source.components;
    if (!source.f.empty()) field["f"] = source.f;
    if (!source.h.empty()) field["h"] = source.h;
    if (!family.empty()) field["family"] = family;
    for (const auto& [name, v] : source.params) field["params"][name] = v;
    if (!field.empty()) j["field"] = field;
    if (!x0.empty()) j["x0"] = x0;
    if (!etas.empty()) j["eta"] = etas;
    if (t_end) j["t_end"] = *t_end;
    if (dt) j["dt"] = *dt;
    if (a) j["a"] = *a;
    if (b) j["b"] = *b;
    if (scan) j["scan"] = interval_json(*scan);
    if (command == "heteroclinic") {
        j["t_back"] = t_back;
        j["t_fwd"] = t_fwd;
    }
    if (command == "bifurcate") j["gamma_range"] = {{"name", gamma_name}, {"lo", gamma_lo}, {"hi", gamma_hi}, {"count", gamma_count}};
    if (command == "triangular" && seeds) {
        j["seeds"] = seeds;
        j["rng_seed"] = rng_seed;
    }
    if (command == "semigroup") {
        j["tau1"] = tau1;
        j["tau2"] = tau2;
        j["dt_levels"] = dt_levels;
        j["n_max"] = n_max;
        j["lambda"] = lambda;
    }
    if (command == "verify") j["suite"] = suite;
    if (!fault.empty()) j["fault"] = fault;
    return j;
}

RunConfig parse_args(const std::vector<std::string>& raw) {
    RunConfig cfg;
    CLI::App app{"Dynamics of autonomous Caputo fractional differential equations", "fracdyn"};
    app.require_subcommand(1, 1);

    std::vector<std::string> params_raw;
    std::string x0_raw, eta_raw, scan_raw, range_raw;
    std::vector<std::string> f_raw(kMaxTriangular), h_raw(kMaxTriangular);

    auto field_options = [&](CLI::App* s) {
        s->add_option("--catalog", cfg.source.catalog, "Catalog field name");
        s->add_option("--component", cfg.source.components, "Component expression, repeated per coordinate");
        s->add_option("--param", params_raw, "Parameter value name=value (repeatable)");
    };
    auto alpha_option = [&](CLI::App* s) { s->add_option("--alpha", cfg.alpha, "Order alpha in (0,1)"); };
    auto grid_options = [&](CLI::App* s) {
        s->add_option("--t-end", cfg.t_end, "Final time");
        s->add_option("--dt", cfg.dt, "Time step");
    };
    auto scan_option = [&](CLI::App* s, const char* name) {
        s->add_option(name, scan_raw, "Scan interval lo:hi (every coordinate)");
        s->add_option("--resolution", cfg.resolution, "Zero-search subintervals (>= 1000)");
    };
    auto certificate_options = [&](CLI::App* s) {
        s->add_option("--a", cfg.a, "Dissipativity constant a");
        s->add_option("--b", cfg.b, "Dissipativity constant b");
    };

    auto* ml = app.add_subcommand("ml", "Evaluate E_{alpha,beta}(z)");
    ml->add_option("--alpha", cfg.alpha, "alpha in (0,2]");
    ml->add_option("--beta", cfg.beta, "beta > 0");
    ml->add_option("--z", cfg.z, "Real argument");
    ml->add_flag("--batch", cfg.batch, "Read 'alpha beta z' lines from standard input, write CSV");

    auto* simulate = app.add_subcommand("simulate", "Solve D^alpha x = g(x) and write CSV t,x1,...");
    field_options(simulate);
    alpha_option(simulate);
    simulate->add_option("--x0", x0_raw, "Initial state v1[,v2...]")->required();
    simulate->add_option("--t-end", cfg.t_end, "Final time")->required();
    simulate->add_option("--dt", cfg.dt, "Time step")->required();
    simulate->add_option("--out", cfg.out, "CSV file (default standard output)");

    auto* attractor = app.add_subcommand("attractor", "Zero set and attractor interval of a scalar field");
    field_options(attractor);
    scan_option(attractor, "--scan");
    certificate_options(attractor);

    auto* limits = app.add_subcommand("limits", "Predicted limits of scalar solutions");
    field_options(limits);
    alpha_option(limits);
    scan_option(limits, "--scan");
    certificate_options(limits);
    limits->add_option("--eta", eta_raw, "Initial values v1[,v2...]")->required();
    grid_options(limits);

    auto* hetero = app.add_subcommand("heteroclinic", "Heteroclinic orbit through eta");
    field_options(hetero);
    alpha_option(hetero);
    scan_option(hetero, "--scan");
    certificate_options(hetero);
    hetero->add_option("--eta", eta_raw, "Point on the orbit")->required();
    hetero->add_option("--t-back", cfg.t_back, "Backward horizon");
    hetero->add_option("--t-fwd", cfg.t_fwd, "Forward horizon");
    hetero->add_option("--dt", cfg.dt, "Time step");
    hetero->add_option("--out", cfg.out, "Orbit CSV file");

    auto* tri = app.add_subcommand("triangular", "Product-form triangular field: validation, attractor, limits");
    field_options(tri);
    alpha_option(tri);
    for (std::size_t i = 0; i < kMaxTriangular; ++i) {
        tri->add_option("--f" + std::to_string(i + 1), f_raw[i], "Factor f" + std::to_string(i + 1) + "(x" + std::to_string(i + 1) + ")");
        if (i > 0) tri->add_option("--h" + std::to_string(i + 1), h_raw[i], "Coupling h" + std::to_string(i + 1));
    }
    scan_option(tri, "--box");
    certificate_options(tri);
    tri->add_option("--seeds", cfg.seeds, "Random initial states to simulate");
    tri->add_option("--rng-seed", cfg.rng_seed, "Seed of the random initial states");
    grid_options(tri);
    tri->add_option("--out", cfg.out, "Orbit CSV file seed,t,x1,...");

    auto* bif = app.add_subcommand("bifurcate", "One-parameter sweep of a scalar family");
    field_options(bif);
    alpha_option(bif);
    bif->add_option("--family", cfg.family, "saddle, pitchfork or custom");
    bif->add_option("--gamma-name", cfg.gamma_name, "Swept parameter");
    bif->add_option("--gamma-range", range_raw, "lo:hi:M");
    bif->add_option("--scan", scan_raw, "Scan interval lo:hi");
    bif->add_option("--resolution", cfg.resolution, "Zero-search subintervals (>= 1000)");
    bif->add_option("--expect", cfg.expect, "Required classification label");
    bif->add_option("--eta", eta_raw, "Initial values for divergence checks v1[,v2...]");
    grid_options(bif);
    bif->add_option("--out", cfg.out, "CSV file gamma,zero,stability");

    auto* sg = app.add_subcommand("semigroup", "Semigroup defect of T_tau under dt refinement");
    field_options(sg);
    alpha_option(sg);
    sg->add_option("--tau1", cfg.tau1, "First time shift");
    sg->add_option("--tau2", cfg.tau2, "Second time shift");
    sg->add_option("--dt", cfg.dt, "Coarsest step");
    sg->add_option("--dt-levels", cfg.dt_levels, "Number of halvings");
    sg->add_option("--x0", x0_raw, "Value of the constant initial function");
    sg->add_option("--n-max", cfg.n_max, "Terms kept of the metric series");
    sg->add_option("--lambda", cfg.lambda, "Rate of the linear field for the state-space defect");

    auto* verify = app.add_subcommand("verify", "Invariant battery on the catalog; exit 0 iff all pass");
    verify->add_option("--suite", cfg.suite, "all, ml, solver, scalar, triangular, bifurcation or semigroup");
    verify->add_option("--fault", cfg.fault, "Inject a fault: inflate-gamma");

    auto* vs = app.add_subcommand("verify-scalar", "Scalar invariant suite for one field");
    field_options(vs);
    alpha_option(vs);
    scan_option(vs, "--scan");
    certificate_options(vs);
    vs->add_option("--eta", eta_raw, "Initial values v1[,v2...]");
    grid_options(vs);
    vs->add_option("--fault", cfg.fault, "Inject a fault: inflate-gamma");

    std::vector<std::string> args = join_values(raw);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        throw HelpRequested{subs.empty() ? app.help() : subs.front()->help()};
    } catch (const CLI::ParseError& e) {
        throw UsageError(one_line(e.what()));
    }

    cfg.command = app.get_subcommands().front()->get_name();
    const std::string& cmd = cfg.command;

    for (const auto& p : params_raw) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--param expects name=value, got '" + p + "'");
        cfg.source.params.emplace_back(p.substr(0, eq), to_double(p.substr(eq + 1), "--param " + p.substr(0, eq)));
    }
    if (!x0_raw.empty()) cfg.x0 = number_list(x0_raw, "--x0");
    if (!eta_raw.empty()) cfg.etas = number_list(eta_raw, "--eta");
    if (!scan_raw.empty()) cfg.scan = interval(scan_raw, cmd == "triangular" ? "--box" : "--scan");
    if (!range_raw.empty()) {
        const auto p = split(range_raw, ':');
        if (p.size() != 3) throw UsageError("--gamma-range must be lo:hi:M");
        cfg.gamma_lo = to_double(p[0], "--gamma-range");
        cfg.gamma_hi = to_double(p[1], "--gamma-range");
        const double m = to_double(p[2], "--gamma-range");
        if (!(m >= 3) || m != std::floor(m)) throw UsageError("--gamma-range needs an integer M >= 3");
        cfg.gamma_count = static_cast<std::size_t>(m);
        if (!(cfg.gamma_lo < cfg.gamma_hi)) throw UsageError("--gamma-range needs lo < hi");
    }

    // Triangular factors must be contiguous from f1 and h2.
    std::size_t nf = 0;
    while (nf < kMaxTriangular && !f_raw[nf].empty()) ++nf;
    for (std::size_t i = nf; i < kMaxTriangular; ++i)
        if (!f_raw[i].empty()) throw UsageError("--f" + std::to_string(i + 1) + " given without --f" + std::to_string(i));
    for (std::size_t i = 1; i < kMaxTriangular; ++i) {
        if (i < nf && h_raw[i].empty()) throw UsageError("--h" + std::to_string(i + 1) + " is required with --f" + std::to_string(i + 1));
        if (i >= nf && !h_raw[i].empty()) throw UsageError("--h" + std::to_string(i + 1) + " given without --f" + std::to_string(i + 1));
    }
    cfg.source.f.assign(f_raw.begin(), f_raw.begin() + static_cast<std::ptrdiff_t>(nf));
    if (nf > 1) cfg.source.h.assign(h_raw.begin() + 1, h_raw.begin() + static_cast<std::ptrdiff_t>(nf));

    // Field source: exactly one of catalog, expressions, triangular factors, named family.
    std::vector<std::string> sources;
    if (!cfg.source.catalog.empty()) sources.push_back("--catalog");
    if (!cfg.source.components.empty()) sources.push_back("--component");
    if (!cfg.source.f.empty()) sources.push_back("--f1");
    if (!cfg.family.empty() && cfg.family != "custom") sources.push_back("--family");
    if (sources.size() > 1) throw UsageError("conflicting field sources: " + sources[0] + " and " + sources[1]);
    const bool needs_field = std::find(kFieldCommands.begin(), kFieldCommands.end(), cmd) != kFieldCommands.end();
    if (needs_field && sources.empty()) {
        throw UsageError(cfg.family == "custom" ? "--family custom needs --component"
                                                : cmd + " needs a field: --catalog or --component");
    }
    if (!cfg.family.empty() && cfg.family != "custom" && cfg.family != "saddle" && cfg.family != "pitchfork")
        throw UsageError("--family must be saddle, pitchfork or custom");
    if (!cfg.source.catalog.empty() && !find_entry(cfg.source.catalog))
        throw UsageError("unknown catalog field '" + cfg.source.catalog + "'");

    if (cmd == "ml") {
        if (!(cfg.alpha > 0.0 && cfg.alpha <= 2.0)) throw UsageError("alpha must be in (0,2]");
        if (!(cfg.beta > 0.0)) throw UsageError("beta must be positive");
        if (cfg.batch && cfg.z) throw UsageError("--z and --batch are mutually exclusive");
    } else if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw UsageError("alpha must be in (0,1)");
    }
    if (cfg.t_end && !(*cfg.t_end > 0.0)) throw UsageError("--t-end must be positive");
    if (cfg.dt && !(*cfg.dt > 0.0)) throw UsageError("--dt must be positive");
    if (cfg.t_end && cfg.dt && !(*cfg.dt < *cfg.t_end)) throw UsageError("--dt must be smaller than --t-end");
    if (!(cfg.t_back > 0.0) || !(cfg.t_fwd > 0.0)) throw UsageError("--t-back and --t-fwd must be positive");
    if (cfg.a.has_value() != cfg.b.has_value()) throw UsageError("--a and --b must be given together");
    if (cfg.a && !(*cfg.a > 0.0 && *cfg.b > 0.0)) throw UsageError("--a and --b must be positive");
    if (cfg.resolution < 1000) throw UsageError("--resolution must be at least 1000");
    if (!(cfg.tau1 >= 0.0) || !(cfg.tau2 >= 0.0)) throw UsageError("--tau1 and --tau2 must be non-negative");
    if (cfg.dt_levels < 1) throw UsageError("--dt-levels must be at least 1");
    if (cfg.n_max < 1) throw UsageError("--n-max must be at least 1");
    if (!(cfg.lambda > 0.0)) throw UsageError("--lambda must be positive");
    if (!cfg.fault.empty() && cfg.fault != "inflate-gamma") throw UsageError("unknown fault '" + cfg.fault + "'");
    if (cmd == "verify") {
        const auto& s = verify_suites();
        if (cfg.suite != "all" && std::find(s.begin(), s.end(), cfg.suite) == s.end())
            throw UsageError("unknown suite '" + cfg.suite + "'");
    }
    return cfg;
}

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = parse_args(args);
    } catch (const HelpRequested& h) {
        out << h.text;
        return kExitSuccess;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        return dispatch(cfg, in, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return kExitFailure;
    }
}

}  // namespace fracdyn::cli
