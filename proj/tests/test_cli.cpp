#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fracdyn/cli/catalog.hpp"
#include "fracdyn/cli/commands.hpp"
#include "fracdyn/cli/report.hpp"
#include "json.hpp"

using namespace fracdyn;
using namespace fracdyn::cli;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args, const std::string& input = "") {
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = run_cli(args, in, out, err);
    return {code, out.str(), err.str()};
}

bool single_line(const std::string& s) { return !s.empty() && s.find('\n') == s.size() - 1; }

double rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("parse_args maps flags to a config") {
    const auto cfg = parse_args({"simulate", "--alpha", "0.6", "--catalog", "cubic", "--x0", "2", "--t-end", "100", "--dt", "0.001"});
    CHECK(cfg.command == "simulate");
    CHECK(cfg.alpha == 0.6);
    CHECK(cfg.source.catalog == "cubic");
    CHECK(cfg.x0 == std::vector<double>{2.0});
    CHECK(*cfg.t_end == 100.0);
    CHECK(*cfg.dt == 0.001);

    const auto neg = parse_args({"limits", "--component", "-x", "--eta", "-1,0.5", "--scan", "-3:3"});
    CHECK(neg.source.components == std::vector<std::string>{"-x"});
    CHECK(neg.etas == std::vector<double>{-1.0, 0.5});
    CHECK(neg.scan->lo == -3.0);

    const auto par = parse_args({"attractor", "--catalog", "saddle", "--param", "gamma=0.5"});
    REQUIRE(par.source.params.size() == 1);
    CHECK(par.source.params[0].second == 0.5);

    const auto tri = parse_args({"triangular", "--f1", "x*(1-x^2)", "--f2", "y*(1-y^2)", "--h2", "1+x^2", "--a", "4", "--b", "1"});
    CHECK(tri.source.f.size() == 2);
    CHECK(tri.source.h == std::vector<std::string>{"1+x^2"});
}

TEST_CASE("usage errors exit 2 with one line") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"simulate", "--alpha", "1.5", "--catalog", "cubic", "--x0", "2", "--t-end", "1", "--dt", "0.1"},
             {"bifurcate", "--catalog", "cubic", "--component", "x"},
             {"simulate", "--catalog", "cubic", "--x0", "2", "--t-end", "1", "--dt", "0.1", "--bogus", "1"},
             {"simulate", "--catalog", "cubic", "--x0", "2", "--t-end", "1"},
             {"attractor", "--catalog", "nosuch"},
             {"attractor", "--catalog", "cubic", "--param", "gamma=1"},
             {"attractor"},
             {"triangular", "--f1", "x", "--f2", "y"},
             {"simulate", "--catalog", "cubic", "--x0", "1,2", "--t-end", "1", "--dt", "0.1"},
             {"verify", "--suite", "nosuch"},
             {"ml", "--alpha", "0.5"},
             {},
         }) {
        const auto r = run(args);
        INFO(r.err);
        CHECK(r.code == kExitUsage);
        CHECK(single_line(r.err));
    }
    CHECK(run({"simulate", "--alpha", "1.5", "--catalog", "cubic", "--x0", "2", "--t-end", "1", "--dt", "0.1"}).err.find("(0,1)") !=
          std::string::npos);
    CHECK(run({"bifurcate", "--catalog", "cubic", "--component", "x"}).err.find("conflicting field sources") !=
          std::string::npos);
    CHECK(run({"attractor", "--component", "x +"}).code == kExitUsage);
}

TEST_CASE("help exits 0") {
    const auto top = run({"--help"});
    CHECK(top.code == kExitSuccess);
    CHECK(top.out.find("simulate") != std::string::npos);
    const auto sub = run({"simulate", "--help"});
    CHECK(sub.code == kExitSuccess);
    CHECK(sub.out.find("--x0") != std::string::npos);
}

TEST_CASE("catalog fields match their closed forms") {
    const auto* logistic = find_entry("logistic");
    REQUIRE(logistic);
    const auto* saddle = find_entry("saddle");
    const auto* pitchfork = find_entry("pitchfork");
    const auto* fig2 = find_entry("fig2");
    const auto* sec3 = find_entry("sec3text");
    REQUIRE((saddle && pitchfork && fig2 && sec3));
    CHECK(find_entry("nosuch") == nullptr);

    const std::vector<double> none;
    for (double x = -2.0; x <= 2.0; x += 0.125) {
        CHECK(rel(find_entry("linear")->field().eval_scalar(x, none), -x) <= 1e-15);
        CHECK(rel(find_entry("cubic")->field().eval_scalar(x, none), x - x * x * x) <= 1e-15);
        CHECK(rel(logistic->field().eval_scalar(x, none), x * (1 - x)) <= 1e-15);
        const double gamma = 0.3;
        const double p[] = {gamma};
        CHECK(rel(saddle->field().eval_scalar(x, p), gamma - x * x) <= 1e-15);
        CHECK(rel(pitchfork->field().eval_scalar(x, p), gamma * x - x * x * x) <= 1e-15);
        for (double y = -2.0; y <= 2.0; y += 0.5) {
            const double s[] = {x, y};
            const auto g = eval_field(fig2->field(), s, none);
            CHECK(rel(g[0], x * (1 - x * x)) <= 1e-15);
            CHECK(rel(g[1], (1 + x * x) * y * (1 - y * y)) <= 1e-15);
            const auto t = eval_field(sec3->field(), s, none);
            CHECK(rel(t[0], x * (1 - x)) <= 1e-15);
            CHECK(rel(t[1], (1 + x * x) * y * (1 - y * y)) <= 1e-15);
        }
    }
}

TEST_CASE("CSV output is byte-identical across runs") {
    const std::vector<std::string> args{"simulate", "--catalog", "fig2", "--x0", "0.3,-1.7", "--t-end", "5", "--dt", "0.01"};
    const auto a = run(args);
    const auto b = run(args);
    CHECK(a.code == kExitSuccess);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("t,x1,x2\n", 0) == 0);
    CHECK(a.out.find('\r') == std::string::npos);
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333333");
    CHECK(format_number(-INFINITY) == "-inf");

    const auto path = (std::filesystem::temp_directory_path() / "fracdyn_test_bifurcation.csv").string();
    const auto bif = run({"bifurcate", "--family", "saddle", "--gamma-range", "-1:1:21", "--out", path});
    CHECK(bif.code == kExitSuccess);
    std::ifstream file(path);
    const std::string csv((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    CHECK(csv.rfind("gamma,zero,stability\n0,0,degenerate\n", 0) == 0);
    std::filesystem::remove(path);
}

TEST_CASE("escape is reported on stderr") {
    const auto r = run({"simulate", "--component", "x^2", "--x0", "1", "--t-end", "10", "--dt", "0.01"});
    CHECK(r.code == kExitSuccess);
    CHECK(r.err.find("escaped") != std::string::npos);
}

TEST_CASE("ml command") {
    const auto one = run({"ml", "--alpha", "1", "--z", "1"});
    CHECK(one.code == kExitSuccess);
    CHECK(std::abs(std::stod(one.out) - std::exp(1.0)) < 1e-13);
    const auto batch = run({"ml", "--batch"}, "1 1 0\n\n2 1 4\n");
    CHECK(batch.out == "alpha,beta,z,value\n1,1,0,1\n2,1,4," + format_number(std::cosh(2.0)) + "\n");
    CHECK(run({"ml", "--batch"}, "1 1\n").code == kExitUsage);
}

TEST_CASE("JSON report schema") {
    const auto r = run({"attractor", "--catalog", "cubic"});
    CHECK(r.code == kExitSuccess);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("version") == kVersion);
    CHECK(j.at("config").at("command") == "attractor");
    for (const auto& rec : j.at("results")) {
        CHECK(rec.contains("check"));
        CHECK(rec.contains("status"));
        CHECK(rec.contains("margin"));
        CHECK(rec.contains("details"));
    }
    const auto& last = j.at("results").back();
    CHECK(last.at("check") == "attractor_interval");
    CHECK(std::abs(last.at("details").at("lo").get<double>() + 1.0) <= 1e-9);
    CHECK(std::abs(last.at("details").at("hi").get<double>() - 1.0) <= 1e-9);
}

TEST_CASE("failing checks exit 1") {
    const auto sec3 = run({"triangular", "--catalog", "sec3text"});
    CHECK(sec3.code == kExitFailure);
    const auto vanish = run({"triangular", "--f1", "x*(1-x^2)", "--f2", "y*(1-y^2)", "--h2", "x", "--a", "4", "--b", "1"});
    CHECK(vanish.code == kExitFailure);
    CHECK(vanish.out.find("h_nonvanishing") != std::string::npos);
}

TEST_CASE("verify suites") {
    const auto start = std::chrono::steady_clock::now();
    const auto ml = run({"verify", "--suite", "ml"});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(ml.code == kExitSuccess);
    CHECK(seconds < 1.0);

    const auto fault = run({"verify", "--suite", "scalar", "--fault", "inflate-gamma"});
    CHECK(fault.code == kExitFailure);
    const auto j = nlohmann::json::parse(fault.out);
    bool named = false;
    for (const auto& rec : j.at("results"))
        if (rec.at("status") == "fail") named = named || rec.at("check").get<std::string>().find("envelope_check") == 0;
    CHECK(named);

    const auto all = run({"verify"});
    CHECK(all.code == kExitSuccess);
    const auto summary = nlohmann::json::parse(all.out);
    std::size_t passed = 0;
    for (const auto& rec : summary.at("results")) passed += rec.at("status") == "pass";
    CHECK(passed >= 10);
}

}  // TEST_SUITE
