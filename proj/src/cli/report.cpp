#include "fracdyn/cli/report.hpp"

#include <cmath>
#include <cstdio>

#include "fracdyn/errors.hpp"

namespace fracdyn::cli {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

nlohmann::json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

CheckRecord& Report::add(std::string check, bool passed, double margin, nlohmann::json details) {
    results_.push_back({std::move(check), passed, margin, std::move(details)});
    return results_.back();
}

bool Report::all_passed() const {
    for (const auto& r : results_)
        if (!r.passed) return false;
    return true;
}

std::size_t Report::passed_count() const {
    std::size_t n = 0;
    for (const auto& r : results_) n += r.passed ? 1 : 0;
    return n;
}

nlohmann::json Report::to_json() const {
    nlohmann::json results = nlohmann::json::array();
    for (const auto& r : results_) {
        results.push_back({{"check", r.check},
                           {"status", r.passed ? "pass" : "fail"},
                           {"margin", json_number(r.margin)},
                           {"details", r.details}});
    }
    return {{"version", kVersion}, {"config", config_}, {"results", results}};
}

void Report::write(std::ostream& out) const { out << to_json().dump(2) << '\n'; }

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void CsvWriter::row(std::span<const double> values) {
    if (values.size() != columns_) throw PreconditionError("CSV row width does not match the header");
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
    out_ << '\n';
}

void CsvWriter::row(std::span<const double> values, const std::string& tail) {
    if (values.size() + 1 != columns_) throw PreconditionError("CSV row width does not match the header");
    for (const double v : values) out_ << format_number(v) << ',';
    out_ << tail << '\n';
}

}  // namespace fracdyn::cli
