#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace fracdyn::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Doubles at 15 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double v);

/// JSON number, or the format_number string when v is not finite.
nlohmann::json json_number(double v);

struct CheckRecord {
    std::string check;
    bool passed = false;
    double margin = 0.0;  // distance to the threshold; negative when failing
    nlohmann::json details = nlohmann::json::object();
};

/// {version, config, results: [{check, status, margin, details}]}.
class Report {
public:
    explicit Report(nlohmann::json config) : config_(std::move(config)) {}

    CheckRecord& add(std::string check, bool passed, double margin, nlohmann::json details = nlohmann::json::object());
    const std::vector<CheckRecord>& results() const noexcept { return results_; }
    bool all_passed() const;
    std::size_t passed_count() const;
    nlohmann::json to_json() const;
    void write(std::ostream& out) const;

private:
    nlohmann::json config_;
    std::vector<CheckRecord> results_;
};

/// Header row plus one line per row, values through format_number, '\n' endings.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header);
    void row(std::span<const double> values);
    /// A row whose last field is text.
    void row(std::span<const double> values, const std::string& tail);

private:
    std::ostream& out_;
    std::size_t columns_;
};

}  // namespace fracdyn::cli
