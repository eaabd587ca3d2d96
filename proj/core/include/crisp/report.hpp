#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace crisp {

enum class ReportFormat { kJson, kCsv };

/// Throws UnsupportedFormatError for anything but "json" and "csv".
ReportFormat parse_report_format(std::string_view name);

/// Metric rows by split columns. An empty optional marks a metric that does
/// not apply to that split (for example an empty frequency bin).
struct MetricReport {
    std::map<std::string, std::map<std::string, std::optional<double>>> rows;

    void set(const std::string& metric, const std::string& split, std::optional<double> value) {
        rows[metric][split] = value;
    }
    void merge(const MetricReport& other);
};

/// JSON: {"metric": {"split": value, ...}, ...} with keys in sorted order.
/// CSV: a "metric,<split>..." header then one row per metric; missing or
/// not-applicable cells are written as NA. Numbers use 6 significant digits.
std::string emit_report(const MetricReport& report, ReportFormat format);

/// Inverse of the JSON form of emit_report.
MetricReport parse_report_json(std::string_view text);

/// A number printed with 6 significant digits ("%.6g").
std::string format_number(double value);

}  // namespace crisp
