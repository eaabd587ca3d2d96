#include "crisp/report.hpp"

#include "crisp/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace crisp {

ReportFormat parse_report_format(std::string_view name) {
    if (name == "json") return ReportFormat::kJson;
    if (name == "csv") return ReportFormat::kCsv;
    throw UnsupportedFormatError("unsupported report format '" + std::string(name) + "' (expected json or csv)");
}

void MetricReport::merge(const MetricReport& other) {
    for (const auto& [metric, cells] : other.rows) {
        for (const auto& [split, value] : cells) rows[metric][split] = value;
    }
}

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

namespace {

std::string json_number(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return "null";
    return format_number(*v);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

std::string emit_report(const MetricReport& report, ReportFormat format) {
    std::ostringstream out;
    if (format == ReportFormat::kJson) {
        if (report.rows.empty()) return "{}";
        out << "{\n";
        bool first_metric = true;
        for (const auto& [metric, cells] : report.rows) {
            out << (first_metric ? "" : ",\n") << "  " << nlohmann::json(metric).dump() << ": {";
            first_metric = false;
            bool first_cell = true;
            for (const auto& [split, value] : cells) {
                out << (first_cell ? "" : ", ") << nlohmann::json(split).dump() << ": " << json_number(value);
                first_cell = false;
            }
            out << "}";
        }
        out << "\n}";
        return out.str();
    }

    std::set<std::string> splits;
    for (const auto& [_, cells] : report.rows) {
        for (const auto& [split, __] : cells) splits.insert(split);
    }
    out << "metric";
    for (const auto& s : splits) out << ',' << csv_field(s);
    out << '\n';
    for (const auto& [metric, cells] : report.rows) {
        out << csv_field(metric);
        for (const auto& s : splits) {
            const auto it = cells.find(s);
            out << ',' << (it == cells.end() || !it->second || !std::isfinite(*it->second) ? "NA" : format_number(*it->second));
        }
        out << '\n';
    }
    return out.str();
}

MetricReport parse_report_json(std::string_view text) {
    MetricReport r;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("metric report: ") + e.what());
    }
    if (!doc.is_object()) throw FormatError("metric report must be a JSON object");
    for (const auto& [metric, cells] : doc.items()) {
        if (!cells.is_object()) throw FormatError("metric report: row '" + metric + "' must be an object");
        for (const auto& [split, value] : cells.items()) {
            r.set(metric, split, value.is_null() ? std::nullopt : std::optional<double>(value.get<double>()));
        }
    }
    return r;
}

}  // namespace crisp
