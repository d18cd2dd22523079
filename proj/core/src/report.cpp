#include "qpon/report.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace qpon {

using nlohmann::ordered_json;

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

const std::vector<Column>& link_columns() {
    static const std::vector<Column> c{
        {"total_loss", "dB"},          {"signal_cps", "1/s"},   {"raman_cps", "1/s"},
        {"dark_cps", "1/s"},           {"leakage_cps", "1/s"},  {"afterpulse_cps", "1/s"},
        {"raman_spad_cps", "1/s"},     {"raw_rate", "b/s"},     {"raw_rate_3sigma", "b/s"},
        {"qber", "1"},                 {"qber_3sigma", "1"},    {"secure_fraction", "1"},
        {"secure_rate", "b/s"},        {"secure_bits_per_pulse", "1"},
    };
    return c;
}

std::vector<double> link_values(const LinkReport& r) {
    return {r.total_loss_db,     r.counts.signal,  r.counts.raman,      r.counts.dark,
            r.counts.leakage,    r.counts.afterpulse, r.raman_rate_hz,  r.raw_rate_bps,
            r.raw_rate_3sigma_bps, r.qber,          r.qber_3sigma,       r.secure_fraction,
            r.secure_rate_bps,   r.secure_bits_per_pulse};
}

namespace {

ordered_json quantity(double v, const std::string& unit) { return {{"value", v}, {"unit", unit}}; }

ordered_json link_object(const LinkReport& r) {
    ordered_json j;
    j["engine"] = r.engine;
    const auto& cols = link_columns();
    const auto vals = link_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) j[cols[i].name] = quantity(vals[i], cols[i].unit);
    j["acquisition_time"] = quantity(r.acquisition_s, "s");
    if (r.engine == "mc") {
        j["pulses"] = r.pulses;
        j["clicks"] = r.clicks;
        j["errors"] = r.errors;
    }
    return j;
}

std::string csv_row(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
    return s;
}

std::string csv_header(const std::vector<std::string>& prefix) {
    std::string s;
    for (const auto& p : prefix) s += p + ",";
    const auto& cols = link_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i].name;
    return s;
}

}  // namespace

std::string link_report_json(const LinkReport& r, const std::string& scenario) {
    ordered_json j;
    j["scenario"] = scenario;
    j["link"] = link_object(r);
    return j.dump(2) + "\n";
}

std::string link_report_csv(const LinkReport& r) {
    return csv_header({}) + "\n" + csv_row(link_values(r)) + "\n";
}

std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
    std::vector<std::string> names;
    for (const auto& a : spec.axes) names.push_back(a.path);
    std::ostringstream os;
    os << csv_header(names) << "\n";
    for (const auto& row : rows) {
        auto v = row.params;
        const auto l = link_values(row.report);
        v.insert(v.end(), l.begin(), l.end());
        os << csv_row(v) << "\n";
    }
    return os.str();
}

std::string sweep_json(const SweepSpec& spec, const std::vector<SweepRow>& rows, const std::string& scenario) {
    ordered_json j;
    j["scenario"] = scenario;
    ordered_json params = ordered_json::array();
    for (const auto& a : spec.axes) params.push_back({{"path", a.path}, {"unit", sweep_unit(a.path)}});
    j["parameters"] = params;
    ordered_json points = ordered_json::array();
    for (const auto& row : rows) {
        ordered_json p;
        ordered_json values = ordered_json::array();
        for (double v : row.params) values.push_back(v);
        p["values"] = values;
        p["link"] = link_object(row.report);
        points.push_back(p);
    }
    j["points"] = points;
    return j.dump(2) + "\n";
}

std::string toggle_csv(const std::vector<ToggleRow>& rows) {
    std::ostringstream os;
    os << "label,channels,delta_qber," << csv_header({}) << "\n";
    for (const auto& r : rows) {
        std::vector<double> v{r.delta_qber};
        const auto l = link_values(r.report);
        v.insert(v.end(), l.begin(), l.end());
        os << r.label << ",\"" << r.groups.to_string() << "\"," << csv_row(v) << "\n";
    }
    return os.str();
}

std::string toggle_json(const std::vector<ToggleRow>& rows, const std::string& scenario) {
    ordered_json j;
    j["scenario"] = scenario;
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json o;
        o["label"] = r.label;
        o["channels"] = r.groups.to_string();
        o["delta_qber"] = quantity(r.delta_qber, "1");
        o["link"] = link_object(r.report);
        arr.push_back(o);
    }
    j["combinations"] = arr;
    return j.dump(2) + "\n";
}

}  // namespace qpon
