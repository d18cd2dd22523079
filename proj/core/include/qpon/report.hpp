#pragma once

#include <string>
#include <vector>

#include "qpon/qkdlink.hpp"
#include "qpon/scenario.hpp"

namespace qpon {

// Fixed-precision number text shared by every CSV writer.
std::string format_number(double v);

// Link report columns, in output order, with their units.
struct Column {
    std::string name;
    std::string unit;
};
const std::vector<Column>& link_columns();
std::vector<double> link_values(const LinkReport& r);

// JSON objects carry {"value", "unit"} pairs for every physical quantity.
std::string link_report_json(const LinkReport& r, const std::string& scenario);
std::string link_report_csv(const LinkReport& r);

std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows);
std::string sweep_json(const SweepSpec& spec, const std::vector<SweepRow>& rows, const std::string& scenario);

std::string toggle_csv(const std::vector<ToggleRow>& rows);
std::string toggle_json(const std::vector<ToggleRow>& rows, const std::string& scenario);

}  // namespace qpon
