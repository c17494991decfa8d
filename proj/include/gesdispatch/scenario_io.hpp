#pragma once

// Scenario directories: scenario.json plus units.csv, unit_series.csv,
// timeseries.csv and ddu.csv.

#include "gesdispatch/dispatch.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ges {

/// Text with 17 significant digits ("inf"/"-inf" for infinities).
std::string format_number(double v);
double parse_double(const std::string& text, const std::string& context);

/// Comma-separated table with a header row; cells with commas or quotes are double-quoted.
struct CsvTable {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines; ///< source line of every row

    std::ptrdiff_t column(const std::string& name) const;
    /// Cell or "" when the column is absent.
    const std::string& cell(std::size_t row, const std::string& name) const;
    std::string where(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Reads and validates a scenario directory (ParseError, ValidationError).
ScenarioBundle load_scenario(const std::filesystem::path& dir);
/// Reads a scenario directory without validating it.
ScenarioBundle read_scenario(const std::filesystem::path& dir);
void save_scenario(const ScenarioBundle& scn, const std::filesystem::path& dir);

} // namespace ges
