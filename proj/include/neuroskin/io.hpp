#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace neuroskin {

/// Shortest decimal that round-trips to `value`, laid out like Python's
/// repr(float): "1.5", "450000.0", "1e-05", "1.2345e+16".
std::string format_float(double value);

/// Fixed-width scientific rendering with 18 fractional digits, the layout of
/// numpy.savetxt's default "%.18e".
std::string format_scientific(double value);

/// Reads a whitespace-separated numeric matrix. Blank lines and lines
/// starting with '#' are skipped. Throws ParseError naming the offending
/// line for ragged rows or bad numbers.
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

/// Writes one row per line, values separated by a single space.
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& values);

/// Appends `x` as one comma-joined line, no trailing comma, newline
/// terminated. Throws Error when the file cannot be written.
void log_iterate(const std::filesystem::path& path, std::span<const double> x);

/// Reads comma-separated rows that must each hold exactly `columns` values.
std::vector<std::vector<double>> read_history(const std::filesystem::path& path, std::size_t columns);

/// Rewrites `path` with every row followed by its objective value, in
/// "%.18e" layout with comma delimiters.
void write_history_with_objective(const std::filesystem::path& path, const std::vector<std::vector<double>>& rows,
                                  std::span<const double> objective);

}  // namespace neuroskin
