#include "neuroskin/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "neuroskin/error.hpp"

namespace neuroskin {
namespace {

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::string format_float(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";

  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific);
  const std::string_view sci(buf, static_cast<std::size_t>(end - buf));
  const auto e_pos = sci.find('e');
  std::string_view mantissa = sci.substr(0, e_pos);
  const int exponent = std::stoi(std::string(sci.substr(e_pos + 1)));

  std::string sign;
  if (mantissa.front() == '-') {
    sign = "-";
    mantissa.remove_prefix(1);
  }
  std::string digits;
  for (char c : mantissa)
    if (c != '.') digits.push_back(c);
  const auto n = static_cast<int>(digits.size());

  if (exponent >= -4 && exponent < 16) {
    const int point = exponent + 1;
    if (point <= 0) return sign + "0." + std::string(static_cast<std::size_t>(-point), '0') + digits;
    if (point >= n) return sign + digits + std::string(static_cast<std::size_t>(point - n), '0') + ".0";
    return sign + digits.substr(0, static_cast<std::size_t>(point)) + "." +
           digits.substr(static_cast<std::size_t>(point));
  }
  std::string out = sign + digits.substr(0, 1);
  if (n > 1) out += "." + digits.substr(1);
  char exp_buf[16];
  std::snprintf(exp_buf, sizeof exp_buf, "e%c%02d", exponent < 0 ? '-' : '+', std::abs(exponent));
  return out + exp_buf;
}

std::string format_scientific(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.18e", value);
  return buf;
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    std::istringstream tokens{std::string(content)};
    std::vector<double> row;
    std::string token;
    while (tokens >> token) {
      double v = 0.0;
      if (!parse_double(token, v))
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + token + "'", line_no);
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(rows.front().size()) + " columns, found " + std::to_string(row.size()),
                       line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data rows", line_no);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return out;
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& values) {
  std::ofstream out = open_for_write(path, std::ios::out | std::ios::trunc);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out << ' ';
      out << format_float(values(r, c));
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

void log_iterate(const std::filesystem::path& path, std::span<const double> x) {
  std::string line;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0) line += ',';
    line += format_float(x[i]);
  }
  line += '\n';
  std::ofstream out = open_for_write(path, std::ios::out | std::ios::app);
  out << line;
  out.flush();
  if (!out) throw Error("failed appending to '" + path.string() + "'");
}

std::vector<std::vector<double>> read_history(const std::filesystem::path& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view content = trim(line);
    if (content.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = content.find(',', start);
      const std::string_view field = trim(content.substr(start, comma == std::string_view::npos ? comma : comma - start));
      double v = 0.0;
      if (!parse_double(field, v))
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + std::string(field) + "'",
                         line_no);
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (row.size() != columns)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                           " values, found " + std::to_string(row.size()),
                       line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_history_with_objective(const std::filesystem::path& path, const std::vector<std::vector<double>>& rows,
                                  std::span<const double> objective) {
  if (rows.size() != objective.size()) throw ShapeError("one objective value per history row is required");
  std::ofstream out = open_for_write(path, std::ios::out | std::ios::trunc);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (double v : rows[r]) out << format_scientific(v) << ',';
    out << format_scientific(objective[r]) << '\n';
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace neuroskin
