#pragma once

// Fixed-precision number formatting shared by every emitted CSV and JSON
// artifact, so reruns are byte-identical.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace rmab {

/// "%.12g"; infinities print as "inf" / "-inf", NaN as "nan".
std::string format_number(double v);

/// Recursively rounds every floating-point number in `doc` to 12
/// significant digits (non-finite numbers become the strings above).
nlohmann::json rounded(const nlohmann::json& doc);

/// Writes `doc` rounded, indented by 2, with a trailing newline.
void write_json(std::ostream& out, const nlohmann::json& doc);

/// Minimal CSV writer: one header row, then rows of preformatted cells.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace rmab
