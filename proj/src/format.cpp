#include "rmab/format.hpp"

#include <cmath>
#include <cstdio>

namespace rmab {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json rounded(const json& doc) {
  if (doc.is_number_float()) {
    const double v = doc.get<double>();
    if (!std::isfinite(v)) return format_number(v);
    return std::strtod(format_number(v).c_str(), nullptr);
  }
  if (doc.is_array()) {
    json out = json::array();
    for (const json& e : doc) out.push_back(rounded(e));
    return out;
  }
  if (doc.is_object()) {
    json out = json::object();
    for (auto it = doc.begin(); it != doc.end(); ++it) out[it.key()] = rounded(it.value());
    return out;
  }
  return doc;
}

void write_json(std::ostream& out, const json& doc) { out << rounded(doc).dump(2) << '\n'; }

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out) {
  for (const std::string& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (!first_) out_ << ',';
  first_ = false;
  out_ << s;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_number(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

}  // namespace rmab
