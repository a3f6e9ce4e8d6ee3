#include "vitalspec/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "vitalspec/error.hpp"

namespace vitalspec {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line, const char* column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw CsvError(line, std::string("invalid ") + column + " '" + s + "'");
  return v;
}

int parse_int(const std::string& s, std::size_t line, const char* column) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw CsvError(line, std::string("invalid ") + column + " '" + s + "'");
  return v;
}

struct Row {
  double t;
  double value;
  std::size_t line;
};

struct Group {
  std::vector<Row> rows;
  std::optional<int> label;
  std::size_t first_line = 0;
};

// Uniform grid spanning the observed timestamps with the same sample count.
std::vector<double> regularize(const std::vector<Row>& rows, double& dt) {
  const std::size_t n = rows.size();
  const double span = rows.back().t - rows.front().t;
  dt = span / static_cast<double>(n - 1);

  bool uniform = true;
  for (std::size_t i = 1; i < n && uniform; ++i) {
    const double step = rows[i].t - rows[i - 1].t;
    uniform = std::abs(step - dt) <= 1e-9 * std::max(1.0, dt);
  }
  std::vector<double> out(n);
  if (uniform) {
    for (std::size_t i = 0; i < n; ++i) out[i] = rows[i].value;
    return out;
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = rows.front().t + static_cast<double>(i) * dt;
    while (k + 2 < n && rows[k + 1].t <= t) ++k;
    const double t0 = rows[k].t;
    const double t1 = rows[k + 1].t;
    const double frac = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    out[i] = rows[k].value + frac * (rows[k + 1].value - rows[k].value);
  }
  out.back() = rows.back().value;
  return out;
}

}  // namespace

std::vector<Record> read_records_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  // Header is required; blank leading lines are skipped.
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) return {};
  if (!header.empty() && header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0)
    header[0] = header[0].substr(3);

  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_subject = column("subject_id");
  const auto c_time = column("timestamp_s");
  const auto c_value = column("value");
  if (!c_subject || !c_time || !c_value)
    throw CsvError(line_no, "header must contain subject_id,timestamp_s,value");
  const auto c_record = column("record_id");
  const auto c_label = column("label");

  std::map<std::pair<std::string, int>, Group> groups;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw CsvError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    const std::string& subject = fields[*c_subject];
    if (subject.empty()) throw CsvError(line_no, "empty subject_id");
    const int record_id = c_record ? parse_int(fields[*c_record], line_no, "record_id") : 0;
    auto& g = groups[{subject, record_id}];
    if (g.rows.empty()) g.first_line = line_no;
    g.rows.push_back({parse_double(fields[*c_time], line_no, "timestamp_s"),
                      parse_double(fields[*c_value], line_no, "value"), line_no});
    if (c_label && !fields[*c_label].empty()) {
      const int label = parse_int(fields[*c_label], line_no, "label");
      if (label != 0 && label != 1) throw CsvError(line_no, "label must be 0 or 1");
      if (g.label && *g.label != label) throw CsvError(line_no, "conflicting labels within one record");
      g.label = label;
    }
  }

  std::vector<Record> records;
  records.reserve(groups.size());
  for (auto& [key, g] : groups) {
    std::stable_sort(g.rows.begin(), g.rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < g.rows.size(); ++i) {
      if (g.rows[i].t == g.rows[i - 1].t)
        throw CsvError(g.rows[i].line, "duplicate timestamp " + std::to_string(g.rows[i].t) + " for subject " +
                                           key.first);
    }
    if (g.rows.size() < 2)
      throw CsvError(g.first_line, "subject " + key.first + " has a single sample; at least 2 are required");
    double dt = 0.0;
    auto values = regularize(g.rows, dt);
    records.push_back(Record{key.first, key.second, g.label,
                             TimeSeries(std::move(values), dt, {}, key.first, g.rows.front().t)});
  }
  return records;
}

std::vector<Record> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return read_records_csv(in);
}

void write_records_csv(std::ostream& out, const std::vector<Record>& records, bool with_labels) {
  out << "subject_id,timestamp_s,value,record_id";
  if (with_labels) out << ",label";
  out << '\n';
  auto num = [](double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  };
  for (const auto& r : records) {
    const auto& s = r.series;
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << r.subject_id << ',' << num(s.start_time() + static_cast<double>(i) * s.dt()) << ',' << num(s[i]) << ','
          << r.record_id;
      if (with_labels) {
        out << ',';
        if (r.label) out << *r.label;
      }
      out << '\n';
    }
  }
}

}  // namespace vitalspec
