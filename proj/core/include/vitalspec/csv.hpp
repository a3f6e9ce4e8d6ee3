#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vitalspec/time_series.hpp"

namespace vitalspec {

/// One subject recording loaded from CSV.
///
/// Required columns: subject_id,timestamp_s,value. Two optional columns are
/// recognised by header name: record_id (several recordings per subject) and
/// label (ground truth for detection-style protocols, 0 or 1).
struct Record {
  std::string subject_id;
  int record_id = 0;
  std::optional<int> label;
  TimeSeries series;
};

/// Parses the CSV, groups rows by (subject_id, record_id), sorts each group by
/// timestamp and regularizes irregular sampling onto an even grid by linear
/// interpolation. Throws CsvError with the line number on malformed rows and on
/// duplicate timestamps.
std::vector<Record> read_records_csv(std::istream& in);
std::vector<Record> read_records_csv(const std::string& path);

void write_records_csv(std::ostream& out, const std::vector<Record>& records, bool with_labels);

}  // namespace vitalspec
