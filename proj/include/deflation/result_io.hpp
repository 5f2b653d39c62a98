#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "deflation/driver.hpp"

namespace deflation {

inline constexpr int kSchemaVersion = 1;

// JSON result file; layout documented in docs/formats.md.
struct ResultFile {
  int schema_version = kSchemaVersion;
  std::string name;
  std::map<std::string, std::string> problem;
  RunConfig config;
  std::vector<SolutionRecord> records;
  std::vector<std::vector<Vec>> pool_history;  // persistent pool after each record
  std::string build_id;
  double total_wall_time = 0.0;
};

ResultFile make_result_file(const std::string& name, const std::map<std::string, std::string>& problem,
                            const RunConfig& config, const SolutionSet& set, double total_wall_time);

std::string build_id();

// Pretty-printed JSON. Non-finite numbers are written as the strings "inf", "-inf", "nan".
std::string emit_result_string(const ResultFile& file);
// Same document without the timings block; identical runs give identical text.
std::string deterministic_payload(const ResultFile& file);
ResultFile parse_result_string(const std::string& text);

void emit_result(const ResultFile& file, const std::string& path);
ResultFile read_result(const std::string& path);

// One row per record; header fixed (see docs/formats.md).
void write_csv(const ResultFile& file, std::ostream& os);
void write_csv(const ResultFile& file, const std::string& path);

}  // namespace deflation
