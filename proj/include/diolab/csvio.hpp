#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace diolab {

// Shortest decimal form with 17 significant digits (round trips any double).
std::string format_double(double x);
std::string format_int(long long x);

// Small in-memory CSV: fixed header, comma separation, LF line ends.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  // One row, cell count must match the header.
  void add_row(std::vector<std::string> cells);

  std::size_t rows() const { return rows_.size(); }
  std::string to_string() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// 64-bit FNV-1a, used to fingerprint configs in run manifests.
std::uint64_t fnv1a64(std::string_view bytes);

// UTC timestamp (ISO 8601). SOURCE_DATE_EPOCH, when set, pins the clock so
// archived runs reproduce byte for byte.
std::string utc_timestamp();

// Entire file as a string; throws std::runtime_error when unreadable.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace diolab
