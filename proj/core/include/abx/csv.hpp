#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace abx {

/// Formats a double with enough digits to round-trip, C locale, decimal point.
std::string format_real(double x);

/// Row-oriented CSV builder. Writing is atomic: content goes to a temp file
/// in the target directory which is then renamed over the destination, so a
/// failed run never leaves a partial file behind.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  const std::string& content();  // builds lazily

  /// Creates parent directories as needed.
  void write(const std::filesystem::path& path);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::string content_;
  bool dirty_ = true;
};

/// Atomic whole-file write (temp + rename).
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace abx
