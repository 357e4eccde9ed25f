#include "abx/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace abx {

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header)
    : header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> cells) {
  rows_.push_back(std::move(cells));
  dirty_ = true;
}

const std::string& CsvWriter::content() {
  if (dirty_) {
    content_.clear();
    auto append_line = [this](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) content_ += ',';
        content_ += cells[i];
      }
      content_ += '\n';
    };
    append_line(header_);
    for (const auto& row : rows_) append_line(row);
    dirty_ = false;
  }
  return content_;
}

void CsvWriter::write(const std::filesystem::path& path) {
  write_file_atomic(path, content());
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace abx
