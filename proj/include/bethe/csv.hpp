#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace bethe {

inline constexpr int kSchemaVersion = 1;

// Shortest-roundtrip decimal formatting so identical doubles always print the
// same bytes on every platform.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : out_(path), n_columns_(columns.size()) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    out_ << "# schema_version=" << kSchemaVersion << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
      out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

  CsvWriter& field(double v) { return raw(format_double(v)); }
  CsvWriter& field(int v) { return raw(std::to_string(v)); }
  CsvWriter& field(long v) { return raw(std::to_string(v)); }
  CsvWriter& field(std::size_t v) { return raw(std::to_string(v)); }
  CsvWriter& field(const std::string& v) { return raw(v); }

  void end_row() {
    if (in_row_ != n_columns_)
      throw std::logic_error("csv row has wrong number of fields");
    out_ << "\n";
    in_row_ = 0;
  }

 private:
  CsvWriter& raw(const std::string& s) {
    out_ << (in_row_++ ? "," : "") << s;
    return *this;
  }
  std::ofstream out_;
  std::size_t n_columns_;
  std::size_t in_row_ = 0;
};

// Run manifest: resolved configuration plus provenance written next to every
// output file.
inline void write_manifest(const std::string& path, const std::string& command,
                           const nlohmann::json& resolved_config,
                           const std::vector<std::string>& outputs) {
  nlohmann::json j{{"schema_version", kSchemaVersion},
                   {"command", command},
                   {"config", resolved_config},
                   {"outputs", outputs}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

}  // namespace bethe
