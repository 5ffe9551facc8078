#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace iongate::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "iongate";
#ifdef IONGATE_VERSION
inline constexpr const char* kToolVersion = IONGATE_VERSION;
#else
inline constexpr const char* kToolVersion = "0.0.0";
#endif

/// Number with 17 significant digits; non-finite values become "nan"/"inf".
std::string format_number(double v);

/// Two-space indented JSON with every floating-point number in %.17g form.
/// Non-finite numbers are written as null.
std::string dump_json(const Json& j);

struct Artifact {
  std::string name;     // file name inside the output directory
  std::string content;
};

/// CSV with a leading comment line carrying the tool version and config hash.
class CsvWriter {
 public:
  CsvWriter(const std::string& config_hash, std::vector<std::string> columns);
  CsvWriter& cell(double v);
  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(long long v);
  void end_row();
  std::string str() const { return out_; }

 private:
  std::string out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

/// Writes to a temporary file in the same directory and renames it over the target.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace iongate::cli
