#include "cli/report.hpp"

#include "iongate/error.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

namespace iongate::cli {

namespace {

void dump(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(it.key()).dump() + ": ";
        dump(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ",\n";
        first = false;
        out += inner;
        dump(e, out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_number(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump_json(const Json& j) {
  std::string out;
  dump(j, out, 0);
  out += "\n";
  return out;
}

CsvWriter::CsvWriter(const std::string& config_hash, std::vector<std::string> columns) : columns_(columns.size()) {
  out_ = std::string("# ") + kToolName + " " + kToolVersion + " config_fnv1a=" + config_hash + "\n";
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (k) out_ += ",";
    out_ += columns[k];
  }
  out_ += "\n";
}

CsvWriter& CsvWriter::cell(double v) {
  if (filled_++) out_ += ",";
  out_ += format_number(v);
  return *this;
}

CsvWriter& CsvWriter::cell(long long v) {
  if (filled_++) out_ += ",";
  out_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (filled_++) out_ += ",";
  if (v.find_first_of(",\"\n") == std::string::npos) {
    out_ += v;
  } else {
    out_ += '"';
    for (char c : v) {
      if (c == '"') out_ += '"';
      out_ += c;
    }
    out_ += '"';
  }
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) {
    throw Error(ErrorKind::InvalidArgument, "CSV row has " + std::to_string(filled_) + " cells, expected " +
                                                std::to_string(columns_));
  }
  out_ += "\n";
  filled_ = 0;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace iongate::cli
