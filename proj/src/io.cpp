#include "wavelab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wavelab/errors.hpp"

namespace wavelab {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_columns_csv(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<Eigen::VectorXd>& columns) {
  if (header.size() != columns.size()) throw InvalidArgument("CSV header/column mismatch");
  const Eigen::Index rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != rows) throw InvalidArgument("CSV columns must have equal length");
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < columns.size(); ++k)
      out << (k ? "," : "") << format_double(columns[k](r));
    out << '\n';
  }
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << doc.dump(2) << '\n';
}

nlohmann::json to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw InvalidArgument("cannot create directory " + path + ": " + ec.message());
}

}  // namespace wavelab
