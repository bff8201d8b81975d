#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace wavelab {

inline constexpr std::string_view kVersion = "0.4.0";

// 17 significant digits, the round-trip precision of a double.
std::string format_double(double value);

// Writes a CSV with the given header and equally long columns.
void write_columns_csv(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<Eigen::VectorXd>& columns);

void write_json(const std::string& path, const nlohmann::json& doc);

nlohmann::json to_json(const Eigen::Ref<const Eigen::VectorXd>& v);

// FNV-1a, used to tag reports with the configuration they came from.
std::uint64_t fnv1a(std::string_view text);
std::string hex64(std::uint64_t value);

void ensure_directory(const std::string& path);

}  // namespace wavelab
