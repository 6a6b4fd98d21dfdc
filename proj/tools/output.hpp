#pragma once

// Tables, manifests and atomic file output for the command-line tool.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace phasecert::cli {

using Cell = std::variant<std::monostate, double, std::int64_t, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// Doubles use 15 significant digits; non-finite values print as inf/nan.
void write_csv(std::ostream& out, const Table& table);
/// {"columns": [...], "rows": [[...], ...], "summary": {...}}; non-finite
/// doubles become null.
nlohmann::json table_json(const Table& table, const nlohmann::json& summary);

/// Finite doubles as numbers, anything else as null.
nlohmann::json number_or_null(double value);

struct RunManifest {
  std::string command;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string timestamp;  // UTC, ISO 8601
};

/// UTC time from SOURCE_DATE_EPOCH when set, else the current time.
std::string manifest_timestamp();
nlohmann::json to_json(const RunManifest& manifest);

/// Writes via a temporary file in the same directory and a rename.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Sends `contents` to `path`, or to `fallback` when no path is given. With a
/// path, the manifest is written alongside as `<path>.manifest.json`.
void emit(const std::optional<std::string>& path, const std::string& contents, std::ostream& fallback,
          const RunManifest& manifest);

std::string dump_json(const nlohmann::json& doc);

}  // namespace phasecert::cli
