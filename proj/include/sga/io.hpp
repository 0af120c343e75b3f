#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace sga {

using Json = nlohmann::json;

// ---- line-delimited files ----

// Calls fn(line_number, parsed) for every non-blank line. Throws format_error
// with file:line on bad JSON.
void read_jsonl(const std::string& path, const std::function<void(std::size_t, const Json&)>& fn);

std::vector<Json> read_jsonl(const std::string& path);

void write_jsonl(const std::string& path, const std::vector<Json>& records);

// Tab-separated rows; skips blank lines and lines starting with '#'.
std::vector<std::vector<std::string>> read_tsv(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);

// FNV-1a over file bytes, hex-encoded. Audit digest, not cryptographic.
std::string file_digest(const std::string& path);

// ---- run manifests ----

inline constexpr const char* kToolVersion = "sga 0.1.0";

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  Json config = Json::object();
  std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs;  // path, digest

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  // Writes manifest.<command>.json into dir.
  void write(const std::string& dir) const;
};

// Requires `path` to exist; error names the missing artifact and the command
// that produces it.
void require_artifact(const std::string& path, const std::string& produced_by);

// If dir holds a manifest for `command`, re-digest its outputs and fail on
// drift. Silently passes when no manifest is present.
void check_manifest_outputs(const std::string& dir, const std::string& command);

}  // namespace sga
