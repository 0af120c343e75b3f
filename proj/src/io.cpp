#include "sga/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sga/error.hpp"
#include "sga/rng.hpp"

namespace fs = std::filesystem;

namespace sga {

void read_jsonl(const std::string& path, const std::function<void(std::size_t, const Json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw missing_input("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw format_error(path + ":" + std::to_string(lineno) + ": invalid JSON");
    fn(lineno, j);
  }
}

std::vector<Json> read_jsonl(const std::string& path) {
  std::vector<Json> out;
  read_jsonl(path, [&](std::size_t, const Json& j) { out.push_back(j); });
  return out;
}

void write_jsonl(const std::string& path, const std::vector<Json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path);
  for (const auto& r : records) out << r.dump() << "\n";
}

std::vector<std::vector<std::string>> read_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw missing_input("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> row;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        row.push_back(line.substr(start));
        break;
      }
      row.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw missing_input("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path);
  out << content;
}

bool file_exists(const std::string& path) { return fs::exists(path); }

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw Error("io", "cannot create directory " + path + ": " + ec.message());
}

std::string file_digest(const std::string& path) {
  std::string bytes = read_file(path);
  std::uint64_t h = fnv1a(bytes.data(), bytes.size());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void Manifest::add_input(const std::string& path) { inputs.emplace_back(path, file_digest(path)); }

void Manifest::add_output(const std::string& path) { outputs.emplace_back(path, file_digest(path)); }

void Manifest::write(const std::string& dir) const {
  Json j;
  j["command"] = command;
  j["tool_version"] = kToolVersion;
  j["seed"] = seed;
  j["config"] = config;
  auto files = [](const std::vector<std::pair<std::string, std::string>>& v) {
    Json arr = Json::array();
    for (const auto& [p, d] : v) arr.push_back(Json{{"path", p}, {"digest", d}});
    return arr;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  write_file(dir + "/manifest." + command + ".json", j.dump(2) + "\n");
}

void require_artifact(const std::string& path, const std::string& produced_by) {
  if (!file_exists(path))
    throw missing_input(path + " not found; run `sga " + produced_by + "` first");
}

void check_manifest_outputs(const std::string& dir, const std::string& command) {
  std::string mpath = dir + "/manifest." + command + ".json";
  if (!file_exists(mpath)) return;
  Json m = Json::parse(read_file(mpath));
  for (const auto& f : m.at("outputs")) {
    std::string path = f.at("path").get<std::string>();
    if (!file_exists(path)) throw stale_artifact(path + " listed in " + mpath + " is missing");
    std::string d = file_digest(path);
    if (d != f.at("digest").get<std::string>())
      throw stale_artifact(path + " changed since `sga " + command + "` ran (digest mismatch)");
  }
}

}  // namespace sga
