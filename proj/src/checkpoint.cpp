#include "sga/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sga/error.hpp"

namespace sga {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'A', 'C', 'K', 'P', 'T', '\n'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& s, std::size_t& off) {
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off++])) << (8 * i);
  return x;
}

std::uint64_t get_u64(const std::string& s, std::size_t& off) {
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[off++])) << (8 * i);
  return x;
}

// doubles serialized bit-exactly as little-endian u64
void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

double get_f64(const std::string& s, std::size_t& off) {
  std::uint64_t bits = get_u64(s, off);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

const Tensor& Checkpoint::require(const std::string& name) const {
  const Tensor* t = find(name);
  if (!t) throw format_error("checkpoint is missing tensor '" + name + "'");
  return *t;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Json header;
  header["config"] = ckpt.config;
  header["extra"] = ckpt.extra;
  Json tensors = Json::array();
  for (const auto& [name, t] : ckpt.tensors)
    tensors.push_back(Json{{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
  header["tensors"] = tensors;
  std::string hdr = header.dump();

  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_u64(out, hdr.size());
  out += hdr;
  for (const auto& [name, t] : ckpt.tensors)
    for (double d : t.v) put_f64(out, d);

  write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string bytes = read_file(path);
  if (bytes.size() < sizeof kMagic + 12 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw format_error(path + " is not a checkpoint file");
  std::size_t off = sizeof kMagic;
  std::uint32_t version = get_u32(bytes, off);
  if (version != kVersion)
    throw format_error(path + ": unsupported checkpoint version " + std::to_string(version));
  std::uint64_t hdr_len = get_u64(bytes, off);
  if (off + hdr_len > bytes.size()) throw format_error(path + ": truncated checkpoint header");
  Json header = Json::parse(bytes.substr(off, hdr_len), nullptr, false);
  if (header.is_discarded()) throw format_error(path + ": invalid checkpoint header");
  off += hdr_len;

  Checkpoint ckpt;
  ckpt.config = header.value("config", Json::object());
  ckpt.extra = header.value("extra", Json::object());
  for (const auto& tj : header.at("tensors")) {
    Tensor t(tj.at("rows").get<int>(), tj.at("cols").get<int>());
    if (off + t.size() * 8 > bytes.size()) throw format_error(path + ": truncated tensor payload");
    for (double& d : t.v) d = get_f64(bytes, off);
    ckpt.tensors.emplace_back(tj.at("name").get<std::string>(), std::move(t));
  }
  return ckpt;
}

}  // namespace sga
