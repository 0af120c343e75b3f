#pragma once

#include <string>
#include <vector>

#include "sga/io.hpp"
#include "sga/tensor.hpp"

namespace sga {

// Versioned binary container: magic + version, a JSON header echoing config
// and listing tensor names/shapes, then row-major little-endian f64 payloads
// in header order.
struct Checkpoint {
  Json config = Json::object();
  Json extra = Json::object();  // free-form sidecar (e.g. cluster assignments)
  std::vector<std::pair<std::string, Tensor>> tensors;

  void add(const std::string& name, const Tensor& t) { tensors.emplace_back(name, t); }
  const Tensor* find(const std::string& name) const;
  const Tensor& require(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sga
