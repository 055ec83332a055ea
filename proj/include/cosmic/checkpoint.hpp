#pragma once

#include <filesystem>
#include <string>

#include "cosmic/config.hpp"
#include "cosmic/model.hpp"

namespace cosmic {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  Config config;
  model::ModelParams params;
};

/// Binary layout, all integers little-endian:
///   "CSMC" | u32 version | u32 config length | config text |
///   u32 tensor count | per tensor: u32 name length, name, u32 rows, u32 cols,
///   rows*cols float32 in row-major order.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cosmic
