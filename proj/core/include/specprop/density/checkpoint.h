#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "specprop/density/model.h"

namespace specprop::density {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCheckpointMagic = "SPECPROP-CKPT";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::unique_ptr<Model> model;
  // Free-form string attributes (energy, epoch, ...).
  std::map<std::string, std::string> attributes;
};

// Text header followed by raw little-endian float64 tensor data; the
// layout is described in docs/formats.md.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const std::map<std::string, std::string>& attributes = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace specprop::density
