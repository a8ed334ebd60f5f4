#pragma once

#include <filesystem>

#include "rolnn/optim.hpp"
#include "rolnn/rom.hpp"

namespace rolnn::ckpt {

/// Versioned binary container for a trained model plus optimizer state;
/// round-trips bit-exactly for exact resume.
struct Checkpoint {
  enum class ModelKind { Lnn, Rolnn } kind = ModelKind::Lnn;
  lag::LagrangianModel lnn;
  rom::ROLNNModel rolnn;
  int64_t adam_step = 0;
  std::vector<opt::RiemannianAdam::CompState> adam_state;
  std::vector<opt::ParamGroup> groups;
  int epoch = 0;
};

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rolnn::ckpt
