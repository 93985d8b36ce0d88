#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "qrul/model.hpp"

namespace qrul::train {

// Parameter checkpoint: JSON with model kind, config, seed, config hash, and
// every named tensor (shape + values, full precision).
void save_checkpoint(const std::string& path, model::SequenceModel& m, std::uint64_t seed,
                     const std::string& config_hash);

struct LoadedCheckpoint {
  std::unique_ptr<model::SequenceModel> model;
  std::uint64_t seed = 0;
  std::string config_hash;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace qrul::train
