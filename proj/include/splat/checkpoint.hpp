#pragma once

#include <cstdint>
#include <string>

#include "splat/model.hpp"
#include "splat/optim.hpp"

namespace splat {

// Versioned binary snapshot of a run: model, optimizer state, and enough
// identity (config hash, seed, iteration) to refuse a mismatched resume.
struct Checkpoint {
    GaussianModel model;
    OptimizerState opt;
    uint64_t config_hash = 0;
    uint64_t seed = 0;
    int64_t iteration = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Throws ConfigError on missing file, bad magic, or unsupported version.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace splat
