#pragma once

#include <span>
#include <string>
#include <vector>

#include "secu/trainer.hpp"

namespace secu {

// Binary container, little-endian throughout:
//   "SECU"  u32 version  u32 layer_count  u32 dims[layer_count + 1]
//   f64 parameters per layer in order (weight row-major, then bias)
//   f64 momentum buffers in the same order
//   u32 head_count, then per head: u32 K, u32 d, f64 centers row-major
// Assignment state is not stored; loaded heads carry an empty state.
std::vector<unsigned char> serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(std::span<const unsigned char> bytes);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace secu
