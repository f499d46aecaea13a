#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shampoo4/optimizer.hpp"

namespace shampoo4 {

// binary training snapshot; magic "Q4SH", little-endian integers, quantized
// scale payloads stored as float32 (the live states are kept float32-exact so
// a save/load cycle cannot change the trajectory)
struct Checkpoint {
    uint32_t version = 1;
    uint64_t seed = 0;
    uint32_t step = 0;
    std::vector<ShampooBlockState> blocks;
};

void save_checkpoint(const std::string &path, const Checkpoint &c);
// throws std::runtime_error on I/O failure, bad magic, or unknown version
Checkpoint load_checkpoint(const std::string &path);

}  // namespace shampoo4
