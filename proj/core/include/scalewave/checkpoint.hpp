#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scalewave/tensor.hpp"

namespace scalewave {

// Versioned binary container: magic "SWCK", u32 version, u64 header length,
// JSON header (config echo, named tensor shapes, rng state, metric history),
// then raw little-endian 64-bit payloads in header order. load(save(x))
// reproduces every tensor bitwise.
struct Checkpoint {
    std::uint32_t version = 1;
    std::string config_json;
    std::string rng_state;
    std::string metrics_csv;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace scalewave
