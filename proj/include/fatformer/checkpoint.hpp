#pragma once

// Binary checkpoint container: magic "FTFC", version u16, tensor count u32,
// then per tensor a u16-length UTF-8 name, u8 rank, u32 dims and
// little-endian IEEE-754 32-bit data, with a trailing CRC32 of everything
// before it. Corruption (magic, version, CRC, truncation) raises IoError
// with the byte offset.

#include <cstdint>
#include <string>
#include <vector>

#include "fatformer/errors.hpp"

namespace ftf {

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;
};

uint32_t crc32(const unsigned char* data, size_t len, uint32_t seed = 0);

void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensor_file(const std::string& path);

}  // namespace ftf
