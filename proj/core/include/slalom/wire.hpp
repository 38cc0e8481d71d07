#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slalom/field.hpp"

namespace slalom {

// Boundary element encoding: 4-byte little-endian two's-complement centered
// residues.
constexpr int64_t kWireElemBytes = 4;

std::vector<uint8_t> encode_elems(std::span<const double> values);
std::vector<double> decode_elems(std::span<const uint8_t> bytes);

std::string sha256_hex(std::span<const uint8_t> bytes);

}  // namespace slalom
