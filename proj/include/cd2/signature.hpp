#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cd2/features.hpp"

namespace cd2::features {

// Wire layout (all multi-byte integers big-endian):
//   0..3   magic "CD2S"
//   4      format version
//   5      binning scheme id
//   6..9   image width
//   10..13 image height
//   14     grid rows M
//   15     grid cols N
//   16..   M*N*32 bin counts, ceil(log2(width*height)) bits each, MSB first,
//          patches row-major, histX before histY within a patch, zero-padded
//          to a whole byte.

inline constexpr std::uint8_t kSignatureVersion = 1;
inline constexpr std::size_t kSignatureHeaderSize = 16;
inline constexpr std::uint8_t kSignatureMagic[4] = {'C', 'D', '2', 'S'};

/// Width of one bin field. ceil(log2(s)) for s pixels; the single case where
/// that cannot hold a count (1x1 grid on a power-of-two pixel count) gets one
/// extra bit.
int signature_bin_bits(std::uint64_t pixels, int patch_count);

std::uint64_t signature_payload_bits(const FeatureSet& fs);

bool has_signature_magic(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_signature(const FeatureSet& fs);
FeatureSet decode_signature(std::span<const std::uint8_t> bytes);

}  // namespace cd2::features
