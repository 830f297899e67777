#pragma once

#include <filesystem>
#include <iosfwd>

#include "fw/params.hpp"

namespace fw {

// "FWWT" weight files, all fields little-endian:
//   magic "FWWT", u32 version (1), u32 tensor count, then per tensor
//   u16 name length, UTF-8 name, u8 trainable, u8 rank, rank x u32 dims,
//   prod(dims) x f32 values.
// Tensors are written in ParamSet (lexicographic) order.
inline constexpr std::uint32_t kWeightsVersion = 1;

void write_weights(std::ostream& out, const ParamSet<float>& params);
ParamSet<float> read_weights(std::istream& in);

// Writes to a temporary sibling and renames, so readers never see a partial file.
void save_weights(const std::filesystem::path& path, const ParamSet<float>& params);
ParamSet<float> load_weights(const std::filesystem::path& path);

// Throws FormatError naming the first tensor (in name order) that is
// missing, unexpected, or differs in shape or trainable flag.
void check_layout(const ParamSet<float>& got, const ParamSet<float>& expected);

}  // namespace fw
