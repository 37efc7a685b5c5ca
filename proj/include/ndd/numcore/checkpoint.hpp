#pragma once

#include <filesystem>
#include <iosfwd>

#include "ndd/numcore/dense_net.hpp"

namespace ndd::numcore {

// Binary layout, all integers and floats little-endian:
//   char[8]   magic "NDDNET01"
//   u64       seed
//   u32       layer count L
//   u32       reserved (0)
//   u64[L+1]  layer sizes
//   u8[L]     activation codes, zero-padded to a multiple of 8 bytes
//   f64[...]  per layer: weights row-major (out x in), then bias
void write_checkpoint(std::ostream& out, const DenseNet& net);
DenseNet read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const DenseNet& net);
DenseNet load_checkpoint(const std::filesystem::path& path);

}  // namespace ndd::numcore
