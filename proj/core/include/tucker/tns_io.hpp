#pragma once

// TNS1 tensor files: one JSON header line, then product(dims) little-endian
// f64 values in storage order (mode 1 fastest).

#include <filesystem>
#include <iosfwd>

#include "tucker/tensor.hpp"

namespace tucker {

void write_tns(std::ostream& out, const DenseTensor& t);
DenseTensor read_tns(std::istream& in);

void write_tns(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_tns(const std::filesystem::path& path);

}  // namespace tucker
