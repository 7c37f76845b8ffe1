#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "tthjb/tensor_train.hpp"

namespace tthjb {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary "TTCK" layout, all little-endian: magic, u32 version, u32 d, u32 mode sizes,
/// u32 ranks (d+1), f64 cores row-major, f64 time.
void write_checkpoint(std::ostream& os, const TensorTrain& a, double t);
void write_checkpoint(const std::filesystem::path& path, const TensorTrain& a, double t);

struct Checkpoint {
    TensorTrain coeffs;
    double t = 0.0;
};

Checkpoint read_checkpoint(std::istream& is);
Checkpoint read_checkpoint(const std::filesystem::path& path);

} // namespace tthjb
