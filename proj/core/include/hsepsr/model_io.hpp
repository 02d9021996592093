#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "hsepsr/model.hpp"

namespace hsepsr {

inline constexpr char kModelMagic[] = "HSEPSR";
inline constexpr std::uint32_t kModelFormatVersion = 1;

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layout: 6 magic bytes, uint32 format version, uint64 header length, a JSON
/// header (dimensions, lambda, kernels, transform, training report and an
/// array directory), then every listed array as little-endian doubles in
/// column-major order. The conditioning tensors are not stored; a loaded model
/// rebuilds them on first use.
void save_model(const HsePsrModel& model, const std::filesystem::path& path);
HsePsrModel load_model(const std::filesystem::path& path);

/// The header alone, pretty-printed.
std::string describe_model_file(const std::filesystem::path& path);

}  // namespace hsepsr
