#pragma once

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "reconlab/tensor.hpp"

namespace reconlab {

// RCT1 container: magic "RCTNSR1\0", u8 dtype (0 real32, 1 complex64),
// u8 ndim, ndim x u32 LE sizes, little-endian payload.
enum class DType : std::uint8_t { Real32 = 0, Complex64 = 1 };

using AnyTensor = std::variant<Tensor<float>, Tensor<cfloat>>;

void write_tensor(std::ostream &out, const Tensor<float> &t);
void write_tensor(std::ostream &out, const Tensor<cfloat> &t);
AnyTensor read_tensor(std::istream &in);

void save_tensor(const std::filesystem::path &path, const Tensor<float> &t);
void save_tensor(const std::filesystem::path &path, const Tensor<cfloat> &t);
AnyTensor load_tensor(const std::filesystem::path &path);

Tensor<float> load_real(const std::filesystem::path &path);
Tensor<cfloat> load_complex(const std::filesystem::path &path);

void save_cine(const std::filesystem::path &path, const Cine &cine);
Cine load_cine(const std::filesystem::path &path, double frame_dt_ms = 0.0);

} // namespace reconlab
