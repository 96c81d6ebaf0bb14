#include "reconlab/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace reconlab {

namespace {

constexpr std::array<char, 8> kMagic = {'R', 'C', 'T', 'N', 'S', 'R', '1', '\0'};
// 4 GiB payload cap; anything larger is treated as a corrupt header.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 30;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put_u32(std::ostream &out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char *>(b), 4);
}

std::uint32_t get_u32(std::istream &in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char *>(b), 4)) {
    throw FormatError("truncated tensor header");
  }
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

void write_header(std::ostream &out, DType dtype, const std::vector<std::size_t> &shape) {
  if (shape.size() > 255) {
    throw FormatError("tensor has too many dimensions for RCT1");
  }
  out.write(kMagic.data(), kMagic.size());
  out.put(static_cast<char>(dtype));
  out.put(static_cast<char>(shape.size()));
  for (auto d : shape) {
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError("tensor dimension overflows u32");
    }
    put_u32(out, static_cast<std::uint32_t>(d));
  }
}

void write_floats(std::ostream &out, const float *p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char *>(p), static_cast<std::streamsize>(n * sizeof(float)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      put_u32(out, std::bit_cast<std::uint32_t>(p[i]));
    }
  }
}

void read_floats(std::istream &in, float *p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char *>(p), static_cast<std::streamsize>(n * sizeof(float)))) {
      throw FormatError("truncated tensor payload");
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = std::bit_cast<float>(get_u32(in));
    }
  }
}

template <typename T>
void save_to(const std::filesystem::path &path, const Tensor<T> &t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  write_tensor(out, t);
  out.flush();
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

} // namespace

void write_tensor(std::ostream &out, const Tensor<float> &t) {
  write_header(out, DType::Real32, t.shape());
  write_floats(out, t.data(), t.size());
}

void write_tensor(std::ostream &out, const Tensor<cfloat> &t) {
  write_header(out, DType::Complex64, t.shape());
  static_assert(sizeof(cfloat) == 2 * sizeof(float));
  write_floats(out, reinterpret_cast<const float *>(t.data()), 2 * t.size());
}

AnyTensor read_tensor(std::istream &in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size())) {
    throw FormatError("truncated tensor header");
  }
  if (magic != kMagic) {
    throw FormatError("bad tensor magic (expected RCTNSR1)");
  }
  const int dtype = in.get();
  const int ndim = in.get();
  if (dtype == EOF || ndim == EOF) {
    throw FormatError("truncated tensor header");
  }
  if (dtype != 0 && dtype != 1) {
    throw FormatError("unknown tensor dtype code " + std::to_string(dtype));
  }
  std::vector<std::size_t> shape(static_cast<std::size_t>(ndim));
  std::uint64_t count = 1;
  for (auto &d : shape) {
    d = get_u32(in);
    count *= d;
    if (count > kMaxElements) {
      throw FormatError("tensor dimensions overflow element limit");
    }
  }
  if (dtype == 0) {
    Tensor<float> t(shape);
    read_floats(in, t.data(), t.size());
    return t;
  }
  Tensor<cfloat> t(shape);
  read_floats(in, reinterpret_cast<float *>(t.data()), 2 * t.size());
  return t;
}

void save_tensor(const std::filesystem::path &path, const Tensor<float> &t) { save_to(path, t); }
void save_tensor(const std::filesystem::path &path, const Tensor<cfloat> &t) { save_to(path, t); }

AnyTensor load_tensor(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return read_tensor(in);
}

Tensor<float> load_real(const std::filesystem::path &path) {
  auto any = load_tensor(path);
  if (auto *t = std::get_if<Tensor<float>>(&any)) {
    return std::move(*t);
  }
  throw FormatError(path.string() + ": expected real32 tensor");
}

Tensor<cfloat> load_complex(const std::filesystem::path &path) {
  auto any = load_tensor(path);
  if (auto *t = std::get_if<Tensor<cfloat>>(&any)) {
    return std::move(*t);
  }
  throw FormatError(path.string() + ": expected complex64 tensor");
}

void save_cine(const std::filesystem::path &path, const Cine &cine) {
  save_tensor(path, cine.to_tensor());
}

Cine load_cine(const std::filesystem::path &path, double frame_dt_ms) {
  return Cine::from_tensor(load_real(path), frame_dt_ms);
}

} // namespace reconlab
