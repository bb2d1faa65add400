#pragma once

#include <string>
#include <vector>

#include "lff/tensor.hpp"

namespace lff {

// Binary tensor container. Layout, all little-endian:
//   bytes 0-3   magic "TNSR"
//   byte  4     version (currently 1)
//   byte  5     dtype: 0 = f32, 1 = f64
//   byte  6     rank
//   then        rank x u64 dimension sizes
//   then        row-major payload, 4 or 8 bytes per scalar
// Round trips are bit-exact for the stored dtype.
void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

// In-memory codec used by the file functions (and by tests that build
// deliberately broken byte streams).
std::vector<unsigned char> encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::vector<unsigned char>& bytes);

// 8-bit binary PGM (1 channel) or PPM (3 channels) from a [C, H, W] frame.
// Values are clamped to [0, 1] and quantized as round(v * 255), half up.
void write_frame_image(const std::string& path, const Tensor& frame);

}  // namespace lff
