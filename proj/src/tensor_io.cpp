#include "lff/tensor_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace lff {

namespace {

void push_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t pull_u64(const std::vector<unsigned char>& in, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
    return v;
}

}  // namespace

std::vector<unsigned char> encode_tensor(const Tensor& t) {
    std::vector<unsigned char> out;
    out.reserve(16 + t.data.size() * 8);
    out.push_back('T');
    out.push_back('N');
    out.push_back('S');
    out.push_back('R');
    out.push_back(1);
    out.push_back(static_cast<unsigned char>(t.dtype));
    out.push_back(static_cast<unsigned char>(t.shape.size()));
    for (std::int64_t d : t.shape) push_u64(out, static_cast<std::uint64_t>(d));
    if (t.dtype == Dtype::f64) {
        for (double v : t.data) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            push_u64(out, bits);
        }
    } else {
        for (double v : t.data) {
            float f = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            for (int i = 0; i < 4; ++i)
                out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xFF));
        }
    }
    return out;
}

Tensor decode_tensor(const std::vector<unsigned char>& bytes) {
    static const unsigned char magic[4] = {'T', 'N', 'S', 'R'};
    for (std::size_t i = 0; i < 4; ++i) {
        if (i >= bytes.size() || bytes[i] != magic[i]) {
            throw FormatError("tensor file: bad magic", i);
        }
    }
    if (bytes.size() < 5) throw FormatError("tensor file: missing version byte", 4);
    if (bytes[4] != 1) throw FormatError("tensor file: unsupported version", 4);
    if (bytes.size() < 6) throw FormatError("tensor file: missing dtype byte", 5);
    if (bytes[5] > 1) throw FormatError("tensor file: unknown dtype", 5);
    Dtype dt = static_cast<Dtype>(bytes[5]);
    if (bytes.size() < 7) throw FormatError("tensor file: missing rank byte", 6);
    std::size_t rank = bytes[6];

    std::size_t at = 7;
    std::vector<std::int64_t> shape;
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < rank; ++i, at += 8) {
        if (at + 8 > bytes.size()) throw FormatError("tensor file: truncated dimension list", at);
        std::uint64_t d = pull_u64(bytes, at);
        shape.push_back(static_cast<std::int64_t>(d));
        count *= d;
    }

    const std::size_t unit = dt == Dtype::f64 ? 8 : 4;
    Tensor t = Tensor::zeros(shape, dt);
    for (std::uint64_t i = 0; i < count; ++i, at += unit) {
        if (at + unit > bytes.size()) throw FormatError("tensor file: truncated payload", at);
        if (dt == Dtype::f64) {
            std::uint64_t bits = pull_u64(bytes, at);
            double v;
            std::memcpy(&v, &bits, 8);
            t.data[i] = v;
        } else {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b)
                bits |= static_cast<std::uint32_t>(bytes[at + b]) << (8 * b);
            float f;
            std::memcpy(&f, &bits, 4);
            t.data[i] = static_cast<double>(f);
        }
    }
    return t;
}

void write_tensor(const std::string& path, const Tensor& t) {
    std::vector<unsigned char> bytes = encode_tensor(t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("write_tensor: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write_tensor: short write to " + path);
}

Tensor read_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_tensor: cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return decode_tensor(bytes);
}

void write_frame_image(const std::string& path, const Tensor& frame) {
    if (frame.rank() != 3) {
        throw ValidationError("write_frame_image: expected [C, H, W], got " + frame.shape_str());
    }
    const std::int64_t c = frame.shape[0];
    const std::int64_t h = frame.shape[1];
    const std::int64_t w = frame.shape[2];
    if (c != 1 && c != 3) {
        throw ValidationError("write_frame_image: unsupported channel count " +
                              std::to_string(c));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("write_frame_image: cannot open " + path);
    out << (c == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(w * c));
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (std::int64_t ch = 0; ch < c; ++ch) {
                double v = frame.data[static_cast<std::size_t>((ch * h + y) * w + x)];
                v = std::min(1.0, std::max(0.0, v));
                row[static_cast<std::size_t>(x * c + ch)] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw Error("write_frame_image: short write to " + path);
}

}  // namespace lff
