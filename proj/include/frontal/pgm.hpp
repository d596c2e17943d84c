#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "frontal/tensor.hpp"

// Binary PGM (P5) with maxval 255, the one image format of the project.
// Pixels map to [-1,1] as v = 2p/255 - 1; writing inverts this with
// round-half-to-even, so a save/load round trip moves no pixel by more
// than 1/255 in normalized units.
//
// Files are written with the fixed header "P5\n<w> <h>\n255\n"; the parser
// accepts any standards-conforming header (whitespace runs and '#'
// comments between fields).

namespace frontal {

namespace detail {

class PgmCursor {
public:
    explicit PgmCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    bool eof() const { return pos_ >= bytes_.size(); }
    std::uint8_t peek() const { return bytes_[pos_]; }
    std::uint8_t take() { return bytes_[pos_++]; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    // Whitespace runs and '#'-to-end-of-line comments between header fields.
    void skip_separators() {
        while (!eof()) {
            const std::uint8_t b = peek();
            if (b == '#') {
                while (!eof() && take() != '\n') {
                }
            } else if (b == ' ' || b == '\t' || b == '\r' || b == '\n' || b == '\v' || b == '\f') {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long parse_uint(const char* field) {
        skip_separators();
        const std::size_t start = pos_;
        if (eof()) {
            throw ParseError(ParseError::Kind::BadHeader, pos_,
                             std::string("pgm: missing ") + field);
        }
        long value = 0;
        std::size_t digits = 0;
        while (!eof() && peek() >= '0' && peek() <= '9') {
            value = value * 10 + (take() - '0');
            if (++digits > 9) {
                throw ParseError(ParseError::Kind::BadHeader, start,
                                 std::string("pgm: ") + field + " out of range");
            }
        }
        if (digits == 0) {
            throw ParseError(ParseError::Kind::BadHeader, start,
                             std::string("pgm: ") + field + " is not a number");
        }
        return value;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

// Parses P5 bytes into a [1,1,H,W] tensor in [-1,1].
inline Tensor parse_pgm(std::span<const std::uint8_t> bytes) {
    detail::PgmCursor cur(bytes);
    if (cur.remaining() < 2 || cur.take() != 'P' || cur.take() != '5') {
        throw ParseError(ParseError::Kind::BadMagic, 0, "pgm: not a binary PGM (P5) file");
    }
    const long width = cur.parse_uint("width");
    const long height = cur.parse_uint("height");
    if (width <= 0 || height <= 0) {
        throw ParseError(ParseError::Kind::BadHeader, cur.offset(),
                         "pgm: width and height must be positive");
    }
    const std::size_t maxval_at = cur.offset();
    const long maxval = cur.parse_uint("maxval");
    if (maxval != 255) {
        throw ParseError(ParseError::Kind::UnsupportedValue, maxval_at,
                         "pgm: unsupported maxval " + std::to_string(maxval) + " (only 255)");
    }
    // Exactly one whitespace byte separates the header from the payload.
    if (cur.eof()) {
        throw ParseError(ParseError::Kind::TruncatedPayload, cur.offset(),
                         "pgm: missing payload");
    }
    const std::uint8_t sep = cur.take();
    if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n') {
        throw ParseError(ParseError::Kind::BadHeader, cur.offset() - 1,
                         "pgm: maxval must be followed by a whitespace byte");
    }
    const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (cur.remaining() < need) {
        throw ParseError(ParseError::Kind::TruncatedPayload, bytes.size(),
                         "pgm: payload has " + std::to_string(cur.remaining()) + " of " +
                             std::to_string(need) + " bytes");
    }
    Tensor img = Tensor::zeros({1, 1, height, width});
    auto v = img.values_mut();
    for (std::size_t i = 0; i < need; ++i) {
        v[i] = 2.0 * static_cast<double>(cur.take()) / 255.0 - 1.0;
    }
    return img;
}

// Encodes a [1,1,H,W] tensor (values in [-1,1]) as P5 bytes.
inline std::vector<std::uint8_t> encode_pgm(const Tensor& image) {
    if (image.shape().size() != 4 || image.shape()[0] != 1 || image.shape()[1] != 1) {
        throw ShapeError("encode_pgm: expected a [1,1,H,W] image, got " + shape_str(image.shape()));
    }
    const std::int64_t h = image.shape()[2], w = image.shape()[3];
    std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + static_cast<std::size_t>(h * w));
    for (double v : image.values()) {
        // round-half-to-even via nearbyint under the default rounding mode
        double q = std::nearbyint((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5);
        out.push_back(static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0)));
    }
    return out;
}

inline Tensor load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("load_pgm: cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse_pgm(bytes);
}

inline void save_pgm(const Tensor& image, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = encode_pgm(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ContractError("save_pgm: cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ContractError("save_pgm: short write to " + path.string());
}

} // namespace frontal
