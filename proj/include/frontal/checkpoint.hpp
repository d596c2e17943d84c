#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "frontal/models.hpp"

// Checkpoint file, little-endian throughout:
//
//   magic   "FRNTLZ01"                      8 bytes
//   u32     latent_dim, base_size, stages, channels
//   f64     k (equilibrium control at save time)
//   u32     parameter block count
//   blocks  u32 name length, name bytes, u32 ndim, u32 extents...,
//           f64 values... (row-major)
//
// Blocks appear in params() order, generator first. save -> load -> save
// reproduces the file byte for byte.

namespace frontal {

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

constexpr char kCheckpointMagic[8] = {'F', 'R', 'N', 'T', 'L', 'Z', '0', '1'};

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    const std::size_t at = out.size();
    out.resize(at + 4);
    std::memcpy(out.data() + at, &v, 4);
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    const std::size_t at = out.size();
    out.resize(at + 8);
    std::memcpy(out.data() + at, &v, 8);
}

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw ParseError(ParseError::Kind::TruncatedPayload, bytes_.size(),
                             std::string("checkpoint: truncated while reading ") + what);
        }
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v;
        std::memcpy(&v, bytes_.data() + pos_, 4);
        pos_ += 4;
        return v;
    }

    double f64(const char* what) {
        need(8, what);
        double v;
        std::memcpy(&v, bytes_.data() + pos_, 8);
        pos_ += 8;
        return v;
    }

    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void f64_into(double* dst, std::size_t n, const char* what) {
        need(n * 8, what);
        std::memcpy(dst, bytes_.data() + pos_, n * 8);
        pos_ += n * 8;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

inline void append_params(std::vector<std::uint8_t>& out, const NamedParams& params) {
    for (const auto& [name, tensor] : params) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, static_cast<std::uint32_t>(tensor.shape().size()));
        for (std::int64_t e : tensor.shape()) put_u32(out, static_cast<std::uint32_t>(e));
        const std::size_t at = out.size();
        out.resize(at + tensor.values().size() * 8);
        std::memcpy(out.data() + at, tensor.values().data(), tensor.values().size() * 8);
    }
}

} // namespace detail

struct Checkpoint {
    ModelConfig config;
    double k = 0.0;
    Generator generator;
    Discriminator discriminator;
};

inline std::vector<std::uint8_t> encode_checkpoint(const Generator& g, const Discriminator& d,
                                                   double k) {
    if (!(g.config() == d.config())) {
        throw ContractError("checkpoint: generator and discriminator configs differ");
    }
    const ModelConfig& cfg = g.config();
    std::vector<std::uint8_t> out(std::begin(detail::kCheckpointMagic),
                                  std::end(detail::kCheckpointMagic));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.latent_dim));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.base_size));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.stages));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.channels));
    detail::put_f64(out, k);
    const NamedParams gp = g.params();
    const NamedParams dp = d.params();
    detail::put_u32(out, static_cast<std::uint32_t>(gp.size() + dp.size()));
    detail::append_params(out, gp);
    detail::append_params(out, dp);
    return out;
}

inline Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 ||
        std::memcmp(bytes.data(), detail::kCheckpointMagic, 8) != 0) {
        throw ParseError(ParseError::Kind::BadMagic, 0, "checkpoint: bad magic");
    }
    detail::ByteReader r(bytes);
    r.str(8, "magic");

    Checkpoint ck;
    ck.config.latent_dim = static_cast<int>(r.u32("latent_dim"));
    ck.config.base_size = static_cast<int>(r.u32("base_size"));
    ck.config.stages = static_cast<int>(r.u32("stages"));
    ck.config.channels = static_cast<int>(r.u32("channels"));
    try {
        ck.config.validate();
    } catch (const ContractError& e) {
        throw ParseError(ParseError::Kind::BadHeader, r.offset(),
                         std::string("checkpoint: invalid config: ") + e.what());
    }
    ck.k = r.f64("k");

    ck.generator = Generator(ck.config, 0);
    ck.discriminator = Discriminator(ck.config, 0);
    std::map<std::string, Tensor> by_name;
    for (auto& [name, t] : ck.generator.params()) by_name.emplace(name, t);
    for (auto& [name, t] : ck.discriminator.params()) by_name.emplace(name, t);

    const std::uint32_t count = r.u32("parameter count");
    if (count != by_name.size()) {
        throw ParseError(ParseError::Kind::BadHeader, r.offset(),
                         "checkpoint: expected " + std::to_string(by_name.size()) +
                             " parameter blocks, file has " + std::to_string(count));
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32("name length");
        const std::size_t name_at = r.offset();
        const std::string name = r.str(name_len, "name");
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw ParseError(ParseError::Kind::BadHeader, name_at,
                             "checkpoint: unknown parameter '" + name + "'");
        }
        const std::uint32_t ndim = r.u32("ndim");
        Shape shape;
        for (std::uint32_t dd = 0; dd < ndim; ++dd) {
            shape.push_back(static_cast<std::int64_t>(r.u32("extent")));
        }
        if (shape != it->second.shape()) {
            throw ParseError(ParseError::Kind::BadHeader, r.offset(),
                             "checkpoint: parameter '" + name + "' has shape " +
                                 shape_str(shape) + ", expected " +
                                 shape_str(it->second.shape()));
        }
        r.f64_into(it->second.values_mut().data(), it->second.values().size(), name.c_str());
    }
    if (!r.done()) {
        throw ParseError(ParseError::Kind::BadHeader, r.offset(),
                         "checkpoint: trailing bytes after last parameter block");
    }
    return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Generator& g,
                            const Discriminator& d, double k) {
    const auto bytes = encode_checkpoint(g, d, k);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ContractError("save_checkpoint: cannot open " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ContractError("save_checkpoint: short write to " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("load_checkpoint: cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

} // namespace frontal
