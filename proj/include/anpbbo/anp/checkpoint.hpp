#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "anpbbo/anp/model.hpp"

namespace anpbbo::anp {

// Binary layout, little endian:
//   "ANPBBOW\0" | u32 version | i64 input_dim, hidden, latent, heads | f64 leaky_slope
//   | u64 tensor_count | per tensor: u32 name_len, name, i64 rows, i64 cols, f64[rows*cols]
inline constexpr std::array<char, 8> kCheckpointMagic{'A', 'N', 'P', 'B', 'B', 'O', 'W', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ConfigurationError("checkpoint: truncated file");
    return v;
}

} // namespace detail

inline void save_checkpoint(const AnpModel& model, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigurationError("checkpoint: cannot open '" + path.string() + "' for writing");
    const auto& d = model.dims();
    os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    detail::write_pod(os, kCheckpointVersion);
    detail::write_pod(os, static_cast<std::int64_t>(d.input_dim));
    detail::write_pod(os, static_cast<std::int64_t>(d.hidden));
    detail::write_pod(os, static_cast<std::int64_t>(d.latent));
    detail::write_pod(os, static_cast<std::int64_t>(d.heads));
    detail::write_pod(os, d.leaky_slope);
    const auto& params = model.params();
    detail::write_pod(os, static_cast<std::uint64_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& name = params.name(i);
        const auto& w = params.value(i);
        detail::write_pod(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_pod(os, static_cast<std::int64_t>(w.rows()));
        detail::write_pod(os, static_cast<std::int64_t>(w.cols()));
        os.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
    }
    if (!os) throw ConfigurationError("checkpoint: write failed for '" + path.string() + "'");
}

/// Rebuild a model from a checkpoint. Weights are restored bit-exactly.
inline AnpModel load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigurationError("checkpoint: cannot open '" + path.string() + "'");
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kCheckpointMagic) throw ConfigurationError("checkpoint: bad magic in '" + path.string() + "'");
    const auto version = detail::read_pod<std::uint32_t>(is);
    if (version != kCheckpointVersion)
        throw ConfigurationError("checkpoint: unsupported version " + std::to_string(version));
    AnpDims d;
    d.input_dim = detail::read_pod<std::int64_t>(is);
    d.hidden = detail::read_pod<std::int64_t>(is);
    d.latent = detail::read_pod<std::int64_t>(is);
    d.heads = detail::read_pod<std::int64_t>(is);
    d.leaky_slope = detail::read_pod<double>(is);
    AnpModel model(d, 0);
    auto& params = model.params();
    const auto count = detail::read_pod<std::uint64_t>(is);
    if (count != params.size())
        throw ConfigurationError("checkpoint: expected " + std::to_string(params.size()) + " tensors, found " +
                                 std::to_string(count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto len = detail::read_pod<std::uint32_t>(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        const auto rows = detail::read_pod<std::int64_t>(is);
        const auto cols = detail::read_pod<std::int64_t>(is);
        auto& w = params.value(i);
        if (!is || name != params.name(i) || rows != w.rows() || cols != w.cols())
            throw ConfigurationError("checkpoint: tensor " + std::to_string(i) + " ('" + name +
                                     "') does not match the architecture");
        is.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
        if (!is) throw ConfigurationError("checkpoint: truncated tensor '" + name + "'");
    }
    return model;
}

} // namespace anpbbo::anp
