#include "jed/formats.hpp"

#include <fstream>
#include <iterator>

#include "byte_io.hpp"
#include "jed/error.hpp"

namespace jed {

namespace {
constexpr std::string_view kMagic = "JEDCHAN1";
}

ChannelModel ChannelModelSpec::build(const SystemDims& dims) const {
    switch (kind) {
        case ChannelModelKind::iid_gaussian:
            return ChannelModel::iid_gaussian();
        case ChannelModelKind::kronecker_exponential:
            return ChannelModel::kronecker(exponential_correlation(dims.n_rx, rho_rx),
                                           exponential_correlation(dims.n_users, rho_tx));
    }
    throw Error(ErrorCategory::config, "unknown channel model kind");
}

std::vector<std::uint8_t> encode_channel_dataset(const ChannelDataset& ds) {
    detail::ByteWriter out;
    out.bytes(kMagic);
    out.u32(detail::kEndianMarker);
    out.u32(static_cast<std::uint32_t>(ds.n_rx));
    out.u32(static_cast<std::uint32_t>(ds.n_users));
    out.u64(ds.channels.size());
    out.u32(static_cast<std::uint32_t>(ds.model.kind));
    out.f64(ds.model.rho_rx);
    out.f64(ds.model.rho_tx);
    out.u64(ds.seed);
    out.buffer().reserve(out.size() + ds.channels.size() * ds.n_rx * ds.n_users * 8);
    for (const auto& h : ds.channels) {
        if (h.rows() != ds.n_rx || h.cols() != ds.n_users) {
            throw Error(ErrorCategory::shape, "dataset record does not match header dims");
        }
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
            for (Eigen::Index j = 0; j < h.cols(); ++j) {
                out.f32(static_cast<float>(h(i, j).real()));
                out.f32(static_cast<float>(h(i, j).imag()));
            }
        }
    }
    return std::move(out.buffer());
}

ChannelDataset decode_channel_dataset(std::span<const std::uint8_t> bytes) {
    detail::ByteReader in(bytes);
    in.expect_magic(kMagic);
    if (in.u32("endian marker") != detail::kEndianMarker) {
        throw FormatError(8, "unexpected endianness marker");
    }
    ChannelDataset ds;
    const std::size_t dims_at = in.offset();
    const std::uint32_t n_rx = in.u32("n_rx");
    const std::uint32_t n_users = in.u32("n_users");
    if (n_rx == 0 || n_users == 0 || n_rx > 4096 || n_users > 4096) {
        throw FormatError(dims_at, "invalid channel dims");
    }
    ds.n_rx = static_cast<int>(n_rx);
    ds.n_users = static_cast<int>(n_users);
    const std::uint64_t count = in.u64("record count");
    const std::size_t kind_at = in.offset();
    const std::uint32_t kind = in.u32("model kind");
    if (kind > static_cast<std::uint32_t>(ChannelModelKind::kronecker_exponential)) {
        throw FormatError(kind_at, "unknown model kind " + std::to_string(kind));
    }
    ds.model.kind = static_cast<ChannelModelKind>(kind);
    ds.model.rho_rx = in.f64("rho_rx");
    ds.model.rho_tx = in.f64("rho_tx");
    ds.seed = in.u64("seed");

    const std::uint64_t record_bytes = static_cast<std::uint64_t>(n_rx) * n_users * 8;
    if (in.remaining() / record_bytes < count || in.remaining() != count * record_bytes) {
        throw FormatError(in.offset(), "record region size does not match count " + std::to_string(count));
    }
    ds.channels.reserve(count);
    for (std::uint64_t r = 0; r < count; ++r) {
        ComplexMatrix h(ds.n_rx, ds.n_users);
        for (int i = 0; i < ds.n_rx; ++i) {
            for (int j = 0; j < ds.n_users; ++j) {
                const float re = in.f32("record");
                const float im = in.f32("record");
                h(i, j) = {re, im};
            }
        }
        ds.channels.push_back(std::move(h));
    }
    return ds;
}

void write_channel_dataset(const std::filesystem::path& path, const ChannelDataset& ds) {
    write_file_bytes(path, encode_channel_dataset(ds));
}

ChannelDataset read_channel_dataset(const std::filesystem::path& path) {
    return decode_channel_dataset(read_file_bytes(path));
}

ChannelDataset generate_channel_dataset(const ChannelModelSpec& spec, int n_rx, int n_users,
                                        std::uint64_t count, std::uint64_t seed) {
    if (count == 0) {
        throw Error(ErrorCategory::config, "gen-channels: count must be >= 1");
    }
    const SystemDims dims{n_rx, n_users, 1, 0};
    dims.validate();
    const ChannelModel model = spec.build(dims);

    ChannelDataset ds;
    ds.n_rx = n_rx;
    ds.n_users = n_users;
    ds.model = spec;
    ds.seed = seed;
    ds.channels.reserve(count);
    Rng rng(seed);
    for (std::uint64_t r = 0; r < count; ++r) {
        ds.channels.push_back(sample_channel(model, dims, rng));
    }
    // Return what the file holds. Going through the codec also sidesteps a GCC 11
    // -O3 miscompile of a plain double->float->double rounding loop, which left
    // the last element of odd-sized blocks unrounded.
    return decode_channel_dataset(encode_channel_dataset(ds));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open " + path.string() + " for reading");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCategory::io, "write to " + path.string() + " failed");
    }
}

}  // namespace jed
