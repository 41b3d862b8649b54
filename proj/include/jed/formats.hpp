#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "jed/mimo_model.hpp"
#include "jed/types.hpp"

namespace jed {

enum class ChannelModelKind : std::uint32_t {
    iid_gaussian = 0,
    kronecker_exponential = 1,
};

/// Model descriptor stored in dataset headers.
struct ChannelModelSpec {
    ChannelModelKind kind = ChannelModelKind::iid_gaussian;
    double rho_rx = 0.0;
    double rho_tx = 0.0;

    ChannelModel build(const SystemDims& dims) const;
};

/// JEDCHAN1 dataset. Layout (little-endian throughout):
///
///   "JEDCHAN1"         8 bytes
///   endian marker      uint32 0x01020304
///   n_rx, n_users      uint32 each
///   count              uint64
///   model kind         uint32 (0 iid, 1 kronecker exponential)
///   rho_rx, rho_tx     float64 each
///   seed               uint64
///   records            count x n_rx x n_users x (Re, Im) float32,
///                      row-major entries
struct ChannelDataset {
    int n_rx = 0;
    int n_users = 0;
    ChannelModelSpec model;
    std::uint64_t seed = 0;
    std::vector<ComplexMatrix> channels;
};

inline constexpr std::size_t kChannelHeaderBytes = 8 + 4 + 4 + 4 + 8 + 4 + 8 + 8 + 8;

std::vector<std::uint8_t> encode_channel_dataset(const ChannelDataset& ds);
ChannelDataset decode_channel_dataset(std::span<const std::uint8_t> bytes);

void write_channel_dataset(const std::filesystem::path& path, const ChannelDataset& ds);
ChannelDataset read_channel_dataset(const std::filesystem::path& path);

/// Draws `count` channels from `spec` with `seed`. count == 0 is a config error.
ChannelDataset generate_channel_dataset(const ChannelModelSpec& spec, int n_rx, int n_users,
                                        std::uint64_t count, std::uint64_t seed);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace jed
