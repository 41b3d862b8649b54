#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "jed/types.hpp"

namespace jed {

enum class Activation : std::uint32_t {
    identity = 0,
    tanh = 1,
    softplus = 2,
    silu = 3,
};

/// How the noise level enters the network as its last input feature.
enum class SigmaEncoding : std::uint32_t {
    raw = 0,  // sigma
    log = 1,  // ln(sigma), sigma clamped to >= 1e-12
};

struct DenseLayer {
    int in_dim = 0;
    int out_dim = 0;
    Activation activation = Activation::identity;
    std::vector<float> weights;  // out_dim x in_dim, row-major
    std::vector<float> biases;   // out_dim
};

/// Feed-forward score network s(H, sigma) for the learned channel prior.
///
/// Input: the N_r x N_u channel flattened row-major and real-stacked as
/// interleaved (Re, Im) pairs, each scaled by input_scale, followed by one
/// sigma feature. Output: 2 N_r N_u values in the same layout, multiplied by
/// output_scale, read back as the channel score.
struct ScoreModelWeights {
    std::vector<DenseLayer> layers;
    SigmaEncoding sigma_encoding = SigmaEncoding::log;
    float input_scale = 1.0f;
    float output_scale = 1.0f;

    int input_dim() const noexcept { return layers.empty() ? 0 : layers.front().in_dim; }
    int output_dim() const noexcept { return layers.empty() ? 0 : layers.back().out_dim; }

    /// Throws a config error when consecutive dims do not chain, a block has
    /// the wrong size, any parameter is non-finite, or input_dim != output_dim + 1.
    void validate() const;

    /// Runs the network on one input vector (size input_dim()).
    RealVector evaluate(std::span<const double> input) const;
};

/// JEDSCORE1 serialization. Layout (all integers little-endian uint32, all
/// reals little-endian IEEE-754 float32):
///
///   "JEDSCORE1"            9 bytes, no terminator
///   endian marker          0x01020304
///   layer count n
///   n x (in_dim, out_dim, activation id)
///   sigma encoding id
///   input_scale, output_scale   (float32)
///   parameter region       per layer: weights row-major, then biases
///   CRC-32 (IEEE, zlib)    of the parameter region bytes
///
/// Nothing may follow the CRC.
std::vector<std::uint8_t> encode_score_model(const ScoreModelWeights& w);
ScoreModelWeights decode_score_model(std::span<const std::uint8_t> bytes);

void write_score_model(const std::filesystem::path& path, const ScoreModelWeights& w);
ScoreModelWeights read_score_model(const std::filesystem::path& path);

}  // namespace jed
