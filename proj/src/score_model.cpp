#include "jed/score_model.hpp"

#include <cmath>
#include <fstream>

#include <zlib.h>

#include "byte_io.hpp"
#include "jed/error.hpp"
#include "jed/formats.hpp"

namespace jed {

namespace {

constexpr std::string_view kMagic = "JEDSCORE1";
constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxDim = 1u << 20;

double activate(Activation a, double v) {
    switch (a) {
        case Activation::identity: return v;
        case Activation::tanh: return std::tanh(v);
        case Activation::softplus: return v > 30.0 ? v : std::log1p(std::exp(v));
        case Activation::silu: return v / (1.0 + std::exp(-v));
    }
    return v;
}

bool valid_activation(std::uint32_t id) { return id <= static_cast<std::uint32_t>(Activation::silu); }

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

void ScoreModelWeights::validate() const {
    if (layers.empty()) {
        throw Error(ErrorCategory::config, "score network has no layers");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string where = "layer " + std::to_string(i);
        if (l.in_dim <= 0 || l.out_dim <= 0) {
            throw Error(ErrorCategory::config, where + " has non-positive dims");
        }
        if (i > 0 && layers[i - 1].out_dim != l.in_dim) {
            throw Error(ErrorCategory::config, where + " input dim does not match previous output dim");
        }
        if (l.weights.size() != static_cast<std::size_t>(l.in_dim) * l.out_dim ||
            l.biases.size() != static_cast<std::size_t>(l.out_dim)) {
            throw Error(ErrorCategory::config, where + " parameter block has the wrong size");
        }
        for (float v : l.weights) {
            if (!std::isfinite(v)) throw Error(ErrorCategory::config, where + " has non-finite weights");
        }
        for (float v : l.biases) {
            if (!std::isfinite(v)) throw Error(ErrorCategory::config, where + " has non-finite biases");
        }
    }
    if (input_dim() != output_dim() + 1) {
        throw Error(ErrorCategory::config, "score network must map 2*N_r*N_u + 1 inputs to 2*N_r*N_u outputs");
    }
    if (!std::isfinite(input_scale) || !std::isfinite(output_scale)) {
        throw Error(ErrorCategory::config, "score network scales must be finite");
    }
}

RealVector ScoreModelWeights::evaluate(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != input_dim()) {
        throw Error(ErrorCategory::config, "score network expects " + std::to_string(input_dim()) +
                                               " inputs, got " + std::to_string(input.size()));
    }
    RealVector act = Eigen::Map<const RealVector>(input.data(), static_cast<Eigen::Index>(input.size()));
    for (const auto& l : layers) {
        const Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(
            l.weights.data(), l.out_dim, l.in_dim);
        const Eigen::Map<const Eigen::VectorXf> b(l.biases.data(), l.out_dim);
        RealVector next = w.cast<double>() * act + b.cast<double>();
        if (l.activation != Activation::identity) {
            next = next.unaryExpr([a = l.activation](double v) { return activate(a, v); });
        }
        act = std::move(next);
    }
    return act;
}

std::vector<std::uint8_t> encode_score_model(const ScoreModelWeights& w) {
    w.validate();
    detail::ByteWriter out;
    out.bytes(kMagic);
    out.u32(detail::kEndianMarker);
    out.u32(static_cast<std::uint32_t>(w.layers.size()));
    for (const auto& l : w.layers) {
        out.u32(static_cast<std::uint32_t>(l.in_dim));
        out.u32(static_cast<std::uint32_t>(l.out_dim));
        out.u32(static_cast<std::uint32_t>(l.activation));
    }
    out.u32(static_cast<std::uint32_t>(w.sigma_encoding));
    out.f32(w.input_scale);
    out.f32(w.output_scale);

    const std::size_t region_start = out.size();
    for (const auto& l : w.layers) {
        for (float v : l.weights) out.f32(v);
        for (float v : l.biases) out.f32(v);
    }
    const auto& buf = out.buffer();
    const std::uint32_t crc = crc32_of(std::span(buf).subspan(region_start));
    out.u32(crc);
    return std::move(out.buffer());
}

ScoreModelWeights decode_score_model(std::span<const std::uint8_t> bytes) {
    detail::ByteReader in(bytes);
    in.expect_magic(kMagic);
    const std::size_t marker_at = in.offset();
    if (in.u32("endian marker") != detail::kEndianMarker) {
        throw FormatError(marker_at, "unexpected endianness marker");
    }
    const std::size_t count_at = in.offset();
    const std::uint32_t n_layers = in.u32("layer count");
    if (n_layers == 0 || n_layers > kMaxLayers) {
        throw FormatError(count_at, "invalid layer count " + std::to_string(n_layers));
    }

    ScoreModelWeights w;
    w.layers.resize(n_layers);
    std::uint64_t n_params = 0;
    for (auto& l : w.layers) {
        const std::size_t at = in.offset();
        const std::uint32_t in_dim = in.u32("layer input dim");
        const std::uint32_t out_dim = in.u32("layer output dim");
        const std::uint32_t act = in.u32("activation id");
        if (in_dim == 0 || out_dim == 0 || in_dim > kMaxDim || out_dim > kMaxDim) {
            throw FormatError(at, "invalid layer dims");
        }
        if (!valid_activation(act)) {
            throw FormatError(at + 8, "unknown activation id " + std::to_string(act));
        }
        l.in_dim = static_cast<int>(in_dim);
        l.out_dim = static_cast<int>(out_dim);
        l.activation = static_cast<Activation>(act);
        n_params += static_cast<std::uint64_t>(in_dim) * out_dim + out_dim;
    }
    const std::size_t enc_at = in.offset();
    const std::uint32_t enc = in.u32("sigma encoding");
    if (enc > static_cast<std::uint32_t>(SigmaEncoding::log)) {
        throw FormatError(enc_at, "unknown sigma encoding " + std::to_string(enc));
    }
    w.sigma_encoding = static_cast<SigmaEncoding>(enc);
    w.input_scale = in.f32("input scale");
    w.output_scale = in.f32("output scale");

    const std::size_t region_start = in.offset();
    if (in.remaining() != n_params * 4 + 4) {
        throw FormatError(region_start, "parameter region size mismatch: header implies " +
                                            std::to_string(n_params * 4 + 4) + " bytes, file has " +
                                            std::to_string(in.remaining()));
    }
    for (auto& l : w.layers) {
        l.weights.resize(static_cast<std::size_t>(l.in_dim) * l.out_dim);
        l.biases.resize(static_cast<std::size_t>(l.out_dim));
        for (float& v : l.weights) v = in.f32("weights");
        for (float& v : l.biases) v = in.f32("biases");
    }
    const std::size_t region_end = in.offset();
    const std::uint32_t stored = in.u32("crc");
    const std::uint32_t actual = crc32_of(bytes.subspan(region_start, region_end - region_start));
    if (stored != actual) {
        throw FormatError(region_end, "CRC-32 mismatch over parameter region");
    }
    try {
        w.validate();
    } catch (const Error& e) {
        throw FormatError(region_start, e.what());
    }
    return w;
}

void write_score_model(const std::filesystem::path& path, const ScoreModelWeights& w) {
    write_file_bytes(path, encode_score_model(w));
}

ScoreModelWeights read_score_model(const std::filesystem::path& path) {
    return decode_score_model(read_file_bytes(path));
}

}  // namespace jed
