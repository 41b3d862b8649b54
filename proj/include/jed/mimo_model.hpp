#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "jed/types.hpp"

namespace jed {

/// Square Gray-labeled M-QAM with unit average power.
class Constellation {
public:
    int order() const noexcept { return static_cast<int>(points_.size()); }
    int bits_per_symbol() const noexcept { return bits_; }

    std::span<const cdouble> points() const noexcept { return points_; }
    std::span<const std::uint32_t> gray_labels() const noexcept { return labels_; }

    /// Largest |x_k| over the alphabet.
    double max_magnitude() const noexcept { return max_magnitude_; }

    /// Index of `x` in points() if it is exactly a constellation point, else -1.
    int index_of(cdouble x) const noexcept;
    bool contains(cdouble x) const noexcept { return index_of(x) >= 0; }

    /// Index of the nearest point; ties go to the smaller Gray label.
    int nearest_index(cdouble x) const noexcept;

private:
    friend Constellation make_constellation(int order);

    int bits_ = 0;
    double max_magnitude_ = 0.0;
    std::vector<cdouble> points_;
    std::vector<std::uint32_t> labels_;
};

/// order must be 4, 16 or 64; anything else throws a config error.
Constellation make_constellation(int order);

struct SystemDims {
    int n_rx = 0;
    int n_users = 0;
    int n_pilots = 0;
    int n_data = 0;

    int n_slots() const noexcept { return n_pilots + n_data; }

    /// Throws a config error unless n_rx, n_users, n_pilots are positive and
    /// n_data is non-negative (D = 0 is the pilot-only configuration).
    void validate() const;
};

struct IidGaussian {};

/// H = R_rx^{1/2} G R_tx^{1/2} with G i.i.d. CN(0, 1).
struct Kronecker {
    ComplexMatrix r_rx;
    ComplexMatrix r_tx;
};

/// Exponential correlation R_ij = rho^|i-j|, the usual one-parameter
/// Kronecker test model.
ComplexMatrix exponential_correlation(int n, double rho);

class ChannelModel {
public:
    using Variant = std::variant<IidGaussian, Kronecker>;

    static ChannelModel iid_gaussian();
    /// Validates both matrices (Hermitian, PSD, unit diagonal) and caches
    /// their principal square roots.
    static ChannelModel kronecker(ComplexMatrix r_rx, ComplexMatrix r_tx);

    const Variant& variant() const noexcept { return variant_; }
    bool is_iid() const noexcept { return std::holds_alternative<IidGaussian>(variant_); }

    /// "iid" or "kronecker(rx=NxN,tx=MxM)"; for diagnostics and headers.
    std::string describe() const;

    const ComplexMatrix& sqrt_rx() const noexcept { return sqrt_rx_; }
    const ComplexMatrix& sqrt_tx() const noexcept { return sqrt_tx_; }

private:
    Variant variant_ = IidGaussian{};
    ComplexMatrix sqrt_rx_;
    ComplexMatrix sqrt_tx_;
};

ComplexMatrix sample_channel(const ChannelModel& model, const SystemDims& dims, Rng& rng);

/// n_users x n_slots matrix of i.i.d. uniform constellation points.
ComplexMatrix sample_symbols(const Constellation& c, int n_users, int n_slots, Rng& rng);

/// Y = H X + Z, Z i.i.d. CN(0, sigma0^2). sigma0 == 0 returns H X exactly.
ComplexMatrix forward(const ComplexMatrix& h, const ComplexMatrix& x, double sigma0, Rng& rng);

/// Noise std for average per-antenna receive SNR with unit-power symbols and
/// unit-variance channel entries: sigma0^2 = N_u / 10^(snr_db/10).
double sigma0_from_snr(double snr_db, const SystemDims& dims);

/// Text of the SNR convention above, echoed into every CSV row.
inline constexpr const char* kSnrDefinition = "sigma0^2=N_u/10^(snr_db/10)";

}  // namespace jed
