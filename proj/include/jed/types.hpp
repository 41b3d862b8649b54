#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace jed {

using cdouble = std::complex<double>;

/// Dense complex matrix carrying channels, symbol blocks, observations and
/// scores. Entries are addressed (row, col); file formats serialize them
/// row-major.
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Seeded random source. Every RNG-consuming call takes one explicitly so
/// results are reproducible per seed.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to derive independent child seeds from a
/// parent seed and a counter.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Child seed for stream `index` under `parent`. Counter-based, so the value
/// does not depend on evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(parent) ^ (index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

/// Matrix of i.i.d. CN(0, variance) entries: real and imaginary parts are
/// each N(0, variance/2). Entries are drawn column by column, so a wider
/// draw from the same stream extends a narrower one.
ComplexMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, double variance, Rng& rng);

bool all_finite(const ComplexMatrix& m) noexcept;

}  // namespace jed
