#pragma once

#include <cstdint>
#include <string>

#include "jed/mimo_model.hpp"
#include "jed/types.hpp"

namespace jed {

/// H = Y_P X_P^H (X_P X_P^H)^{-1}. Rank error if P < N_u or the pilot Gram
/// matrix is singular.
ComplexMatrix ls_channel_estimate(const ComplexMatrix& y_pilots, const ComplexMatrix& x_pilots);

/// H = Y_P X_P^H (X_P X_P^H + (sigma0^2 / v) I)^{-1} for an i.i.d. CN(0, v)
/// channel prior.
ComplexMatrix lmmse_channel_estimate(const ComplexMatrix& y_pilots, const ComplexMatrix& x_pilots,
                                     double sigma0, double prior_variance);

/// Linear MMSE filter H^H (H H^H + sigma0^2 I)^{-1} Y_D, before decisions.
ComplexMatrix mmse_equalize(const ComplexMatrix& y_data, const ComplexMatrix& h, double sigma0);

/// hard_decision(mmse_equalize(...)).
ComplexMatrix mmse_detect(const ComplexMatrix& y_data, const ComplexMatrix& h, double sigma0,
                          const Constellation& c);

inline constexpr double kMaxMlCandidates = 1e6;

/// Exhaustive argmin over the alphabet^N_u per column. Capacity error when
/// M^N_u exceeds kMaxMlCandidates.
ComplexMatrix ml_detect_bruteforce(const ComplexMatrix& y_data, const ComplexMatrix& h,
                                   const Constellation& c);

/// ||H - H_hat||_F^2 / ||H||_F^2. Undefined (numerical error) for H = 0.
double nmse(const ComplexMatrix& h, const ComplexMatrix& h_hat);

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// Fraction of differing entries. Contract error if any entry of either
/// matrix is not a constellation point.
double ser(const ComplexMatrix& x_true, const ComplexMatrix& x_decided, const Constellation& c);

struct TrialOutcome {
    std::string method;
    SystemDims dims;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    double nmse = 0.0;        // NaN when the method estimates no channel
    double ser = 0.0;         // NaN when there are no data slots
    double symbol_mse = 0.0;  // mean |x_soft - x|^2 of the pre-decision symbols, NaN if none
};

}  // namespace jed
