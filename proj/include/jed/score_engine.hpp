#pragma once

#include <memory>
#include <utility>
#include <variant>

#include "jed/mimo_model.hpp"
#include "jed/score_model.hpp"
#include "jed/types.hpp"

namespace jed {

// Gradient convention: every score returned here is the formula as written,
// i.e. the conjugate-direction gradient in which a complex Gaussian with
// variance s^2 contributes (y - m) / s^2. Expressed through real
// derivatives this is (d/dRe + i d/dIm) of the log density written with a
// 2 s^2 denominator.

/// Noise levels at the current annealing step.
struct NoiseLevelState {
    double sigma_x = 0.0;  // symbol annealing std
    double sigma_h = 0.0;  // channel annealing std
    double sigma0 = 1.0;   // measurement noise std, must be > 0
};

struct GaussianAnalyticPrior {
    double variance = 1.0;  // per-entry CN(0, variance) channel prior
};

struct LearnedPrior {
    std::shared_ptr<const ScoreModelWeights> weights;
};

/// Channel prior used by the sampler. The analytic variant is the score of
/// CN(0, v) smoothed by CN(0, sigma_h^2); the learned variant evaluates a
/// score network.
class ChannelPrior {
public:
    using Variant = std::variant<GaussianAnalyticPrior, LearnedPrior>;

    static ChannelPrior gaussian_analytic(double variance);
    static ChannelPrior learned(ScoreModelWeights weights);

    const Variant& variant() const noexcept { return variant_; }
    bool is_analytic() const noexcept { return std::holds_alternative<GaussianAnalyticPrior>(variant_); }

private:
    Variant variant_ = GaussianAnalyticPrior{};
};

/// Symbol likelihood score on the data columns:
///   (sigma0^2 I + sigma_x^2 H^H H)^{-1} H^H (Y_D - H X_D),
/// solved with the N_u x N_u system.
ComplexMatrix likelihood_score_symbols(const ComplexMatrix& y_data, const ComplexMatrix& x_data,
                                       const ComplexMatrix& h, const NoiseLevelState& state);

/// Channel likelihood score over all K columns (pilots and data):
///   (Y - H X) X^H / (sigma0^2 + sigma_h^2).
ComplexMatrix likelihood_score_channel(const ComplexMatrix& y, const ComplexMatrix& x_full,
                                       const ComplexMatrix& h, const NoiseLevelState& state);

/// Posterior mean of a constellation point under isotropic Gaussian
/// smoothing, sum_k x_k softmax_k(-|x~ - x_k|^2 / (2 sigma^2)).
cdouble denoiser_expectation(cdouble x_noisy, double sigma_x, const Constellation& c);

/// Tweedie score of the smoothed discrete prior, (E[x | x~] - x~) / sigma_x^2.
ComplexMatrix prior_score_symbols(const ComplexMatrix& x_data, double sigma_x, const Constellation& c);

ComplexMatrix prior_score_channel(const ComplexMatrix& h, double sigma_h, const ChannelPrior& prior);

struct PosteriorScores {
    ComplexMatrix symbols;  // N_u x D
    ComplexMatrix channel;  // N_r x N_u
};

/// Both joint-posterior scores at one configuration. The channel score uses
/// the full block [X_P, X_D] built from x_pilots and x_data.
PosteriorScores joint_posterior_scores(const ComplexMatrix& y, const ComplexMatrix& x_data,
                                       const ComplexMatrix& h, const ComplexMatrix& x_pilots,
                                       const NoiseLevelState& state, const ChannelPrior& prior,
                                       const Constellation& c);

/// Concatenates [X_P, X_D] column-wise.
ComplexMatrix stack_slots(const ComplexMatrix& x_pilots, const ComplexMatrix& x_data);

/// Entrywise nearest constellation point.
ComplexMatrix hard_decision(const ComplexMatrix& x, const Constellation& c);

}  // namespace jed
