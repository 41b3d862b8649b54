#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jed/mimo_model.hpp"
#include "jed/score_engine.hpp"
#include "jed/types.hpp"

namespace jed {

/// Geometric noise ladder sigma_1 > ... > sigma_L (or a flat ladder when the
/// endpoints coincide). Level indices are 1-based.
class AnnealingSchedule {
public:
    AnnealingSchedule() = default;
    AnnealingSchedule(int levels, double sigma_first, double sigma_last);

    int levels() const noexcept { return static_cast<int>(sigmas_.size()); }
    double first() const noexcept { return sigmas_.front(); }
    double last() const noexcept { return sigmas_.back(); }
    double sigma(int level) const;
    const std::vector<double>& values() const noexcept { return sigmas_; }

private:
    std::vector<double> sigmas_;
};

/// eps * (sigma_l / sigma_L)^2.
double step_size_at_level(double eps, const AnnealingSchedule& schedule, int level);

enum class NoiseMode {
    independent,  // fresh draws for the symbol and the channel update
    shared,       // one draw per inner step, reused by both updates
};

struct JedConfig {
    int levels = 300;
    int steps_per_level = 3;
    double eps_x = 4e-5;
    double eps_h = 1e-10;
    double tau_x = 0.1;
    double tau_h = 1e-3;
    AnnealingSchedule schedule_x{300, 0.8, 0.01};
    AnnealingSchedule schedule_h{300, 30.0, 0.001};
    double sigma0 = 1.0;
    std::uint64_t seed = 0;
    NoiseMode noise_mode = NoiseMode::independent;
    /// Hold the channel at its initial value (used with perfect-CSI starts).
    bool freeze_channel = false;

    /// Throws a config error if any invariant is violated.
    void validate() const;
};

/// Parameter set at the reference system size (64 x 32, L = 2311, T = 3).
/// `preset` is "low-snr" or "high-snr" and only changes the symbol dynamic.
JedConfig paper_config(std::string_view preset);

/// "low-snr" for 5..15 dB, "high-snr" otherwise.
std::string_view preset_for_snr(double snr_db) noexcept;

inline constexpr double kDeskChannelContraction = 1.5;
inline constexpr double kDeskSigmaXFirst = 4.0;

/// Desk-scale defaults: `levels` levels, T = 3,
/// eps_h = c sigma_{L,H}^2 / (K (1 + sqrt(N_u / K))^2) with c = kDeskChannelContraction.
/// The symbol step keeps its reference value: the regularized symbol score
/// is already normalized per user, giving a per-step contraction of about
/// eps_x / sigma_{L,X}^2 at any system size.
/// Under "high-snr" the symbol ladder starts at kDeskSigmaXFirst so the symbol
/// prior stays unimodal until the pilots have pulled the channel in; with few
/// users the reference start lets data columns lock into rotated modes. Much
/// wider starts inflate the early symbol power, and with it the channel
/// curvature, past what eps_h tolerates.
/// "low-snr" keeps its reference start: its eps_x / sigma_{L,X}^2 = 1 leaves
/// no stability margin for a wider ladder.
JedConfig desk_config(std::string_view preset, const SystemDims& dims, double sigma0, int levels = 300);

struct LevelDiagnostics {
    double residual_norm = 0.0;  // ||Y - H~ [X_P, X~_D]||_F after the level
    double sigma_x = 0.0;
    double sigma_h = 0.0;
};

struct JedResult {
    ComplexMatrix x_raw;      // final symbol iterate, N_u x D
    ComplexMatrix h_hat;      // final channel iterate, N_r x N_u
    ComplexMatrix x_decided;  // hard decisions of x_raw
    std::vector<LevelDiagnostics> levels;
};

struct Iterates {
    ComplexMatrix x_data;
    ComplexMatrix channel;
};

/// X~_0 ~ CN(0, sigma_{1,X}^2), H~_0 ~ CN(0, sigma_{1,H}^2). Symbols are
/// drawn before the channel.
Iterates init_iterates(const SystemDims& dims, const JedConfig& cfg, Rng& rng);

/// Inputs that stay fixed for the whole run.
struct JedProblem {
    const ComplexMatrix& y;         // N_r x K
    const ComplexMatrix& x_pilots;  // N_u x P
    const ChannelPrior& prior;
    const Constellation& constellation;
};

/// Injected perturbations for one inner step (standard CN(0, 1) entries).
struct StepNoise {
    ComplexMatrix symbols;
    ComplexMatrix channel;
};

/// In shared mode one CN(0, I) vector long enough for both variables is
/// drawn and each variable takes a leading slice of it (column-major).
StepNoise draw_step_noise(Eigen::Index n_users, Eigen::Index n_data, Eigen::Index n_rx, NoiseMode mode,
                          Rng& rng);

/// One inner step at `level`: the symbol update, then the channel update
/// evaluated at the new symbols.
void langevin_step(Iterates& it, const JedProblem& problem, const JedConfig& cfg, int level,
                   const StepNoise& noise);

/// Full sampler. Throws DivergenceError naming the level and step when an
/// iterate becomes non-finite. `initial` overrides the random start.
JedResult run_jed(const ComplexMatrix& y, const ComplexMatrix& x_pilots, const JedConfig& cfg,
                  const ChannelPrior& prior, const Constellation& c, Rng& rng,
                  std::optional<Iterates> initial = std::nullopt);

}  // namespace jed
