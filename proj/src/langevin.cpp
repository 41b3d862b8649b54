#include "jed/langevin.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "jed/error.hpp"

namespace jed {

AnnealingSchedule::AnnealingSchedule(int levels, double sigma_first, double sigma_last) {
    if (levels < 1) {
        throw Error(ErrorCategory::config, "annealing schedule needs at least one level");
    }
    if (!(sigma_first > 0.0) || !(sigma_last > 0.0) || sigma_last > sigma_first) {
        throw Error(ErrorCategory::config, "annealing schedule needs sigma_first >= sigma_last > 0");
    }
    sigmas_.resize(static_cast<std::size_t>(levels));
    if (levels == 1) {
        sigmas_[0] = sigma_first;
        return;
    }
    const double log_ratio = std::log(sigma_last / sigma_first) / (levels - 1);
    for (int l = 0; l < levels; ++l) {
        sigmas_[static_cast<std::size_t>(l)] = sigma_first * std::exp(log_ratio * l);
    }
    // Pin the endpoints exactly.
    sigmas_.front() = sigma_first;
    sigmas_.back() = sigma_last;
}

double AnnealingSchedule::sigma(int level) const {
    if (level < 1 || level > levels()) {
        throw Error(ErrorCategory::config, "level " + std::to_string(level) + " outside 1.." +
                                               std::to_string(levels()));
    }
    return sigmas_[static_cast<std::size_t>(level - 1)];
}

double step_size_at_level(double eps, const AnnealingSchedule& schedule, int level) {
    const double ratio = schedule.sigma(level) / schedule.last();
    return eps * ratio * ratio;
}

void JedConfig::validate() const {
    std::ostringstream err;
    if (levels < 1) err << "L must be >= 1; ";
    if (steps_per_level < 0) err << "T must be >= 0; ";
    if (!(eps_x > 0.0) || !(eps_h > 0.0)) err << "step sizes must be > 0; ";
    if (!(tau_x >= 0.0) || !(tau_h >= 0.0)) err << "temperatures must be >= 0; ";
    if (schedule_x.levels() != levels || schedule_h.levels() != levels) {
        err << "both schedules must have L = " << levels << " levels; ";
    }
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) err << "sigma0 must be > 0; ";
    const std::string msg = err.str();
    if (!msg.empty()) {
        throw Error(ErrorCategory::config, "invalid sampler config: " + msg.substr(0, msg.size() - 2));
    }
}

JedConfig paper_config(std::string_view preset) {
    JedConfig cfg;
    cfg.levels = 2311;
    cfg.steps_per_level = 3;
    cfg.eps_h = 1e-10;
    cfg.tau_h = 1e-3;
    cfg.schedule_h = AnnealingSchedule(cfg.levels, 30.0, 0.001);
    if (preset == "low-snr") {
        cfg.eps_x = 1e-4;
        cfg.tau_x = 0.5;
        cfg.schedule_x = AnnealingSchedule(cfg.levels, 0.6, 0.01);
    } else if (preset == "high-snr") {
        cfg.eps_x = 4e-5;
        cfg.tau_x = 0.1;
        cfg.schedule_x = AnnealingSchedule(cfg.levels, 0.8, 0.01);
    } else {
        throw Error(ErrorCategory::config, "unknown sampler preset \"" + std::string(preset) + "\"");
    }
    return cfg;
}

std::string_view preset_for_snr(double snr_db) noexcept {
    return (snr_db >= 5.0 && snr_db <= 15.0) ? "low-snr" : "high-snr";
}

JedConfig desk_config(std::string_view preset, const SystemDims& dims, double sigma0, int levels) {
    JedConfig cfg = paper_config(preset);
    cfg.levels = levels;
    cfg.schedule_h = AnnealingSchedule(levels, cfg.schedule_h.first(), cfg.schedule_h.last());
    const double x_first = preset == "high-snr" ? kDeskSigmaXFirst : cfg.schedule_x.first();
    cfg.schedule_x = AnnealingSchedule(levels, x_first, cfg.schedule_x.last());
    // The channel likelihood curvature is X X^H / (sigma0^2 + sigma_h^2) and the
    // level step scales with sigma_h^2 / sigma_L^2. For unit-power columns the
    // top eigenvalue of X X^H sits near K (1 + sqrt(N_u / K))^2, so this pins the
    // per-step contraction along the stiffest direction at kDeskChannelContraction.
    const double k = static_cast<double>(dims.n_slots());
    const double edge = 1.0 + std::sqrt(static_cast<double>(dims.n_users) / k);
    cfg.eps_h = kDeskChannelContraction * cfg.schedule_h.last() * cfg.schedule_h.last() /
                (k * edge * edge);
    cfg.sigma0 = sigma0;
    return cfg;
}

Iterates init_iterates(const SystemDims& dims, const JedConfig& cfg, Rng& rng) {
    Iterates it;
    const double sx = cfg.schedule_x.first();
    const double sh = cfg.schedule_h.first();
    it.x_data = complex_gaussian(dims.n_users, dims.n_data, sx * sx, rng);
    it.channel = complex_gaussian(dims.n_rx, dims.n_users, sh * sh, rng);
    return it;
}

StepNoise draw_step_noise(Eigen::Index n_users, Eigen::Index n_data, Eigen::Index n_rx, NoiseMode mode,
                          Rng& rng) {
    StepNoise n;
    if (mode == NoiseMode::independent) {
        n.symbols = complex_gaussian(n_users, n_data, 1.0, rng);
        n.channel = complex_gaussian(n_rx, n_users, 1.0, rng);
        return n;
    }
    const Eigen::Index len = std::max(n_users * n_data, n_rx * n_users);
    const ComplexMatrix z = complex_gaussian(len, 1, 1.0, rng);
    n.symbols = z.topRows(n_users * n_data).reshaped(n_users, n_data);
    n.channel = z.topRows(n_rx * n_users).reshaped(n_rx, n_users);
    return n;
}

void langevin_step(Iterates& it, const JedProblem& problem, const JedConfig& cfg, int level,
                   const StepNoise& noise) {
    const NoiseLevelState state{cfg.schedule_x.sigma(level), cfg.schedule_h.sigma(level), cfg.sigma0};
    const Eigen::Index n_data = it.x_data.cols();

    if (n_data > 0) {
        const double eps = step_size_at_level(cfg.eps_x, cfg.schedule_x, level);
        const ComplexMatrix score =
            likelihood_score_symbols(problem.y.rightCols(n_data), it.x_data, it.channel, state) +
            prior_score_symbols(it.x_data, state.sigma_x, problem.constellation);
        it.x_data += eps * score + std::sqrt(2.0 * eps * cfg.tau_x) * noise.symbols;
    }
    if (!cfg.freeze_channel) {
        const double eps = step_size_at_level(cfg.eps_h, cfg.schedule_h, level);
        const ComplexMatrix score =
            likelihood_score_channel(problem.y, stack_slots(problem.x_pilots, it.x_data), it.channel, state) +
            prior_score_channel(it.channel, state.sigma_h, problem.prior);
        it.channel += eps * score + std::sqrt(2.0 * eps * cfg.tau_h) * noise.channel;
    }
}

JedResult run_jed(const ComplexMatrix& y, const ComplexMatrix& x_pilots, const JedConfig& cfg,
                  const ChannelPrior& prior, const Constellation& c, Rng& rng, std::optional<Iterates> initial) {
    cfg.validate();
    if (y.cols() < x_pilots.cols() || x_pilots.cols() == 0) {
        throw Error(ErrorCategory::shape, "run_jed: Y has " + std::to_string(y.cols()) +
                                              " columns but X_P has " + std::to_string(x_pilots.cols()));
    }
    SystemDims dims{static_cast<int>(y.rows()), static_cast<int>(x_pilots.rows()),
                    static_cast<int>(x_pilots.cols()), static_cast<int>(y.cols() - x_pilots.cols())};

    Iterates it = initial ? std::move(*initial) : init_iterates(dims, cfg, rng);
    if (it.x_data.rows() != dims.n_users || it.x_data.cols() != dims.n_data ||
        it.channel.rows() != dims.n_rx || it.channel.cols() != dims.n_users) {
        throw Error(ErrorCategory::shape, "run_jed: initial iterates do not match the problem dims");
    }

    const JedProblem problem{y, x_pilots, prior, c};
    JedResult result;
    result.levels.reserve(static_cast<std::size_t>(cfg.levels));
    for (int level = 1; level <= cfg.levels; ++level) {
        for (int k = 0; k < cfg.steps_per_level; ++k) {
            const StepNoise noise = draw_step_noise(dims.n_users, dims.n_data, dims.n_rx, cfg.noise_mode, rng);
            std::string cause;
            try {
                langevin_step(it, problem, cfg, level, noise);
            } catch (const Error& e) {
                // A runaway iterate can overflow the Gram matrix before it turns non-finite.
                if (e.category() != ErrorCategory::numerical) throw;
                cause = e.what();
            }
            if (!cause.empty() || !all_finite(it.x_data) || !all_finite(it.channel)) {
                std::ostringstream os;
                os << "sampler diverged at level " << level << " step " << k;
                if (!cause.empty()) os << " (" << cause << ")";
                os << "; check step sizes and annealing schedule";
                throw DivergenceError(level, k, os.str());
            }
        }
        LevelDiagnostics d;
        d.residual_norm = (y - it.channel * stack_slots(x_pilots, it.x_data)).norm();
        d.sigma_x = cfg.schedule_x.sigma(level);
        d.sigma_h = cfg.schedule_h.sigma(level);
        result.levels.push_back(d);
    }
    result.x_raw = std::move(it.x_data);
    result.h_hat = std::move(it.channel);
    result.x_decided = hard_decision(result.x_raw, c);
    return result;
}

}  // namespace jed
