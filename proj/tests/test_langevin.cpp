#include <gtest/gtest.h>

#include <cmath>

#include "jed/baselines.hpp"
#include "jed/error.hpp"
#include "jed/langevin.hpp"
#include "jed/score_engine.hpp"

using namespace jed;

namespace {

const Constellation& qpsk() {
    static const Constellation c = make_constellation(4);
    return c;
}

struct Instance {
    ComplexMatrix h, xp, xd, y;
    double sigma0;
};

Instance make_instance(int nr, int nu, int p, int d, double snr_db, std::uint64_t seed) {
    Rng rng(seed);
    Instance in;
    const SystemDims dims{nr, nu, p, d};
    in.sigma0 = sigma0_from_snr(snr_db, dims);
    in.h = sample_channel(ChannelModel::iid_gaussian(), dims, rng);
    in.xp = sample_symbols(qpsk(), nu, p, rng);
    in.xd = sample_symbols(qpsk(), nu, d, rng);
    in.y = forward(in.h, stack_slots(in.xp, in.xd), in.sigma0, rng);
    return in;
}

JedConfig small_config(double sigma0, int levels = 20) {
    JedConfig cfg = desk_config("high-snr", SystemDims{4, 2, 4, 3}, sigma0, levels);
    return cfg;
}

}  // namespace

TEST(Schedule, GeometricWithExactEndpoints) {
    const AnnealingSchedule s(2311, 30.0, 0.001);
    EXPECT_EQ(s.levels(), 2311);
    EXPECT_EQ(s.first(), 30.0);
    EXPECT_EQ(s.last(), 0.001);
    const double r = s.sigma(2) / s.sigma(1);
    for (int l = 1; l < s.levels(); ++l) {
        EXPECT_LT(s.sigma(l + 1), s.sigma(l));
        EXPECT_NEAR(s.sigma(l + 1) / s.sigma(l), r, 1e-12);
    }
}

TEST(Schedule, FlatAndSingleLevel) {
    const AnnealingSchedule flat(5, 0.3, 0.3);
    for (int l = 1; l <= 5; ++l) EXPECT_EQ(flat.sigma(l), 0.3);
    const AnnealingSchedule one(1, 2.0, 2.0);
    EXPECT_EQ(one.sigma(1), 2.0);
}

TEST(Schedule, InvalidArguments) {
    EXPECT_THROW(AnnealingSchedule(0, 1.0, 0.1), Error);
    EXPECT_THROW(AnnealingSchedule(3, 0.1, 1.0), Error);
    EXPECT_THROW(AnnealingSchedule(3, 1.0, 0.0), Error);
    const AnnealingSchedule s(3, 1.0, 0.1);
    EXPECT_THROW(s.sigma(0), Error);
    EXPECT_THROW(s.sigma(4), Error);
}

TEST(StepSize, Examples) {
    const AnnealingSchedule s(2311, 30.0, 0.001);
    EXPECT_EQ(step_size_at_level(1e-10, s, 2311), 1e-10);
    EXPECT_NEAR(step_size_at_level(1e-10, s, 1), 9e-2, 1e-15);
    const AnnealingSchedule flat(7, 0.5, 0.5);
    for (int l = 1; l <= 7; ++l) EXPECT_EQ(step_size_at_level(3e-3, flat, l), 3e-3);
    EXPECT_THROW(step_size_at_level(1.0, s, 0), Error);
}

TEST(StepSize, NonIncreasingInLevel) {
    for (const JedConfig& cfg : {paper_config("low-snr"), paper_config("high-snr")}) {
        for (int l = 1; l < cfg.levels; ++l) {
            EXPECT_LE(step_size_at_level(cfg.eps_x, cfg.schedule_x, l + 1),
                      step_size_at_level(cfg.eps_x, cfg.schedule_x, l));
            EXPECT_LE(step_size_at_level(cfg.eps_h, cfg.schedule_h, l + 1),
                      step_size_at_level(cfg.eps_h, cfg.schedule_h, l));
        }
    }
}

TEST(Config, ReferencePresets) {
    const JedConfig lo = paper_config("low-snr");
    EXPECT_EQ(lo.levels, 2311);
    EXPECT_EQ(lo.steps_per_level, 3);
    EXPECT_EQ(lo.eps_x, 1e-4);
    EXPECT_EQ(lo.tau_x, 0.5);
    EXPECT_EQ(lo.schedule_x.first(), 0.6);
    EXPECT_EQ(lo.schedule_x.last(), 0.01);
    EXPECT_EQ(lo.eps_h, 1e-10);
    EXPECT_EQ(lo.tau_h, 1e-3);
    EXPECT_EQ(lo.schedule_h.first(), 30.0);
    EXPECT_EQ(lo.schedule_h.last(), 0.001);
    const JedConfig hi = paper_config("high-snr");
    EXPECT_EQ(hi.eps_x, 4e-5);
    EXPECT_EQ(hi.tau_x, 0.1);
    EXPECT_EQ(hi.schedule_x.first(), 0.8);
    EXPECT_THROW(paper_config("medium"), Error);
}

TEST(Config, PresetBySnr) {
    EXPECT_EQ(preset_for_snr(4.9), "high-snr");
    EXPECT_EQ(preset_for_snr(5.0), "low-snr");
    EXPECT_EQ(preset_for_snr(15.0), "low-snr");
    EXPECT_EQ(preset_for_snr(25.0), "high-snr");
}

TEST(Config, DeskDefaults) {
    const SystemDims dims{16, 4, 8, 32};
    const JedConfig cfg = desk_config("high-snr", dims, 0.1);
    EXPECT_EQ(cfg.levels, 300);
    EXPECT_EQ(cfg.steps_per_level, 3);
    EXPECT_EQ(cfg.schedule_x.levels(), 300);
    EXPECT_EQ(cfg.schedule_h.levels(), 300);
    EXPECT_EQ(cfg.schedule_x.first(), kDeskSigmaXFirst);
    EXPECT_EQ(cfg.eps_x, 4e-5);
    const double k = 40.0, edge = 1.0 + std::sqrt(4.0 / 40.0);
    EXPECT_NEAR(cfg.eps_h, kDeskChannelContraction * 1e-6 / (k * edge * edge), 1e-22);
    EXPECT_EQ(cfg.sigma0, 0.1);
    EXPECT_EQ(desk_config("low-snr", dims, 0.1).schedule_x.first(), 0.6);
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, Validation) {
    JedConfig cfg = small_config(0.1);
    cfg.levels = 21;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = small_config(0.1);
    cfg.tau_x = -1.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = small_config(0.1);
    cfg.eps_h = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = small_config(0.1);
    cfg.sigma0 = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = small_config(0.1);
    cfg.steps_per_level = -1;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(Init, VarianceAndScaling) {
    JedConfig cfg = small_config(0.1);
    cfg.schedule_h = AnnealingSchedule(cfg.levels, 30.0, 0.001);
    Rng rng(1);
    const Iterates it = init_iterates(SystemDims{100, 100, 1, 0}, cfg, rng);
    EXPECT_NEAR(it.channel.squaredNorm() / 1e4, 900.0, 900.0 * 0.05);

    JedConfig a = small_config(0.1), b = small_config(0.1);
    a.schedule_x = AnnealingSchedule(a.levels, 0.5, 0.01);
    b.schedule_x = AnnealingSchedule(b.levels, 1.0, 0.01);
    Rng ra(3), rb(3);
    const Iterates ia = init_iterates(SystemDims{4, 3, 2, 50}, a, ra);
    const Iterates ib = init_iterates(SystemDims{4, 3, 2, 50}, b, rb);
    EXPECT_LT((2.0 * ia.x_data - ib.x_data).norm(), 1e-12);

    Rng r1(9), r2(9);
    const SystemDims dims{4, 2, 2, 3};
    const Iterates i1 = init_iterates(dims, cfg, r1);
    const Iterates i2 = init_iterates(dims, cfg, r2);
    EXPECT_EQ(i1.x_data, i2.x_data);
    EXPECT_EQ(i1.channel, i2.channel);
}

TEST(Sampler, ZeroStepsReturnsInitialization) {
    const Instance in = make_instance(4, 2, 4, 3, 20.0, 5);
    JedConfig cfg = small_config(in.sigma0);
    cfg.steps_per_level = 0;
    Rng r1(11), r2(11);
    const JedResult res = run_jed(in.y, in.xp, cfg, ChannelPrior::gaussian_analytic(1.0), qpsk(), r1);
    const Iterates init = init_iterates(SystemDims{4, 2, 4, 3}, cfg, r2);
    EXPECT_EQ(res.x_raw, init.x_data);
    EXPECT_EQ(res.h_hat, init.channel);
    EXPECT_EQ(res.levels.size(), 20u);
}

TEST(Sampler, Deterministic) {
    const Instance in = make_instance(4, 2, 4, 6, 20.0, 6);
    const JedConfig cfg = small_config(in.sigma0, 40);
    Rng r1(2), r2(2);
    const ChannelPrior prior = ChannelPrior::gaussian_analytic(1.0);
    const JedResult a = run_jed(in.y, in.xp, cfg, prior, qpsk(), r1);
    const JedResult b = run_jed(in.y, in.xp, cfg, prior, qpsk(), r2);
    EXPECT_EQ(a.x_raw, b.x_raw);
    EXPECT_EQ(a.h_hat, b.h_hat);
    for (Eigen::Index i = 0; i < a.x_decided.size(); ++i) EXPECT_TRUE(qpsk().contains(a.x_decided.data()[i]));
}

// Hand-stepped reference at tau = 0: the channel update must see the new symbols.
TEST(Sampler, ChannelUpdateUsesNewSymbols) {
    const Instance in = make_instance(4, 2, 3, 4, 15.0, 7);
    JedConfig cfg = small_config(in.sigma0);
    cfg.tau_x = 0.0;
    cfg.tau_h = 0.0;
    Rng rng(4);
    Iterates it = init_iterates(SystemDims{4, 2, 3, 4}, cfg, rng);
    const Iterates start = it;
    const ChannelPrior prior = ChannelPrior::gaussian_analytic(1.0);
    const JedProblem problem{in.y, in.xp, prior, qpsk()};
    const int level = 5;
    const StepNoise noise = draw_step_noise(2, 4, 4, NoiseMode::independent, rng);
    langevin_step(it, problem, cfg, level, noise);

    const NoiseLevelState st{cfg.schedule_x.sigma(level), cfg.schedule_h.sigma(level), cfg.sigma0};
    const double ex = cfg.eps_x * std::pow(cfg.schedule_x.sigma(level) / cfg.schedule_x.last(), 2);
    const double eh = cfg.eps_h * std::pow(cfg.schedule_h.sigma(level) / cfg.schedule_h.last(), 2);
    const ComplexMatrix x1 = start.x_data + ex * joint_posterior_scores(in.y, start.x_data, start.channel, in.xp, st,
                                                                        prior, qpsk()).symbols;
    const ComplexMatrix h_new = start.channel + eh * joint_posterior_scores(in.y, x1, start.channel, in.xp, st,
                                                                            prior, qpsk()).channel;
    const ComplexMatrix h_old = start.channel + eh * joint_posterior_scores(in.y, start.x_data, start.channel,
                                                                            in.xp, st, prior, qpsk()).channel;
    EXPECT_LT((it.x_data - x1).norm(), 1e-12 * x1.norm());
    EXPECT_LT((it.channel - h_new).norm(), 1e-12 * h_new.norm());
    EXPECT_GT((it.channel - h_old).norm(), 1e3 * (it.channel - h_new).norm());
}

TEST(Sampler, InjectedNoiseEntersWithTemperature) {
    const Instance in = make_instance(3, 2, 2, 2, 20.0, 8);
    JedConfig cfg = small_config(in.sigma0);
    Rng rng(5);
    Iterates a = init_iterates(SystemDims{3, 2, 2, 2}, cfg, rng);
    Iterates b = a;
    const ChannelPrior prior = ChannelPrior::gaussian_analytic(1.0);
    const JedProblem problem{in.y, in.xp, prior, qpsk()};
    StepNoise zero{ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(3, 2)};
    StepNoise some = zero;
    some.symbols(1, 0) = cdouble(1.0, -2.0);
    cfg.freeze_channel = true;
    langevin_step(a, problem, cfg, 1, zero);
    langevin_step(b, problem, cfg, 1, some);
    const double ex = step_size_at_level(cfg.eps_x, cfg.schedule_x, 1);
    const ComplexMatrix diff = b.x_data - a.x_data;
    EXPECT_NEAR(std::abs(diff(1, 0) - std::sqrt(2.0 * ex * cfg.tau_x) * cdouble(1.0, -2.0)), 0.0, 1e-12);
    EXPECT_EQ(diff(0, 0), cdouble(0.0));
    EXPECT_EQ(a.channel, b.channel);
}

TEST(StepNoiseDraws, IndependentStreamsUncorrelated) {
    Rng rng(12);
    const int n = 100000;
    double sxy = 0.0, sxx = 0.0, syy = 0.0, mean_x = 0.0;
    for (int i = 0; i < n; ++i) {
        const StepNoise z = draw_step_noise(1, 1, 1, NoiseMode::independent, rng);
        const double a = z.symbols(0, 0).real(), b = z.channel(0, 0).real();
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
        mean_x += a;
    }
    EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.015);
    // CN(0, 1): the real part carries half the variance.
    EXPECT_NEAR(sxx / n, 0.5, 0.01);
    EXPECT_NEAR(mean_x / n, 0.0, 0.01);
}

TEST(StepNoiseDraws, SharedModeReusesOneDraw) {
    Rng rng(13);
    const StepNoise z = draw_step_noise(2, 3, 4, NoiseMode::shared, rng);
    ASSERT_EQ(z.symbols.rows(), 2);
    ASSERT_EQ(z.symbols.cols(), 3);
    ASSERT_EQ(z.channel.rows(), 4);
    ASSERT_EQ(z.channel.cols(), 2);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(z.symbols.data()[i], z.channel.data()[i]);
}

// tau = 0, perfect channel held fixed: the symbol flow alone must find the data.
TEST(Sampler, AnnealingContractionWithPerfectChannel) {
    int recovered = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
        const Instance in = make_instance(4, 2, 2, 4, 30.0, 1000 + static_cast<std::uint64_t>(t));
        JedConfig cfg = desk_config("high-snr", SystemDims{4, 2, 2, 4}, in.sigma0, 100);
        cfg.tau_x = 0.0;
        cfg.tau_h = 0.0;
        cfg.freeze_channel = true;
        Rng rng(static_cast<std::uint64_t>(t));
        Iterates start = init_iterates(SystemDims{4, 2, 2, 4}, cfg, rng);
        start.channel = in.h;
        const JedResult r = run_jed(in.y, in.xp, cfg, ChannelPrior::gaussian_analytic(1.0), qpsk(), rng, start);
        EXPECT_EQ(r.h_hat, in.h);
        if (r.x_decided == in.xd) ++recovered;
    }
    EXPECT_GE(recovered, 495) << recovered << " of " << trials;
}

TEST(Sampler, PilotOnlyRun) {
    const Instance in = make_instance(8, 2, 4, 0, 30.0, 14);
    const JedConfig cfg = desk_config("high-snr", SystemDims{8, 2, 4, 0}, in.sigma0);
    Rng rng(1);
    const JedResult r = run_jed(in.y, in.xp, cfg, ChannelPrior::gaussian_analytic(1.0), qpsk(), rng);
    EXPECT_EQ(r.x_raw.rows(), 2);
    EXPECT_EQ(r.x_raw.cols(), 0);
    const double lmmse = nmse(in.h, lmmse_channel_estimate(in.y, in.xp, in.sigma0, 1.0));
    EXPECT_LT(to_db(nmse(in.h, r.h_hat)), to_db(lmmse) + 3.0);
}

TEST(Sampler, DivergenceNamesLevelAndStep) {
    const Instance in = make_instance(4, 2, 4, 3, 20.0, 15);
    JedConfig cfg = small_config(in.sigma0);
    cfg.eps_h = 1.0;
    Rng rng(1);
    try {
        run_jed(in.y, in.xp, cfg, ChannelPrior::gaussian_analytic(1.0), qpsk(), rng);
        FAIL();
    } catch (const DivergenceError& e) {
        EXPECT_GE(e.level(), 1);
        EXPECT_GE(e.step(), 0);
        EXPECT_NE(std::string(e.what()).find("level " + std::to_string(e.level())), std::string::npos);
    }
}

TEST(Sampler, ShapeChecks) {
    const Instance in = make_instance(4, 2, 4, 3, 20.0, 16);
    const JedConfig cfg = small_config(in.sigma0);
    Rng rng(1);
    Iterates bad{ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(4, 2)};
    EXPECT_THROW(run_jed(in.y, in.xp, cfg, ChannelPrior::gaussian_analytic(1.0), qpsk(), rng, bad), Error);
    EXPECT_THROW(run_jed(in.y.leftCols(2), in.xp, cfg, ChannelPrior::gaussian_analytic(1.0), qpsk(), rng), Error);
}

TEST(Sampler, ResidualDiagnosticsPerLevel) {
    const Instance in = make_instance(4, 2, 4, 4, 25.0, 17);
    const JedConfig cfg = small_config(in.sigma0, 60);
    Rng rng(3);
    const JedResult r = run_jed(in.y, in.xp, cfg, ChannelPrior::gaussian_analytic(1.0), qpsk(), rng);
    ASSERT_EQ(r.levels.size(), 60u);
    EXPECT_EQ(r.levels.front().sigma_x, cfg.schedule_x.first());
    EXPECT_EQ(r.levels.back().sigma_h, cfg.schedule_h.last());
    const double last = (in.y - r.h_hat * stack_slots(in.xp, r.x_raw)).norm();
    EXPECT_NEAR(r.levels.back().residual_norm, last, 1e-12 * (1.0 + last));
    EXPECT_LT(r.levels.back().residual_norm, r.levels.front().residual_norm);
}
