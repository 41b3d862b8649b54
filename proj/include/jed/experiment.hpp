#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jed/baselines.hpp"
#include "jed/error.hpp"
#include "jed/formats.hpp"
#include "jed/langevin.hpp"
#include "jed/score_engine.hpp"

namespace jed {

/// Methods a simulation can run on each trial.
///   jed              joint sampler over channel and data
///   single_langevin  channel sampler on pilots only, then MMSE detection
///   ls, lmmse        pilot channel estimate, then MMSE detection
///   mmse_pcsi        MMSE detection with the true channel
///   ml_pcsi          exhaustive ML detection with the true channel
enum class Method { jed, single_langevin, ls, lmmse, mmse_pcsi, ml_pcsi };

std::string method_name(Method m);
Method parse_method(const std::string& name);

/// Optional overrides applied on top of the selected sampler preset.
struct SamplerOverrides {
    std::optional<int> levels;
    std::optional<int> steps;
    std::optional<double> eps_x, eps_h, tau_x, tau_h;
    std::optional<double> sigma_x_first, sigma_x_last, sigma_h_first, sigma_h_last;
    std::optional<NoiseMode> noise_mode;
};

struct ExperimentSpec {
    int n_rx = 16;
    int n_users = 4;
    int n_pilots = 8;
    std::vector<int> data_slots{32};
    std::vector<double> snr_db{25.0};
    int trials = 10;
    std::vector<Method> methods{Method::jed};
    int modulation = 4;
    ChannelModelSpec channel;
    /// "analytic" or a path to a JEDSCORE1 file.
    std::string prior = "analytic";
    double prior_variance = 1.0;
    /// "auto" (by SNR), "low-snr", "high-snr", or "paper" (reference-scale
    /// parameters with automatic symbol preset and no desk rescaling).
    std::string preset = "auto";
    SamplerOverrides overrides;
    std::uint64_t seed = 1;
    std::filesystem::path output;
    /// 0 means JED_WORKERS from the environment, else hardware concurrency.
    int workers = 0;

    void validate() const;

    /// Resolved sampler configuration for one grid point.
    JedConfig sampler_config(int n_data, double snr_db) const;

    /// key=value lines describing every resolved setting, in a fixed order.
    std::vector<std::pair<std::string, std::string>> describe() const;
};

/// Flat key=value config text ('#' starts a comment). Unknown keys are a
/// config error. Values overwrite fields of `spec`.
void apply_config_text(ExperimentSpec& spec, const std::string& text);
void apply_config_entry(ExperimentSpec& spec, const std::string& key, const std::string& value);

struct PointKey {
    Method method;
    int n_data;
    double snr_db;
};

struct SimulationResult {
    std::vector<PointKey> points;
    std::vector<std::vector<TrialOutcome>> trials;  // per point, ordered by trial index
    struct Failure {
        std::size_t point;
        int trial;
        std::string message;
        ErrorCategory category = ErrorCategory::divergence;
    };
    std::vector<Failure> failures;
};

/// Everything a trial needs that is built once per simulation.
struct TrialContext {
    const ExperimentSpec& spec;
    ChannelModel model;
    ChannelPrior prior;
    Constellation constellation;
    Constellation pilot_constellation;  // always QPSK

    explicit TrialContext(const ExperimentSpec& s);
};

/// Signals of one trial. Channel, pilots and pilot noise depend only on
/// (seed, SNR index, trial); data symbols and data noise are drawn column by
/// column, so a smaller D sees a prefix of a larger D's block.
struct TrialData {
    SystemDims dims;
    double sigma0 = 0.0;
    std::uint64_t seed = 0;
    ComplexMatrix h;
    ComplexMatrix x_pilots;
    ComplexMatrix x_data;
    ComplexMatrix y;  // [Y_P, Y_D]
};

TrialData make_trial_data(const TrialContext& ctx, int n_data, std::size_t snr_index, int trial);

/// Runs one trial of one method; exposed for tests.
TrialOutcome run_trial(const TrialContext& ctx, Method method, int n_data, std::size_t snr_index, int trial);

/// Seed of trial `trial` at SNR grid index `snr_index`. Shared by all methods
/// and all D values so that comparisons use common draws.
std::uint64_t trial_seed(std::uint64_t base, std::size_t snr_index, int trial) noexcept;

int resolve_worker_count(int requested);

SimulationResult run_simulation(const ExperimentSpec& spec);

ChannelPrior load_prior(const std::string& prior, double prior_variance);

inline constexpr const char* kCsvColumns =
    "kind,method,n_rx,n_users,n_pilots,n_data,snr_db,trial,seed,trials,nmse,nmse_db,ser,symbol_mse,snr_definition";

/// Writes the self-describing CSV: '#' comment lines echoing the resolved
/// config (the timestamp on its own "# generated=" line), the column
/// header, then per point its trial rows followed by one aggregate row.
/// Points with failures get no aggregate row.
void write_results_csv(std::ostream& out, const ExperimentSpec& spec, const SimulationResult& result,
                       bool include_timestamp = true);

/// Mean over finite values; NaN if there are none.
double finite_mean(const std::vector<double>& values);

struct PriorValidationRow {
    double sigma = 0.0;
    double mean_rel_error = 0.0;
    double max_rel_error = 0.0;
};

struct PriorValidationReport {
    std::vector<PriorValidationRow> rows;
    double mean_rel_error = 0.0;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct PriorValidationSpec {
    int n_rx = 16;
    int n_users = 4;
    ChannelModelSpec channel;
    double reference_variance = 1.0;
    double sigma_min = 0.01;
    double sigma_max = 1.0;
    int sigma_points = 10;
    int samples_per_sigma = 100;
    double tolerance = 0.10;
    std::uint64_t seed = 7;
};

/// Relative Frobenius error of `candidate` against the analytic smoothed
/// Gaussian score on perturbed channels H + sigma N, over a geometric sigma
/// grid. Passes when the mean relative error is at most the tolerance.
PriorValidationReport validate_prior(const ChannelPrior& candidate, const PriorValidationSpec& spec);

}  // namespace jed
