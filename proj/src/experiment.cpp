#include "jed/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "jed/error.hpp"

namespace jed {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream ids inside one trial seed.
enum : std::uint64_t {
    kChannelStream = 1,
    kPilotStream = 2,
    kPilotNoiseStream = 3,
    kDataStream = 4,
    kDataNoiseStream = 5,
    kSamplerStream = 16,
};

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T v{};
    is >> v;
    if (is.fail() || !(is >> std::ws).eof()) {
        throw Error(ErrorCategory::config, "invalid value \"" + value + "\" for " + key);
    }
    return v;
}

template <class T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += f(v[i]);
    }
    return out;
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::jed: return "jed";
        case Method::single_langevin: return "single_langevin";
        case Method::ls: return "ls";
        case Method::lmmse: return "lmmse";
        case Method::mmse_pcsi: return "mmse_pcsi";
        case Method::ml_pcsi: return "ml_pcsi";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::jed, Method::single_langevin, Method::ls, Method::lmmse, Method::mmse_pcsi,
                     Method::ml_pcsi}) {
        if (method_name(m) == name) return m;
    }
    throw Error(ErrorCategory::config, "unknown method \"" + name + "\"");
}

// ---------------------------------------------------------------------------
// Spec

void ExperimentSpec::validate() const {
    SystemDims{n_rx, n_users, n_pilots, 0}.validate();
    if (data_slots.empty() || snr_db.empty() || methods.empty()) {
        throw Error(ErrorCategory::config, "experiment grids (n_data, snr_db, methods) must be non-empty");
    }
    for (int d : data_slots) {
        if (d < 0) throw Error(ErrorCategory::config, "n_data values must be >= 0");
    }
    if (trials < 1) {
        throw Error(ErrorCategory::config, "trials must be >= 1");
    }
    make_constellation(modulation);
    if (!(prior_variance > 0.0)) {
        throw Error(ErrorCategory::config, "prior_variance must be > 0");
    }
    if (preset != "auto" && preset != "paper" && preset != "low-snr" && preset != "high-snr") {
        throw Error(ErrorCategory::config, "preset must be auto, paper, low-snr or high-snr");
    }
    for (double snr : snr_db) {
        sampler_config(data_slots.front(), snr).validate();
    }
}

JedConfig ExperimentSpec::sampler_config(int n_data, double snr) const {
    const SystemDims dims{n_rx, n_users, n_pilots, n_data};
    const double sigma0 = sigma0_from_snr(snr, dims);
    JedConfig cfg;
    if (preset == "paper") {
        cfg = paper_config(preset_for_snr(snr));
        cfg.sigma0 = sigma0;
    } else {
        const std::string_view p = preset == "auto" ? preset_for_snr(snr) : std::string_view(preset);
        cfg = desk_config(p, dims, sigma0);
    }
    const auto& o = overrides;
    const int levels = o.levels.value_or(cfg.levels);
    if (o.steps) cfg.steps_per_level = *o.steps;
    if (o.eps_x) cfg.eps_x = *o.eps_x;
    if (o.eps_h) cfg.eps_h = *o.eps_h;
    if (o.tau_x) cfg.tau_x = *o.tau_x;
    if (o.tau_h) cfg.tau_h = *o.tau_h;
    if (o.noise_mode) cfg.noise_mode = *o.noise_mode;
    cfg.levels = levels;
    cfg.schedule_x = AnnealingSchedule(levels, o.sigma_x_first.value_or(cfg.schedule_x.first()),
                                       o.sigma_x_last.value_or(cfg.schedule_x.last()));
    cfg.schedule_h = AnnealingSchedule(levels, o.sigma_h_first.value_or(cfg.schedule_h.first()),
                                       o.sigma_h_last.value_or(cfg.schedule_h.last()));
    return cfg;
}

std::vector<std::pair<std::string, std::string>> ExperimentSpec::describe() const {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("n_rx", std::to_string(n_rx));
    kv.emplace_back("n_users", std::to_string(n_users));
    kv.emplace_back("n_pilots", std::to_string(n_pilots));
    kv.emplace_back("n_data", join<int>(data_slots, [](const int& d) { return std::to_string(d); }));
    kv.emplace_back("snr_db", join<double>(snr_db, [](const double& s) { return fmt_double(s); }));
    kv.emplace_back("trials", std::to_string(trials));
    kv.emplace_back("methods", join<Method>(methods, [](const Method& m) { return method_name(m); }));
    kv.emplace_back("modulation", std::to_string(modulation));
    kv.emplace_back("pilot_modulation", "4");
    kv.emplace_back("channel", channel.kind == ChannelModelKind::iid_gaussian ? "iid" : "kronecker");
    kv.emplace_back("rho_rx", fmt_double(channel.rho_rx));
    kv.emplace_back("rho_tx", fmt_double(channel.rho_tx));
    kv.emplace_back("prior", prior);
    kv.emplace_back("prior_variance", fmt_double(prior_variance));
    kv.emplace_back("preset", preset);
    kv.emplace_back("seed", std::to_string(seed));
    kv.emplace_back("snr_definition", kSnrDefinition);
    for (double snr : snr_db) {
        const JedConfig c = sampler_config(data_slots.front(), snr);
        std::ostringstream os;
        os << "L=" << c.levels << " T=" << c.steps_per_level << " eps_x=" << fmt_double(c.eps_x)
           << " eps_h=" << fmt_double(c.eps_h) << " tau_x=" << fmt_double(c.tau_x)
           << " tau_h=" << fmt_double(c.tau_h) << " sigma_x=[" << fmt_double(c.schedule_x.first()) << ","
           << fmt_double(c.schedule_x.last()) << "] sigma_h=[" << fmt_double(c.schedule_h.first()) << ","
           << fmt_double(c.schedule_h.last()) << "] noise="
           << (c.noise_mode == NoiseMode::independent ? "independent" : "shared")
           << " sigma0=" << fmt_double(c.sigma0);
        kv.emplace_back("sampler[snr_db=" + fmt_double(snr) + "]", os.str());
    }
    return kv;
}

void apply_config_entry(ExperimentSpec& spec, const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    auto& o = spec.overrides;
    if (key == "n_rx") spec.n_rx = parse_number<int>(key, value);
    else if (key == "n_users") spec.n_users = parse_number<int>(key, value);
    else if (key == "n_pilots") spec.n_pilots = parse_number<int>(key, value);
    else if (key == "n_data") {
        spec.data_slots.clear();
        for (const auto& v : split_list(value)) spec.data_slots.push_back(parse_number<int>(key, v));
    } else if (key == "snr_db") {
        spec.snr_db.clear();
        for (const auto& v : split_list(value)) spec.snr_db.push_back(parse_number<double>(key, v));
    } else if (key == "trials") spec.trials = parse_number<int>(key, value);
    else if (key == "methods") {
        spec.methods.clear();
        for (const auto& v : split_list(value)) spec.methods.push_back(parse_method(v));
    } else if (key == "modulation") spec.modulation = parse_number<int>(key, value);
    else if (key == "channel") {
        if (value == "iid") spec.channel.kind = ChannelModelKind::iid_gaussian;
        else if (value == "kronecker") spec.channel.kind = ChannelModelKind::kronecker_exponential;
        else throw Error(ErrorCategory::config, "channel must be iid or kronecker");
    } else if (key == "rho_rx") spec.channel.rho_rx = parse_number<double>(key, value);
    else if (key == "rho_tx") spec.channel.rho_tx = parse_number<double>(key, value);
    else if (key == "prior") spec.prior = value;
    else if (key == "prior_variance") spec.prior_variance = parse_number<double>(key, value);
    else if (key == "preset") spec.preset = value;
    else if (key == "levels") o.levels = parse_number<int>(key, value);
    else if (key == "steps") o.steps = parse_number<int>(key, value);
    else if (key == "eps_x") o.eps_x = parse_number<double>(key, value);
    else if (key == "eps_h") o.eps_h = parse_number<double>(key, value);
    else if (key == "tau_x") o.tau_x = parse_number<double>(key, value);
    else if (key == "tau_h") o.tau_h = parse_number<double>(key, value);
    else if (key == "sigma_x_first") o.sigma_x_first = parse_number<double>(key, value);
    else if (key == "sigma_x_last") o.sigma_x_last = parse_number<double>(key, value);
    else if (key == "sigma_h_first") o.sigma_h_first = parse_number<double>(key, value);
    else if (key == "sigma_h_last") o.sigma_h_last = parse_number<double>(key, value);
    else if (key == "noise_mode") {
        if (value == "independent") o.noise_mode = NoiseMode::independent;
        else if (value == "shared") o.noise_mode = NoiseMode::shared;
        else throw Error(ErrorCategory::config, "noise_mode must be independent or shared");
    } else if (key == "seed") spec.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "output") spec.output = value;
    else if (key == "workers") spec.workers = parse_number<int>(key, value);
    else throw Error(ErrorCategory::config, "unknown config key \"" + key + "\"");
}

void apply_config_text(ExperimentSpec& spec, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCategory::config, "config line " + std::to_string(line_no) + ": expected key=value");
        }
        apply_config_entry(spec, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

// ---------------------------------------------------------------------------
// Trials

ChannelPrior load_prior(const std::string& prior, double prior_variance) {
    if (prior == "analytic") {
        return ChannelPrior::gaussian_analytic(prior_variance);
    }
    return ChannelPrior::learned(read_score_model(prior));
}

TrialContext::TrialContext(const ExperimentSpec& s)
    : spec(s),
      model(s.channel.build(SystemDims{s.n_rx, s.n_users, s.n_pilots, 0})),
      prior(load_prior(s.prior, s.prior_variance)),
      constellation(make_constellation(s.modulation)),
      pilot_constellation(make_constellation(4)) {}

std::uint64_t trial_seed(std::uint64_t base, std::size_t snr_index, int trial) noexcept {
    return derive_seed(derive_seed(base, snr_index), static_cast<std::uint64_t>(trial));
}

TrialData make_trial_data(const TrialContext& ctx, int n_data, std::size_t snr_index, int trial) {
    const auto& spec = ctx.spec;
    TrialData t;
    t.dims = SystemDims{spec.n_rx, spec.n_users, spec.n_pilots, n_data};
    t.sigma0 = sigma0_from_snr(spec.snr_db.at(snr_index), t.dims);
    t.seed = trial_seed(spec.seed, snr_index, trial);

    Rng channel_rng(derive_seed(t.seed, kChannelStream));
    Rng pilot_rng(derive_seed(t.seed, kPilotStream));
    Rng pilot_noise_rng(derive_seed(t.seed, kPilotNoiseStream));
    Rng data_rng(derive_seed(t.seed, kDataStream));
    Rng data_noise_rng(derive_seed(t.seed, kDataNoiseStream));

    t.h = sample_channel(ctx.model, t.dims, channel_rng);
    t.x_pilots = sample_symbols(ctx.pilot_constellation, spec.n_users, spec.n_pilots, pilot_rng);
    t.x_data = sample_symbols(ctx.constellation, spec.n_users, n_data, data_rng);
    const ComplexMatrix y_p = forward(t.h, t.x_pilots, t.sigma0, pilot_noise_rng);
    const ComplexMatrix y_d = forward(t.h, t.x_data, t.sigma0, data_noise_rng);
    t.y.resize(spec.n_rx, spec.n_pilots + n_data);
    t.y.leftCols(spec.n_pilots) = y_p;
    t.y.rightCols(n_data) = y_d;
    return t;
}

namespace {

double symbol_mse(const ComplexMatrix& soft, const ComplexMatrix& truth) {
    if (truth.size() == 0) return kNaN;
    return (soft - truth).squaredNorm() / static_cast<double>(truth.size());
}

}  // namespace

TrialOutcome run_trial(const TrialContext& ctx, Method method, int n_data, std::size_t snr_index, int trial) {
    const TrialData t = make_trial_data(ctx, n_data, snr_index, trial);
    const auto& c = ctx.constellation;
    const ComplexMatrix y_pilots = t.y.leftCols(t.dims.n_pilots);
    const ComplexMatrix y_data = t.y.rightCols(n_data);

    TrialOutcome out;
    out.method = method_name(method);
    out.dims = t.dims;
    out.snr_db = ctx.spec.snr_db.at(snr_index);
    out.seed = t.seed;
    out.nmse = kNaN;
    out.ser = kNaN;
    out.symbol_mse = kNaN;

    auto detect_with = [&](const ComplexMatrix& h_est) {
        if (n_data == 0) return;
        const ComplexMatrix soft = mmse_equalize(y_data, h_est, t.sigma0);
        out.ser = ser(t.x_data, hard_decision(soft, c), c);
        out.symbol_mse = symbol_mse(soft, t.x_data);
    };

    switch (method) {
        case Method::jed: {
            JedConfig cfg = ctx.spec.sampler_config(n_data, out.snr_db);
            cfg.seed = derive_seed(t.seed, kSamplerStream);
            Rng rng(cfg.seed);
            const JedResult r = run_jed(t.y, t.x_pilots, cfg, ctx.prior, c, rng);
            out.nmse = nmse(t.h, r.h_hat);
            if (n_data > 0) {
                out.ser = ser(t.x_data, r.x_decided, c);
                out.symbol_mse = symbol_mse(r.x_raw, t.x_data);
            }
            break;
        }
        case Method::single_langevin: {
            JedConfig cfg = ctx.spec.sampler_config(0, out.snr_db);
            cfg.seed = derive_seed(t.seed, kSamplerStream);
            Rng rng(cfg.seed);
            const JedResult r = run_jed(y_pilots, t.x_pilots, cfg, ctx.prior, c, rng);
            out.nmse = nmse(t.h, r.h_hat);
            detect_with(r.h_hat);
            break;
        }
        case Method::ls: {
            const ComplexMatrix h = ls_channel_estimate(y_pilots, t.x_pilots);
            out.nmse = nmse(t.h, h);
            detect_with(h);
            break;
        }
        case Method::lmmse: {
            const ComplexMatrix h = lmmse_channel_estimate(y_pilots, t.x_pilots, t.sigma0, ctx.spec.prior_variance);
            out.nmse = nmse(t.h, h);
            detect_with(h);
            break;
        }
        case Method::mmse_pcsi:
            detect_with(t.h);
            break;
        case Method::ml_pcsi:
            if (n_data > 0) {
                out.ser = ser(t.x_data, ml_detect_bruteforce(y_data, t.h, c), c);
            }
            break;
    }
    return out;
}

int resolve_worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("JED_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

SimulationResult run_simulation(const ExperimentSpec& spec) {
    spec.validate();
    const TrialContext ctx(spec);

    SimulationResult result;
    for (Method m : spec.methods) {
        for (int d : spec.data_slots) {
            for (double snr : spec.snr_db) {
                result.points.push_back({m, d, snr});
            }
        }
    }
    const std::size_t n_points = result.points.size();
    const auto trials = static_cast<std::size_t>(spec.trials);
    result.trials.assign(n_points, std::vector<TrialOutcome>(trials));
    std::vector<std::vector<std::string>> errors(n_points, std::vector<std::string>(trials));
    std::vector<std::vector<ErrorCategory>> categories(n_points, std::vector<ErrorCategory>(trials, ErrorCategory::divergence));

    const std::size_t total = n_points * trials;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t task = next++; task < total; task = next++) {
            const std::size_t p = task / trials;
            const int trial = static_cast<int>(task % trials);
            const PointKey& key = result.points[p];
            const std::size_t snr_index = p % spec.snr_db.size();
            try {
                result.trials[p][static_cast<std::size_t>(trial)] =
                    run_trial(ctx, key.method, key.n_data, snr_index, trial);
            } catch (const Error& e) {
                errors[p][static_cast<std::size_t>(trial)] = e.what();
                categories[p][static_cast<std::size_t>(trial)] = e.category();
            } catch (const std::exception& e) {
                errors[p][static_cast<std::size_t>(trial)] = e.what();
            }
        }
    };
    const int n_workers = std::min<int>(resolve_worker_count(spec.workers), static_cast<int>(std::max<std::size_t>(total, 1)));
    std::vector<std::thread> pool;
    for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t p = 0; p < n_points; ++p) {
        for (std::size_t t = 0; t < trials; ++t) {
            if (!errors[p][t].empty()) {
                result.failures.push_back({p, static_cast<int>(t), errors[p][t], categories[p][t]});
            }
        }
    }
    return result;
}

double finite_mean(const std::vector<double>& values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        if (std::isfinite(v)) {
            sum += v;
            ++n;
        }
    }
    return n == 0 ? kNaN : sum / static_cast<double>(n);
}

void write_results_csv(std::ostream& out, const ExperimentSpec& spec, const SimulationResult& result,
                       bool include_timestamp) {
    for (const auto& [k, v] : spec.describe()) {
        out << "# " << k << '=' << v << '\n';
    }
    if (include_timestamp) {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        out << "# generated=" << buf << '\n';
    }
    out << kCsvColumns << '\n';

    std::vector<bool> failed(result.points.size(), false);
    for (const auto& f : result.failures) failed[f.point] = true;
    std::vector<std::vector<bool>> trial_failed(result.points.size(),
                                                std::vector<bool>(static_cast<std::size_t>(spec.trials), false));
    for (const auto& f : result.failures) trial_failed[f.point][static_cast<std::size_t>(f.trial)] = true;

    auto prefix = [&](const char* kind, const PointKey& key) {
        std::ostringstream os;
        os << kind << ',' << method_name(key.method) << ',' << spec.n_rx << ',' << spec.n_users << ','
           << spec.n_pilots << ',' << key.n_data << ',' << fmt_double(key.snr_db) << ',';
        return os.str();
    };

    for (std::size_t p = 0; p < result.points.size(); ++p) {
        const PointKey& key = result.points[p];
        std::vector<double> nm, se, sm;
        for (std::size_t t = 0; t < result.trials[p].size(); ++t) {
            if (trial_failed[p][t]) continue;
            const TrialOutcome& o = result.trials[p][t];
            out << prefix("trial", key) << t << ',' << o.seed << ",1," << fmt_double(o.nmse) << ','
                << fmt_double(std::isnan(o.nmse) ? kNaN : to_db(o.nmse)) << ',' << fmt_double(o.ser) << ','
                << fmt_double(o.symbol_mse) << ',' << kSnrDefinition << '\n';
            nm.push_back(o.nmse);
            se.push_back(o.ser);
            sm.push_back(o.symbol_mse);
        }
        if (failed[p]) continue;
        const double mean_nmse = finite_mean(nm);
        out << prefix("aggregate", key) << ',' << spec.seed << ',' << nm.size() << ',' << fmt_double(mean_nmse)
            << ',' << fmt_double(std::isnan(mean_nmse) ? kNaN : to_db(mean_nmse)) << ','
            << fmt_double(finite_mean(se)) << ',' << fmt_double(finite_mean(sm)) << ',' << kSnrDefinition << '\n';
    }
    out.flush();
}

// ---------------------------------------------------------------------------
// Prior validation

PriorValidationReport validate_prior(const ChannelPrior& candidate, const PriorValidationSpec& spec) {
    if (spec.sigma_points < 1 || spec.samples_per_sigma < 1 || !(spec.sigma_min > 0.0) ||
        spec.sigma_max < spec.sigma_min) {
        throw Error(ErrorCategory::config, "invalid prior validation grid");
    }
    const SystemDims dims{spec.n_rx, spec.n_users, 1, 0};
    dims.validate();
    const ChannelModel model = spec.channel.build(dims);
    const AnnealingSchedule grid(spec.sigma_points, spec.sigma_max, spec.sigma_min);
    const ChannelPrior reference = ChannelPrior::gaussian_analytic(spec.reference_variance);

    PriorValidationReport report;
    report.tolerance = spec.tolerance;
    Rng rng(spec.seed);
    double total = 0.0;
    std::size_t count = 0;
    for (int l = grid.levels(); l >= 1; --l) {
        const double sigma = grid.sigma(l);
        PriorValidationRow row;
        row.sigma = sigma;
        for (int s = 0; s < spec.samples_per_sigma; ++s) {
            const ComplexMatrix h = sample_channel(model, dims, rng) +
                                    complex_gaussian(dims.n_rx, dims.n_users, sigma * sigma, rng);
            const ComplexMatrix want = prior_score_channel(h, sigma, reference);
            const ComplexMatrix got = prior_score_channel(h, sigma, candidate);
            const double rel = (got - want).norm() / want.norm();
            row.mean_rel_error += rel;
            row.max_rel_error = std::max(row.max_rel_error, rel);
            total += rel;
            ++count;
        }
        row.mean_rel_error /= spec.samples_per_sigma;
        report.max_rel_error = std::max(report.max_rel_error, row.max_rel_error);
        report.rows.push_back(row);
    }
    report.mean_rel_error = total / static_cast<double>(count);
    report.passed = report.mean_rel_error <= spec.tolerance;
    return report;
}

}  // namespace jed
