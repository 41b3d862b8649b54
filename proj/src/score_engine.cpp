#include "jed/score_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "jed/error.hpp"

namespace jed {

namespace {

std::string dims_of(const ComplexMatrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCategory::shape, what);
}

}  // namespace

ChannelPrior ChannelPrior::gaussian_analytic(double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw Error(ErrorCategory::config, "analytic channel prior needs a positive variance");
    }
    ChannelPrior p;
    p.variant_ = GaussianAnalyticPrior{variance};
    return p;
}

ChannelPrior ChannelPrior::learned(ScoreModelWeights weights) {
    weights.validate();
    ChannelPrior p;
    p.variant_ = LearnedPrior{std::make_shared<const ScoreModelWeights>(std::move(weights))};
    return p;
}

ComplexMatrix likelihood_score_symbols(const ComplexMatrix& y_data, const ComplexMatrix& x_data,
                                       const ComplexMatrix& h, const NoiseLevelState& state) {
    require(y_data.rows() == h.rows() && x_data.rows() == h.cols() && y_data.cols() == x_data.cols(),
            "likelihood_score_symbols: Y_D " + dims_of(y_data) + ", X_D " + dims_of(x_data) + ", H " +
                dims_of(h));
    const Eigen::Index n_users = h.cols();
    if (x_data.cols() == 0) {
        return ComplexMatrix(n_users, 0);
    }
    const ComplexMatrix residual = y_data - h * x_data;
    const ComplexMatrix rhs = h.adjoint() * residual;

    ComplexMatrix gram = (state.sigma_x * state.sigma_x) * (h.adjoint() * h);
    gram.diagonal().array() += state.sigma0 * state.sigma0;
    Eigen::LLT<ComplexMatrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCategory::numerical,
                    "symbol likelihood score: regularized Gram matrix is singular");
    }
    return llt.solve(rhs);
}

ComplexMatrix likelihood_score_channel(const ComplexMatrix& y, const ComplexMatrix& x_full,
                                       const ComplexMatrix& h, const NoiseLevelState& state) {
    require(y.rows() == h.rows() && x_full.rows() == h.cols() && y.cols() == x_full.cols(),
            "likelihood_score_channel: Y " + dims_of(y) + ", X " + dims_of(x_full) + ", H " + dims_of(h));
    const double denom = state.sigma0 * state.sigma0 + state.sigma_h * state.sigma_h;
    return (y - h * x_full) * x_full.adjoint() / denom;
}

cdouble denoiser_expectation(cdouble x_noisy, double sigma_x, const Constellation& c) {
    const auto points = c.points();
    const double inv_two_var = 1.0 / (2.0 * sigma_x * sigma_x);

    // Softmax with the largest logit subtracted; the nearest point has weight 1.
    double max_logit = -std::numeric_limits<double>::infinity();
    for (const cdouble& p : points) {
        max_logit = std::max(max_logit, -std::norm(x_noisy - p) * inv_two_var);
    }
    cdouble num{0.0, 0.0};
    double den = 0.0;
    for (const cdouble& p : points) {
        const double w = std::exp(-std::norm(x_noisy - p) * inv_two_var - max_logit);
        num += w * p;
        den += w;
    }
    return num / den;
}

ComplexMatrix prior_score_symbols(const ComplexMatrix& x_data, double sigma_x, const Constellation& c) {
    const double inv_var = 1.0 / (sigma_x * sigma_x);
    ComplexMatrix out(x_data.rows(), x_data.cols());
    for (Eigen::Index j = 0; j < x_data.cols(); ++j) {
        for (Eigen::Index i = 0; i < x_data.rows(); ++i) {
            const cdouble x = x_data(i, j);
            out(i, j) = (denoiser_expectation(x, sigma_x, c) - x) * inv_var;
        }
    }
    return out;
}

namespace {

ComplexMatrix learned_channel_score(const ComplexMatrix& h, double sigma_h, const ScoreModelWeights& w) {
    const Eigen::Index n = h.size();
    if (w.output_dim() != 2 * n) {
        throw Error(ErrorCategory::config, "score network output dim " + std::to_string(w.output_dim()) +
                                               " does not match channel " + dims_of(h));
    }
    std::vector<double> input(static_cast<std::size_t>(2 * n + 1));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
            input[k++] = h(i, j).real() * w.input_scale;
            input[k++] = h(i, j).imag() * w.input_scale;
        }
    }
    input[k] = w.sigma_encoding == SigmaEncoding::log ? std::log(std::max(sigma_h, 1e-12)) : sigma_h;

    const RealVector raw = w.evaluate(input);
    ComplexMatrix out(h.rows(), h.cols());
    k = 0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
            out(i, j) = cdouble{raw[static_cast<Eigen::Index>(k)], raw[static_cast<Eigen::Index>(k + 1)]} *
                        static_cast<double>(w.output_scale);
            k += 2;
        }
    }
    return out;
}

}  // namespace

ComplexMatrix prior_score_channel(const ComplexMatrix& h, double sigma_h, const ChannelPrior& prior) {
    if (const auto* g = std::get_if<GaussianAnalyticPrior>(&prior.variant())) {
        return -h / (g->variance + sigma_h * sigma_h);
    }
    return learned_channel_score(h, sigma_h, *std::get<LearnedPrior>(prior.variant()).weights);
}

ComplexMatrix stack_slots(const ComplexMatrix& x_pilots, const ComplexMatrix& x_data) {
    require(x_pilots.rows() == x_data.rows() || x_data.cols() == 0,
            "stack_slots: pilot " + dims_of(x_pilots) + " vs data " + dims_of(x_data));
    ComplexMatrix x(x_pilots.rows(), x_pilots.cols() + x_data.cols());
    x.leftCols(x_pilots.cols()) = x_pilots;
    if (x_data.cols() > 0) {
        x.rightCols(x_data.cols()) = x_data;
    }
    return x;
}

PosteriorScores joint_posterior_scores(const ComplexMatrix& y, const ComplexMatrix& x_data,
                                       const ComplexMatrix& h, const ComplexMatrix& x_pilots,
                                       const NoiseLevelState& state, const ChannelPrior& prior,
                                       const Constellation& c) {
    const Eigen::Index p = x_pilots.cols();
    require(y.cols() == p + x_data.cols(), "joint_posterior_scores: Y has " + std::to_string(y.cols()) +
                                               " columns, expected P + D = " +
                                               std::to_string(p + x_data.cols()));
    PosteriorScores s;
    s.symbols = likelihood_score_symbols(y.rightCols(x_data.cols()), x_data, h, state) +
                prior_score_symbols(x_data, state.sigma_x, c);
    s.channel = likelihood_score_channel(y, stack_slots(x_pilots, x_data), h, state) +
                prior_score_channel(h, state.sigma_h, prior);
    return s;
}

ComplexMatrix hard_decision(const ComplexMatrix& x, const Constellation& c) {
    const auto points = c.points();
    ComplexMatrix out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            out(i, j) = points[static_cast<std::size_t>(c.nearest_index(x(i, j)))];
        }
    }
    return out;
}

}  // namespace jed
