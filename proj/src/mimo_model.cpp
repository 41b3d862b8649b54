#include "jed/mimo_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "jed/error.hpp"

namespace jed {

ComplexMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, double variance, Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
    ComplexMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            m(i, j) = {re, im};
        }
    }
    return m;
}

bool all_finite(const ComplexMatrix& m) noexcept {
    const double* p = reinterpret_cast<const double*>(m.data());
    return std::all_of(p, p + 2 * m.size(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Constellation

int Constellation::index_of(cdouble x) const noexcept {
    for (std::size_t k = 0; k < points_.size(); ++k) {
        if (points_[k] == x) {
            return static_cast<int>(k);
        }
    }
    return -1;
}

int Constellation::nearest_index(cdouble x) const noexcept {
    // points_ is sorted by Gray label, so strict '<' keeps the smaller label on ties.
    int best = 0;
    double best_d = std::norm(x - points_[0]);
    for (std::size_t k = 1; k < points_.size(); ++k) {
        const double d = std::norm(x - points_[k]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

Constellation make_constellation(int order) {
    if (order != 4 && order != 16 && order != 64) {
        throw Error(ErrorCategory::config,
                    "unsupported QAM order " + std::to_string(order) + " (expected 4, 16 or 64)");
    }
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    const int half_bits = static_cast<int>(std::lround(std::log2(static_cast<double>(side))));

    // Per-axis levels -(side-1), ..., side-1 in steps of 2. Mean of squared
    // levels is (side^2 - 1)/3 per axis, so the power over both axes is
    // 2 (side^2 - 1)/3.
    const double scale = 1.0 / std::sqrt(2.0 * (side * side - 1) / 3.0);

    struct Entry {
        std::uint32_t label;
        cdouble point;
    };
    std::vector<Entry> entries;
    entries.reserve(order);
    for (int i = 0; i < side; ++i) {
        for (int q = 0; q < side; ++q) {
            const auto gi = static_cast<std::uint32_t>(i ^ (i >> 1));
            const auto gq = static_cast<std::uint32_t>(q ^ (q >> 1));
            const double re = (2 * i - (side - 1)) * scale;
            const double im = (2 * q - (side - 1)) * scale;
            entries.push_back({(gi << half_bits) | gq, {re, im}});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.label < b.label; });

    Constellation c;
    c.bits_ = 2 * half_bits;
    for (const auto& e : entries) {
        c.points_.push_back(e.point);
        c.labels_.push_back(e.label);
        c.max_magnitude_ = std::max(c.max_magnitude_, std::abs(e.point));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Dimensions and channel models

void SystemDims::validate() const {
    if (n_rx <= 0 || n_users <= 0 || n_pilots <= 0 || n_data < 0) {
        std::ostringstream os;
        os << "invalid system dims N_r=" << n_rx << " N_u=" << n_users << " P=" << n_pilots
           << " D=" << n_data;
        throw Error(ErrorCategory::config, os.str());
    }
}

ComplexMatrix exponential_correlation(int n, double rho) {
    if (n <= 0 || !(rho >= 0.0 && rho < 1.0)) {
        throw Error(ErrorCategory::config, "exponential correlation needs n > 0 and 0 <= rho < 1");
    }
    ComplexMatrix r(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            r(i, j) = std::pow(rho, std::abs(i - j));
        }
    }
    return r;
}

namespace {

ComplexMatrix checked_sqrt(const ComplexMatrix& r, const char* which) {
    if (r.rows() != r.cols() || r.rows() == 0) {
        throw Error(ErrorCategory::config, std::string(which) + " correlation must be square and non-empty");
    }
    if (!all_finite(r)) {
        throw Error(ErrorCategory::config, std::string(which) + " correlation has non-finite entries");
    }
    const double norm = r.norm();
    if ((r - r.adjoint()).norm() > 1e-12 * std::max(norm, 1.0)) {
        throw Error(ErrorCategory::config, std::string(which) + " correlation is not Hermitian");
    }
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        if (std::abs(r(i, i) - 1.0) > 1e-12) {
            throw Error(ErrorCategory::config, std::string(which) + " correlation must have unit diagonal");
        }
    }
    if (r.isIdentity(0.0)) {
        return ComplexMatrix::Identity(r.rows(), r.cols());
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(r);
    const RealVector& lambda = eig.eigenvalues();
    if (lambda.minCoeff() < -1e-10 * std::max(lambda.maxCoeff(), 1.0)) {
        throw Error(ErrorCategory::config, std::string(which) + " correlation is not positive semidefinite");
    }
    const RealVector root = lambda.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace

ChannelModel ChannelModel::iid_gaussian() { return ChannelModel{}; }

ChannelModel ChannelModel::kronecker(ComplexMatrix r_rx, ComplexMatrix r_tx) {
    ChannelModel m;
    m.sqrt_rx_ = checked_sqrt(r_rx, "receive");
    m.sqrt_tx_ = checked_sqrt(r_tx, "transmit");
    m.variant_ = Kronecker{std::move(r_rx), std::move(r_tx)};
    return m;
}

std::string ChannelModel::describe() const {
    if (is_iid()) {
        return "iid";
    }
    const auto& k = std::get<Kronecker>(variant_);
    std::ostringstream os;
    os << "kronecker(rx=" << k.r_rx.rows() << "x" << k.r_rx.cols() << ",tx=" << k.r_tx.rows() << "x"
       << k.r_tx.cols() << ")";
    return os.str();
}

ComplexMatrix sample_channel(const ChannelModel& model, const SystemDims& dims, Rng& rng) {
    if (dims.n_rx <= 0 || dims.n_users <= 0) {
        throw Error(ErrorCategory::config, "channel dims must be positive");
    }
    ComplexMatrix g = complex_gaussian(dims.n_rx, dims.n_users, 1.0, rng);
    if (model.is_iid()) {
        return g;
    }
    if (model.sqrt_rx().rows() != dims.n_rx || model.sqrt_tx().rows() != dims.n_users) {
        throw Error(ErrorCategory::config, "Kronecker correlation sizes do not match N_r x N_u");
    }
    return model.sqrt_rx() * g * model.sqrt_tx();
}

ComplexMatrix sample_symbols(const Constellation& c, int n_users, int n_slots, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, c.order() - 1);
    const auto points = c.points();
    ComplexMatrix x(n_users, n_slots);
    for (int j = 0; j < n_slots; ++j) {
        for (int i = 0; i < n_users; ++i) {
            x(i, j) = points[static_cast<std::size_t>(pick(rng))];
        }
    }
    return x;
}

ComplexMatrix forward(const ComplexMatrix& h, const ComplexMatrix& x, double sigma0, Rng& rng) {
    if (h.cols() != x.rows()) {
        throw Error(ErrorCategory::shape, "forward: H is " + std::to_string(h.rows()) + "x" +
                                              std::to_string(h.cols()) + " but X has " +
                                              std::to_string(x.rows()) + " rows");
    }
    ComplexMatrix y = h * x;
    if (sigma0 > 0.0) {
        y += complex_gaussian(y.rows(), y.cols(), sigma0 * sigma0, rng);
    }
    return y;
}

double sigma0_from_snr(double snr_db, const SystemDims& dims) {
    return std::sqrt(static_cast<double>(dims.n_users) / std::pow(10.0, snr_db / 10.0));
}

}  // namespace jed
