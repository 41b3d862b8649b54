#include "jed/baselines.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "jed/error.hpp"
#include "jed/score_engine.hpp"

namespace jed {

namespace {

void require_same_cols(const ComplexMatrix& y, const ComplexMatrix& x, const char* who) {
    if (y.cols() != x.cols()) {
        throw Error(ErrorCategory::shape, std::string(who) + ": Y and X slot counts differ");
    }
}

// Solves H G = B for Hermitian G, returning H = B G^{-1}.
ComplexMatrix right_solve_hermitian(const ComplexMatrix& b, const ComplexMatrix& gram) {
    Eigen::LLT<ComplexMatrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCategory::rank, "pilot Gram matrix is not positive definite");
    }
    return llt.solve(b.adjoint()).adjoint();
}

}  // namespace

ComplexMatrix ls_channel_estimate(const ComplexMatrix& y_pilots, const ComplexMatrix& x_pilots) {
    require_same_cols(y_pilots, x_pilots, "ls_channel_estimate");
    const Eigen::Index n_users = x_pilots.rows();
    if (x_pilots.cols() < n_users) {
        throw Error(ErrorCategory::rank, "LS channel estimate needs P >= N_u (P=" +
                                             std::to_string(x_pilots.cols()) + ", N_u=" +
                                             std::to_string(n_users) + ")");
    }
    const ComplexMatrix gram = x_pilots * x_pilots.adjoint();
    Eigen::FullPivLU<ComplexMatrix> lu(gram);
    lu.setThreshold(1e-12);
    if (lu.rank() < n_users) {
        throw Error(ErrorCategory::rank, "pilot Gram matrix is singular");
    }
    return right_solve_hermitian(y_pilots * x_pilots.adjoint(), gram);
}

ComplexMatrix lmmse_channel_estimate(const ComplexMatrix& y_pilots, const ComplexMatrix& x_pilots,
                                     double sigma0, double prior_variance) {
    require_same_cols(y_pilots, x_pilots, "lmmse_channel_estimate");
    if (!(prior_variance > 0.0)) {
        throw Error(ErrorCategory::config, "L-MMSE needs a positive prior variance");
    }
    ComplexMatrix gram = x_pilots * x_pilots.adjoint();
    gram.diagonal().array() += sigma0 * sigma0 / prior_variance;
    return right_solve_hermitian(y_pilots * x_pilots.adjoint(), gram);
}

ComplexMatrix mmse_equalize(const ComplexMatrix& y_data, const ComplexMatrix& h, double sigma0) {
    if (y_data.rows() != h.rows()) {
        throw Error(ErrorCategory::shape, "mmse_equalize: Y_D rows differ from H rows");
    }
    // H^H (H H^H + s I)^{-1} = (H^H H + s I)^{-1} H^H; sigma0 = 0 with a
    // square invertible H reduces to zero forcing.
    ComplexMatrix gram = h.adjoint() * h;
    gram.diagonal().array() += sigma0 * sigma0;
    Eigen::FullPivLU<ComplexMatrix> lu(gram);
    if (!lu.isInvertible()) {
        throw Error(ErrorCategory::numerical, "MMSE filter is singular");
    }
    return lu.solve(h.adjoint() * y_data);
}

ComplexMatrix mmse_detect(const ComplexMatrix& y_data, const ComplexMatrix& h, double sigma0,
                          const Constellation& c) {
    return hard_decision(mmse_equalize(y_data, h, sigma0), c);
}

ComplexMatrix ml_detect_bruteforce(const ComplexMatrix& y_data, const ComplexMatrix& h,
                                   const Constellation& c) {
    if (y_data.rows() != h.rows()) {
        throw Error(ErrorCategory::shape, "ml_detect_bruteforce: Y_D rows differ from H rows");
    }
    const int n_users = static_cast<int>(h.cols());
    const int m = c.order();
    if (std::pow(static_cast<double>(m), n_users) > kMaxMlCandidates) {
        throw Error(ErrorCategory::capacity, "ML search space " + std::to_string(m) + "^" +
                                                 std::to_string(n_users) + " exceeds 1e6 candidates");
    }
    const auto points = c.points();
    const ComplexMatrix columns = h;  // H e_u, indexed by user

    ComplexMatrix out(n_users, y_data.cols());
    std::vector<int> digit(static_cast<std::size_t>(n_users));
    Eigen::VectorXcd hx(h.rows());
    for (Eigen::Index col = 0; col < y_data.cols(); ++col) {
        const Eigen::VectorXcd y = y_data.col(col);
        std::fill(digit.begin(), digit.end(), 0);
        std::vector<int> best = digit;
        double best_cost = std::numeric_limits<double>::infinity();
        while (true) {
            hx.setZero();
            for (int u = 0; u < n_users; ++u) {
                hx += columns.col(u) * points[static_cast<std::size_t>(digit[u])];
            }
            const double cost = (y - hx).squaredNorm();
            if (cost < best_cost) {
                best_cost = cost;
                best = digit;
            }
            int u = 0;
            while (u < n_users && ++digit[static_cast<std::size_t>(u)] == m) {
                digit[static_cast<std::size_t>(u)] = 0;
                ++u;
            }
            if (u == n_users) break;
        }
        for (int u = 0; u < n_users; ++u) {
            out(u, col) = points[static_cast<std::size_t>(best[static_cast<std::size_t>(u)])];
        }
    }
    return out;
}

double nmse(const ComplexMatrix& h, const ComplexMatrix& h_hat) {
    if (h.rows() != h_hat.rows() || h.cols() != h_hat.cols()) {
        throw Error(ErrorCategory::shape, "nmse: shapes differ");
    }
    const double ref = h.squaredNorm();
    if (ref == 0.0) {
        throw Error(ErrorCategory::numerical, "nmse is undefined for a zero channel");
    }
    return (h - h_hat).squaredNorm() / ref;
}

double ser(const ComplexMatrix& x_true, const ComplexMatrix& x_decided, const Constellation& c) {
    if (x_true.rows() != x_decided.rows() || x_true.cols() != x_decided.cols()) {
        throw Error(ErrorCategory::shape, "ser: shapes differ");
    }
    if (x_true.size() == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    Eigen::Index errors = 0;
    for (Eigen::Index j = 0; j < x_true.cols(); ++j) {
        for (Eigen::Index i = 0; i < x_true.rows(); ++i) {
            if (!c.contains(x_true(i, j)) || !c.contains(x_decided(i, j))) {
                throw Error(ErrorCategory::contract, "ser: entry is not a constellation point");
            }
            errors += x_true(i, j) != x_decided(i, j);
        }
    }
    return static_cast<double>(errors) / static_cast<double>(x_true.size());
}

}  // namespace jed
