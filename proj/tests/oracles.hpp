#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the score engine.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "jed/mimo_model.hpp"
#include "jed/types.hpp"

namespace oracle {

using jed::cdouble;
using jed::ComplexMatrix;

// (d/dRe + i d/dIm) f at z, central differences.
inline cdouble wirtinger_fd(const std::function<double(cdouble)>& f, cdouble z, double step) {
    const double dre = (f(z + cdouble(step, 0.0)) - f(z - cdouble(step, 0.0))) / (2.0 * step);
    const double dim = (f(z + cdouble(0.0, step)) - f(z - cdouble(0.0, step))) / (2.0 * step);
    return {dre, dim};
}

// Same, entrywise over a matrix argument.
inline ComplexMatrix wirtinger_fd(const std::function<double(const ComplexMatrix&)>& f,
                                  const ComplexMatrix& at, double step) {
    ComplexMatrix g(at.rows(), at.cols());
    for (Eigen::Index i = 0; i < at.rows(); ++i) {
        for (Eigen::Index j = 0; j < at.cols(); ++j) {
            auto fij = [&](cdouble v) {
                ComplexMatrix m = at;
                m(i, j) = v;
                return f(m);
            };
            g(i, j) = wirtinger_fd(fij, at(i, j), step);
        }
    }
    return g;
}

// log sum_k exp(-|x - x_k|^2 / (2 s^2)), stabilized.
inline double log_mixture(cdouble x, double s, const jed::Constellation& c) {
    double m = -1e300;
    for (cdouble p : c.points()) m = std::max(m, -std::norm(x - p) / (2.0 * s * s));
    double acc = 0.0;
    for (cdouble p : c.points()) acc += std::exp(-std::norm(x - p) / (2.0 * s * s) - m);
    return m + std::log(acc);
}

// Plain four-term (or M-term) weighted average, no max subtraction.
inline cdouble brute_denoiser(cdouble x, double s, const jed::Constellation& c) {
    cdouble num = 0.0;
    double den = 0.0;
    for (cdouble p : c.points()) {
        const double w = std::exp(-std::norm(x - p) / (2.0 * s * s));
        num += w * p;
        den += w;
    }
    return num / den;
}

// N_r x N_r form of the corrected symbol likelihood score.
inline ComplexMatrix symbol_score_rx_form(const ComplexMatrix& y, const ComplexMatrix& x, const ComplexMatrix& h,
                                          double sigma0, double sigma_x) {
    const Eigen::Index nr = h.rows();
    const ComplexMatrix a = sigma0 * sigma0 * ComplexMatrix::Identity(nr, nr) + sigma_x * sigma_x * h * h.adjoint();
    return h.adjoint() * a.partialPivLu().solve(y - h * x);
}

inline double rel_err(const ComplexMatrix& a, const ComplexMatrix& b) {
    const double s = std::max(a.norm(), b.norm());
    return s == 0.0 ? 0.0 : (a - b).norm() / s;
}

inline double rel_err(cdouble a, cdouble b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace oracle
