#pragma once

// Series solution of the linear equation u'(t) + u(t) = 2 u(alpha t):
//
//     E(t; alpha) = sum_k b_k exp(-alpha^k t),
//     b_0 = 1,  b_k = 2^k / ((1 - alpha)(1 - alpha^2)...(1 - alpha^k)),
//
// together with the q-Pochhammer product that decides when E(0; alpha)
// vanishes. Everything here is evaluated in MPFR arithmetic because the b_k
// alternate in sign and grow by several orders of magnitude before decaying.

#include <cstddef>
#include <variant>
#include <vector>

#include <optional>

#include "riccati/precision.hpp"

namespace riccati {

/// alpha_n = 2^(1/n), rounded to double. Throws DomainError for n < 1.
double characteristic_alpha(int n);
WideReal characteristic_alpha_wide(int n);
/// n with |alpha - 2^(1/n)| <= tolerance, if any.
std::optional<int> characteristic_index_of(double alpha, double tolerance = 1e-12);

class SeriesSolution {
public:
    template <class Real>
    struct Terms {
        Real alpha;
        std::vector<Real> coefficients;  // b_0 ... b_K
        std::vector<Real> alpha_powers;  // alpha^0 ... alpha^K
    };
    using Storage = std::variant<Terms<Real128>, Terms<Real256>, Terms<Real512>, Terms<Real1024>>;

    SeriesSolution(Dilation alpha, PrecisionConfig precision, Storage terms, bool truncation_converged);

    const Dilation& dilation() const { return dilation_; }
    double alpha() const { return dilation_.to_double(); }
    const PrecisionConfig& precision() const { return precision_; }

    /// Number of retained terms, K + 1.
    std::size_t term_count() const;
    WideReal coefficient(std::size_t k) const;
    /// False when the hard cap max_terms stopped the construction before the
    /// relative cutoff was met.
    bool truncation_converged() const { return truncation_converged_; }

    const Storage& terms() const { return terms_; }

private:
    Dilation dilation_;
    PrecisionConfig precision_;
    Storage terms_;
    bool truncation_converged_;
};

/// Coefficients from the product formula. Terms are retained until
/// |b_k| < term_tolerance * (running max of |partial sums|) once the
/// coefficients have started to shrink, or until max_terms is reached.
SeriesSolution build_series(const Dilation& alpha, const PrecisionConfig& precision);
SeriesSolution build_series(double alpha, const PrecisionConfig& precision);

/// E(t) = sum_k b_k exp(-alpha^k t).
WideReal evaluate_E_wide(const SeriesSolution& series, const WideReal& t);
double evaluate_E(const SeriesSolution& series, double t);

/// E'(t) = -sum_k b_k alpha^k exp(-alpha^k t).
WideReal evaluate_E_derivative_wide(const SeriesSolution& series, const WideReal& t);
double evaluate_E_derivative(const SeriesSolution& series, double t);

/// 1 + sum_{k>=1} b_k, accumulated term by term (no product shortcut).
WideReal lemma1_sum(const Dilation& alpha, const PrecisionConfig& precision);

/// prod_{k>=1} (1 - c q^k), stopped once |c q^k| < term_tolerance.
WideReal euler_product(const WideReal& c, const WideReal& q, const PrecisionConfig& precision);

/// Sign changes of E on a geometric grid over [t_lo, t_hi], each refined by
/// bisection. Points below t_lo are skipped: every derivative of a
/// characteristic function vanishes at t = 0, so the profile there is flat.
std::vector<double> series_zeros(const SeriesSolution& series, double t_lo = 1e-3, double t_hi = 50.0,
                                 int samples = 10000);

}  // namespace riccati
