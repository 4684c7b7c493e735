#include "riccati/qseries.hpp"

#include <fmt/format.h>

#include <cmath>
#include <utility>

namespace riccati {

namespace {

template <class Real>
SeriesSolution::Terms<Real> series_terms(const Dilation& dilation, const PrecisionConfig& precision,
                                          bool& converged) {
    SeriesSolution::Terms<Real> terms;
    terms.alpha = dilation.value<Real>();
    if (terms.alpha <= 1) {
        throw DomainError(fmt::format("series requires alpha > 1, got {}", dilation.describe()));
    }
    const Real tolerance(precision.term_tolerance);

    Real coefficient(1);
    Real power(1);
    Real partial(1);
    Real running_max(1);
    terms.coefficients.push_back(coefficient);
    terms.alpha_powers.push_back(power);

    converged = false;
    for (int k = 1; k < precision.max_terms; ++k) {
        const Real previous = mp::abs(coefficient);
        power *= terms.alpha;
        coefficient *= 2 / (1 - power);
        partial += coefficient;
        if (mp::abs(partial) > running_max) running_max = mp::abs(partial);
        terms.coefficients.push_back(coefficient);
        terms.alpha_powers.push_back(power);
        const Real magnitude = mp::abs(coefficient);
        if (magnitude < previous && magnitude < tolerance * running_max) {
            converged = true;
            break;
        }
    }
    return terms;
}

template <class Real>
Real sum_exponentials(const SeriesSolution::Terms<Real>& terms, const Real& t, bool derivative) {
    Real sum(0);
    for (std::size_t k = 0; k < terms.coefficients.size(); ++k) {
        Real term = terms.coefficients[k] * mp::exp(-terms.alpha_powers[k] * t);
        if (derivative) term *= -terms.alpha_powers[k];
        sum += term;
    }
    return sum;
}

void require_nonnegative(double t) {
    if (!(t >= 0.0)) throw DomainError(fmt::format("series evaluation requires t >= 0, got {}", t));
}

}  // namespace

double characteristic_alpha(int n) { return static_cast<double>(characteristic_alpha_wide(n)); }

WideReal characteristic_alpha_wide(int n) { return Dilation::characteristic(n).value<WideReal>(); }

std::optional<int> characteristic_index_of(double alpha, double tolerance) {
    if (!(alpha > 1.0)) return std::nullopt;
    const long n = std::lround(std::log(2.0) / std::log(alpha));
    if (n < 1 || n > 1000000) return std::nullopt;
    if (std::abs(alpha - std::pow(2.0, 1.0 / static_cast<double>(n))) > tolerance) return std::nullopt;
    return static_cast<int>(n);
}

SeriesSolution::SeriesSolution(Dilation alpha, PrecisionConfig precision, Storage terms, bool truncation_converged)
    : dilation_(std::move(alpha)),
      precision_(precision),
      terms_(std::move(terms)),
      truncation_converged_(truncation_converged) {}

std::size_t SeriesSolution::term_count() const {
    return std::visit([](const auto& t) { return t.coefficients.size(); }, terms_);
}

WideReal SeriesSolution::coefficient(std::size_t k) const {
    return std::visit([k](const auto& t) { return WideReal(t.coefficients.at(k)); }, terms_);
}

SeriesSolution build_series(const Dilation& alpha, const PrecisionConfig& precision) {
    bool converged = false;
    auto storage = with_precision_tier(precision, [&](auto tag) -> SeriesSolution::Storage {
        using Real = typename decltype(tag)::type;
        return series_terms<Real>(alpha, precision, converged);
    });
    return SeriesSolution(alpha, precision, std::move(storage), converged);
}

SeriesSolution build_series(double alpha, const PrecisionConfig& precision) {
    return build_series(Dilation::exact(alpha), precision);
}

WideReal evaluate_E_wide(const SeriesSolution& series, const WideReal& t) {
    if (t < 0) throw DomainError("series evaluation requires t >= 0");
    return std::visit(
        [&](const auto& terms) {
            using Real = std::decay_t<decltype(terms.alpha)>;
            return WideReal(sum_exponentials(terms, Real(t), false));
        },
        series.terms());
}

double evaluate_E(const SeriesSolution& series, double t) {
    require_nonnegative(t);
    return static_cast<double>(evaluate_E_wide(series, WideReal(t)));
}

WideReal evaluate_E_derivative_wide(const SeriesSolution& series, const WideReal& t) {
    if (t < 0) throw DomainError("series evaluation requires t >= 0");
    return std::visit(
        [&](const auto& terms) {
            using Real = std::decay_t<decltype(terms.alpha)>;
            return WideReal(sum_exponentials(terms, Real(t), true));
        },
        series.terms());
}

double evaluate_E_derivative(const SeriesSolution& series, double t) {
    require_nonnegative(t);
    return static_cast<double>(evaluate_E_derivative_wide(series, WideReal(t)));
}

WideReal lemma1_sum(const Dilation& alpha, const PrecisionConfig& precision) {
    const SeriesSolution series = build_series(alpha, precision);
    return std::visit(
        [](const auto& terms) {
            using Real = std::decay_t<decltype(terms.alpha)>;
            Real sum(0);
            for (const Real& b : terms.coefficients) sum += b;
            return WideReal(sum);
        },
        series.terms());
}

WideReal euler_product(const WideReal& c, const WideReal& q, const PrecisionConfig& precision) {
    if (mp::abs(q) >= 1) throw DomainError("euler_product requires |q| < 1");
    return with_precision_tier(precision, [&](auto tag) {
        using Real = typename decltype(tag)::type;
        const Real cr(c);
        const Real qr(q);
        const Real tolerance(precision.term_tolerance);
        Real product(1);
        Real qk(1);
        for (int k = 1; k <= precision.max_terms; ++k) {
            qk *= qr;
            const Real term = cr * qk;
            if (mp::abs(term) < tolerance) break;
            product *= 1 - term;
        }
        return WideReal(product);
    });
}

std::vector<double> series_zeros(const SeriesSolution& series, double t_lo, double t_hi, int samples) {
    if (!(t_lo > 0.0) || !(t_hi > t_lo) || samples < 2) {
        throw DomainError("series_zeros needs 0 < t_lo < t_hi and at least two samples");
    }
    const double ratio = std::pow(t_hi / t_lo, 1.0 / (samples - 1));
    auto sign_at = [&](double t) { return evaluate_E_wide(series, WideReal(t)).sign(); };

    std::vector<double> zeros;
    double t_prev = t_lo;
    int s_prev = sign_at(t_prev);
    for (int i = 1; i < samples; ++i) {
        const double t = i == samples - 1 ? t_hi : t_lo * std::pow(ratio, i);
        const int s = sign_at(t);
        if (s != 0 && s_prev != 0 && s != s_prev) {
            double lo = t_prev;
            double hi = t;
            for (int it = 0; it < 60 && hi - lo > 1e-14 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (sign_at(mid) == s_prev) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            zeros.push_back(0.5 * (lo + hi));
        }
        if (s != 0) s_prev = s;
        t_prev = t;
    }
    return zeros;
}

}  // namespace riccati
