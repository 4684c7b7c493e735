#include "riccati/moments.hpp"

#include <fmt/format.h>

#include <cmath>

#include "riccati/diagnostics.hpp"

namespace riccati {

namespace {

template <class Real>
Real factorial(int j) {
    Real f(1);
    for (int i = 2; i <= j; ++i) f *= i;
    return f;
}

template <class Real>
Real integer_power(const Real& x, int p) {
    Real r(1);
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

void require_moment_index(int j) {
    if (j < 0) throw DomainError(fmt::format("moment index must be >= 0, got {}", j));
}

}  // namespace

WideReal moment_E(const SeriesSolution& series, int j) {
    require_moment_index(j);
    return std::visit(
        [j](const auto& terms) {
            using Real = std::decay_t<decltype(terms.alpha)>;
            Real sum(0);
            for (std::size_t k = 0; k < terms.coefficients.size(); ++k) {
                sum += terms.coefficients[k] / integer_power(terms.alpha_powers[k], j + 1);
            }
            return WideReal(factorial<Real>(j) * sum);
        },
        series.terms());
}

WideReal moment_E2(const SeriesSolution& series, int j) {
    require_moment_index(j);
    return std::visit(
        [j](const auto& terms) {
            using Real = std::decay_t<decltype(terms.alpha)>;
            const auto& b = terms.coefficients;
            const auto& a = terms.alpha_powers;
            Real diagonal(0);
            Real off_diagonal(0);
            for (std::size_t k = 0; k < b.size(); ++k) {
                diagonal += b[k] * b[k] / integer_power(Real(2 * a[k]), j + 1);
                for (std::size_t l = k + 1; l < b.size(); ++l) {
                    off_diagonal += b[k] * b[l] / integer_power(Real(a[k] + a[l]), j + 1);
                }
            }
            return WideReal(factorial<Real>(j) * (diagonal + 2 * off_diagonal));
        },
        series.terms());
}

std::vector<WideReal> weight_sequence(int n) {
    if (n < 1) throw DomainError(fmt::format("weight_sequence requires n >= 1, got {}", n));
    const WideReal alpha = characteristic_alpha_wide(n);
    std::vector<WideReal> w(static_cast<std::size_t>(n));
    w[n - 1] = 1;
    for (int j = n - 1; j >= 1; --j) {
        const WideReal alpha_j = mp::pow(alpha, j);
        w[j - 1] = j * alpha_j * alpha / (alpha_j - 2) * w[j];
    }
    return w;
}

ScalingRecord scaling_coefficient(int n, const PrecisionConfig& precision, int n_max) {
    if (n < 1 || n > n_max) {
        throw DomainError(fmt::format("scaling_coefficient requires 1 <= n <= {}, got {}", n_max, n));
    }
    const SeriesSolution series = build_series(Dilation::characteristic(n), precision);

    ScalingRecord record;
    record.n = n;
    record.alpha_n = characteristic_alpha_wide(n);
    record.significand_bits = precision.tier_bits();
    record.weights = weight_sequence(n);
    for (int j = 0; j < n; ++j) {
        record.moments_E.push_back(moment_E(series, j));
        record.moments_E2.push_back(moment_E2(series, j));
    }

    WideReal weighted(0);
    for (int j = 0; j < n; ++j) weighted += record.weights[j] * record.moments_E2[j];
    const WideReal denominator = record.alpha_n * weighted;
    if (mp::abs(denominator) < WideReal("1e-30")) {
        throw NumericalError(fmt::format("scaling coefficient denominator vanishes for n = {}", n));
    }
    record.C_n = 2 * n * record.moments_E[n - 1] / denominator;
    record.scaled_norm = mp::abs(record.C_n) * mp::sqrt(record.moments_E2[0]);
    return record;
}

ScalingRecord scaling_coefficient(int n) {
    return scaling_coefficient(n, PrecisionConfig::for_characteristic_index(n));
}

PerturbationModel::PerturbationModel(int n) : PerturbationModel(n, PrecisionConfig::for_characteristic_index(n)) {}

PerturbationModel::PerturbationModel(int n, const PrecisionConfig& precision)
    : record_(scaling_coefficient(n, precision, std::max(n, 6))),
      series_(build_series(Dilation::characteristic(n), precision)) {}

double PerturbationModel::guess(double epsilon, double t) const {
    if (!(t >= 0.0)) throw DomainError(fmt::format("perturbation guess requires t >= 0, got {}", t));
    return static_cast<double>(record_.C_n * evaluate_E_wide(series_, WideReal(t)) * WideReal(epsilon));
}

std::vector<double> PerturbationModel::guess(double epsilon, std::span<const double> t_values) const {
    if (std::abs(epsilon) > 0.2) {
        warn(fmt::format("perturbation offset |eps| = {} is outside the small-offset regime", std::abs(epsilon)));
    }
    std::vector<double> out;
    out.reserve(t_values.size());
    for (double t : t_values) out.push_back(guess(epsilon, t));
    return out;
}

double PerturbationModel::residual(double epsilon, double t) const {
    if (epsilon == 0.0) throw DomainError("perturbation_residual needs eps != 0; use limiting_residual");
    if (!(t >= 0.0)) throw DomainError(fmt::format("perturbation residual requires t >= 0, got {}", t));
    const WideReal eps(epsilon);
    const WideReal tw(t);
    const WideReal scale = record_.C_n * eps;
    const WideReal dilated = (record_.alpha_n + eps) * tw;

    const WideReal v = scale * evaluate_E_wide(series_, tw);
    const WideReal dv = scale * evaluate_E_derivative_wide(series_, tw);
    const WideReal v_dilated = scale * evaluate_E_wide(series_, dilated);
    const WideReal numerator = dv + v - 2 * v_dilated - v_dilated * v_dilated;
    return static_cast<double>(numerator / (eps * eps));
}

double PerturbationModel::limiting_residual(double t) const {
    if (!(t >= 0.0)) throw DomainError(fmt::format("limiting residual requires t >= 0, got {}", t));
    const WideReal tw(t);
    const WideReal dilated = record_.alpha_n * tw;
    const WideReal ce = record_.C_n * evaluate_E_wide(series_, dilated);
    return static_cast<double>(-2 * record_.C_n * evaluate_E_derivative_wide(series_, dilated) * tw - ce * ce);
}

std::vector<double> perturbation_guess(int n, double epsilon, std::span<const double> t_values) {
    return PerturbationModel(n).guess(epsilon, t_values);
}

double perturbation_residual(int n, double epsilon, double t) { return PerturbationModel(n).residual(epsilon, t); }

double limiting_residual(int n, double t) { return PerturbationModel(n).limiting_residual(t); }

}  // namespace riccati
