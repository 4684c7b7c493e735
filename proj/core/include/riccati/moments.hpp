#pragma once

// Moment identities for the characteristic functions E_n = E(t; 2^(1/n)),
// the scaling coefficients C_n that turn eps * C_n * E_n into the leading
// perturbation of the constant solution near alpha_n, and the O(eps^2)
// remainder used to check that approximation.

#include <span>
#include <vector>

#include "riccati/precision.hpp"
#include "riccati/qseries.hpp"

namespace riccati {

struct ScalingRecord {
    int n = 0;
    WideReal alpha_n;
    std::vector<WideReal> moments_E;   // mu_0(E_n) ... mu_{n-1}(E_n)
    std::vector<WideReal> moments_E2;  // mu_0(E_n^2) ... mu_{n-1}(E_n^2)
    std::vector<WideReal> weights;     // w_0 ... w_{n-1}, w_{n-1} = 1
    WideReal C_n;
    WideReal scaled_norm;  // ||C_n E_n||_2 on [0, inf)
    unsigned significand_bits = 0;
};

/// mu_j(E) = j! sum_k b_k / alpha^((j+1)k).
WideReal moment_E(const SeriesSolution& series, int j);

/// mu_j(E^2) = j! sum_k sum_l b_k b_l / (alpha^k + alpha^l)^(j+1), both
/// indices running over the retained terms of `series`.
WideReal moment_E2(const SeriesSolution& series, int j);

/// Reverse recursion w_{n-1} = 1, w_{j-1} = j alpha_n^(j+1) / (alpha_n^j - 2) w_j.
std::vector<WideReal> weight_sequence(int n);

/// C_n = 2n mu_{n-1}(E_n) / (alpha_n sum_j w_j mu_j(E_n^2)). Throws
/// NumericalError when the denominator is below 1e-30 in magnitude.
ScalingRecord scaling_coefficient(int n, const PrecisionConfig& precision, int n_max = 6);
ScalingRecord scaling_coefficient(int n);

/// First-order approximation v(t) ~ eps C_n E(t; alpha_n) of the v-form
/// solution at alpha = alpha_n + eps, with the O(eps^2) remainder
///   r_n(t; eps) = [v' + v - 2 v((alpha_n+eps)t) - v^2((alpha_n+eps)t)] / eps^2
/// and its eps -> 0 limit.
class PerturbationModel {
public:
    explicit PerturbationModel(int n);
    PerturbationModel(int n, const PrecisionConfig& precision);

    int n() const { return record_.n; }
    const ScalingRecord& record() const { return record_; }
    const SeriesSolution& series() const { return series_; }

    double guess(double epsilon, double t) const;
    std::vector<double> guess(double epsilon, std::span<const double> t_values) const;
    double residual(double epsilon, double t) const;
    double limiting_residual(double t) const;

private:
    ScalingRecord record_;
    SeriesSolution series_;
};

std::vector<double> perturbation_guess(int n, double epsilon, std::span<const double> t_values);
double perturbation_residual(int n, double epsilon, double t);
double limiting_residual(int n, double t);

}  // namespace riccati
