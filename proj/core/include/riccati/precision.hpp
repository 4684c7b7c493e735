#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <optional>
#include <string>
#include <type_traits>

#include "riccati/errors.hpp"

namespace riccati {

namespace mp = boost::multiprecision;

/// Fixed-width MPFR reals. The template argument is in decimal digits; the
/// tiers below are chosen so that the resulting significand is at least
/// 128, 256, 512 and 1024 bits respectively.
template <unsigned Digits10>
using MpfrReal = mp::number<mp::mpfr_float_backend<Digits10>, mp::et_off>;

using Real128 = MpfrReal<40>;
using Real256 = MpfrReal<77>;
using Real512 = MpfrReal<155>;
using Real1024 = MpfrReal<309>;

/// Carrier type for high-precision results crossing the public API. Every
/// tier converts into it without rounding.
using WideReal = Real1024;

struct PrecisionConfig {
    unsigned significand_bits = 256;
    /// Relative cutoff for series truncation.
    double term_tolerance = 1e-40;
    int max_terms = 1000;

    void validate() const;

    /// Significand width actually used: the smallest supported tier that is
    /// at least `significand_bits` wide.
    unsigned tier_bits() const;

    /// 256 bits for n <= 4 and 512 bits beyond; tolerance 1e-40, 1000 terms.
    static PrecisionConfig for_characteristic_index(int n);
};

/// Calls `fn(std::type_identity<Real>{})` with the MPFR tier selected by
/// `config`. All branches must return the same type.
template <class Fn>
decltype(auto) with_precision_tier(const PrecisionConfig& config, Fn&& fn) {
    config.validate();
    switch (config.tier_bits()) {
        case 128:
            return fn(std::type_identity<Real128>{});
        case 256:
            return fn(std::type_identity<Real256>{});
        case 512:
            return fn(std::type_identity<Real512>{});
        default:
            return fn(std::type_identity<Real1024>{});
    }
}

/// The dilation parameter alpha, kept symbolic where that matters: the
/// characteristic values 2^(1/n) and their offsets are re-evaluated at the
/// working precision instead of being rounded to double first.
class Dilation {
public:
    /// alpha = 2^(1/n).
    static Dilation characteristic(int n);
    /// alpha = 2^(1/n) + offset, the offset taken as an exact binary double.
    static Dilation near_characteristic(int n, double offset);
    /// alpha equal to the given binary double.
    static Dilation exact(double alpha);

    std::optional<int> characteristic_index() const { return index_; }
    double offset() const { return offset_; }

    template <class Real>
    Real value() const {
        if (!index_) return Real(offset_);
        Real alpha = mp::pow(Real(2), Real(1) / Real(*index_));
        return alpha + Real(offset_);
    }

    double to_double() const { return static_cast<double>(value<WideReal>()); }
    std::string describe() const;

private:
    Dilation(std::optional<int> index, double offset) : index_(index), offset_(offset) {}

    std::optional<int> index_;
    double offset_ = 0.0;
};

/// Decimal rendering with `digits` significant digits.
std::string to_decimal_string(const WideReal& x, int digits);

}  // namespace riccati
