#include "riccati/precision.hpp"

#include <fmt/format.h>

#include <cmath>
#include <sstream>

namespace riccati {

void PrecisionConfig::validate() const {
    if (significand_bits < 64) {
        throw ConfigurationError(fmt::format("significand_bits must be >= 64, got {}", significand_bits));
    }
    if (significand_bits > 1024) {
        throw ConfigurationError(
            fmt::format("significand_bits {} exceeds the widest supported tier (1024)", significand_bits));
    }
    if (!(term_tolerance > 0.0) || !(term_tolerance < 1.0)) {
        throw ConfigurationError(fmt::format("term_tolerance must lie in (0, 1), got {}", term_tolerance));
    }
    if (max_terms < 1) {
        throw ConfigurationError(fmt::format("max_terms must be >= 1, got {}", max_terms));
    }
}

unsigned PrecisionConfig::tier_bits() const {
    if (significand_bits <= 128) return 128;
    if (significand_bits <= 256) return 256;
    if (significand_bits <= 512) return 512;
    return 1024;
}

PrecisionConfig PrecisionConfig::for_characteristic_index(int n) {
    PrecisionConfig config;
    config.significand_bits = n <= 4 ? 256 : 512;
    return config;
}

Dilation Dilation::characteristic(int n) {
    if (n < 1) throw DomainError(fmt::format("characteristic index must be >= 1, got {}", n));
    return Dilation(n, 0.0);
}

Dilation Dilation::near_characteristic(int n, double offset) {
    if (n < 1) throw DomainError(fmt::format("characteristic index must be >= 1, got {}", n));
    return Dilation(n, offset);
}

Dilation Dilation::exact(double alpha) { return Dilation(std::nullopt, alpha); }

std::string Dilation::describe() const {
    if (!index_) return fmt::format("{:.17g}", offset_);
    if (offset_ == 0.0) return fmt::format("2^(1/{})", *index_);
    return fmt::format("2^(1/{}) {} {:.17g}", *index_, offset_ < 0 ? '-' : '+', std::abs(offset_));
}

std::string to_decimal_string(const WideReal& x, int digits) {
    std::ostringstream out;
    out.precision(digits > 1 ? digits - 1 : 0);
    out << std::scientific << x;
    return out.str();
}

}  // namespace riccati
