#pragma once

#include <functional>
#include <string_view>

namespace riccati {

/// Receives non-fatal quality warnings (large perturbation offsets, far
/// extrapolation, ambiguous nullspaces). The default handler writes to stderr.
using WarningHandler = std::function<void(std::string_view)>;

void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace riccati
