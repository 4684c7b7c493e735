#pragma once

// JSON and CSV export. JSON is produced as text so that callers do not need
// the JSON library; numbers that carry more than double precision are written
// as decimal strings. CSV headers name every column with its unit.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "riccati/continuation.hpp"
#include "riccati/moments.hpp"
#include "riccati/solver.hpp"

namespace riccati {

/// 17 significant digits, scientific notation.
std::string format_double(double x);

std::string to_json(const SolveResult& result, const Grid& grid);
std::string to_json(const Atlas& atlas, const Grid& grid, bool include_states);
std::string to_json(std::span<const ScalingRecord> records, int digits);
std::string grid_json(const Grid& grid);

/// Interior values from a document written by to_json(SolveResult); the
/// stored nodes must match the grid.
Vector read_state_json(const std::string& text, const Grid& grid);

/// n, alpha_n, C_n, scaled_norm with `digits` significant digits.
void write_scaling_csv(std::ostream& out, std::span<const ScalingRecord> records, int digits);
/// One row per branch point.
void write_branches_csv(std::ostream& out, const Atlas& atlas);
void write_folds_csv(std::ostream& out, const Atlas& atlas);
/// Dense (t, value) samples of the interpolant, `per_interval` points per node gap.
void write_profile_csv(std::ostream& out, const Grid& grid, const Vector& values, Mode mode, int per_interval = 8);
void write_grid_csv(std::ostream& out, const Grid& grid);
void write_matrix_csv(std::ostream& out, const Matrix& matrix);

}  // namespace riccati
