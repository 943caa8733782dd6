#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smid/matrix.hpp"

namespace smid {

/// Boolean matrix stored one byte per entry (0 or 1).
using BinaryMatrix = Grid<std::uint8_t>;

bool is_zero_row(std::span<const std::uint8_t> row);

/// Index of the first row of `m` equal to `row`, or -1.
int find_row(const BinaryMatrix& m, std::span<const std::uint8_t> row);

/// True when two rows of `m` are equal.
bool has_duplicate_rows(const BinaryMatrix& m);

/// "0110"-style rendering, used in tables and as a map key.
std::string row_key(std::span<const std::uint8_t> row);

BinaryMatrix binary_from_rows(const std::vector<std::vector<int>>& rows);

}  // namespace smid
