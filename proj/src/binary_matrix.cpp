#include "smid/binary_matrix.hpp"

#include <algorithm>
#include <set>

namespace smid {

bool is_zero_row(std::span<const std::uint8_t> row) {
  return std::all_of(row.begin(), row.end(), [](std::uint8_t v) { return v == 0; });
}

int find_row(const BinaryMatrix& m, std::span<const std::uint8_t> row) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (std::ranges::equal(m.row(r), row)) return static_cast<int>(r);
  }
  return -1;
}

bool has_duplicate_rows(const BinaryMatrix& m) {
  std::set<std::string> seen;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (!seen.insert(row_key(m.row(r))).second) return true;
  }
  return false;
}

std::string row_key(std::span<const std::uint8_t> row) {
  std::string key(row.size(), '0');
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i]) key[i] = '1';
  }
  return key;
}

BinaryMatrix binary_from_rows(const std::vector<std::vector<int>>& rows) {
  BinaryMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c] != 0 ? 1 : 0;
  }
  return m;
}

}  // namespace smid
