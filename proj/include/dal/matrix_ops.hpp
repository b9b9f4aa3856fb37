#pragma once

#include <span>

#include "dal/error.hpp"
#include "dal/mlp.hpp"

namespace dal {

/// Copies the listed rows, in order, into a new matrix.
inline Matrix gather_rows(const Matrix& source, std::span<const Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    DAL_REQUIRE(rows[i] < static_cast<Index>(source.rows()), "gather_rows: row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace dal
