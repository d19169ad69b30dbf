#pragma once

#include <cstddef>
#include <vector>

#include "hubnet/error.hpp"

namespace hubnet {

// Minimal dense square matrix, row-major.  Carries no symmetry or range
// constraints; see AdjacencyMatrix for the constrained parameter type.
class SquareMatrix {
 public:
  SquareMatrix() : n_(0) {}
  explicit SquareMatrix(int n, double fill = 0.0)
      : n_(n), v_(static_cast<std::size_t>(n) * n, fill) {
    if (n < 0) throw Error(Errc::invalid_argument, "negative matrix size");
  }

  static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    SquareMatrix m(n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[i].size()) != n)
        throw Error(Errc::dimension_mismatch, "matrix rows are not square");
      for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  int size() const { return n_; }

  double operator()(int i, int j) const {
    return v_[static_cast<std::size_t>(i) * n_ + j];
  }
  double& operator()(int i, int j) {
    return v_[static_cast<std::size_t>(i) * n_ + j];
  }

  const std::vector<double>& data() const { return v_; }

  bool operator==(const SquareMatrix& o) const {
    return n_ == o.n_ && v_ == o.v_;
  }

 private:
  int n_;
  std::vector<double> v_;
};

}  // namespace hubnet
