#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hubnet/error.hpp"
#include "hubnet/matrix.hpp"

namespace hubnet {

// Binary membership data: T observed groups over a population of n labelled
// nodes.  Immutable after construction; all invariants (non-empty groups,
// 0/1 entries, unique labels) are enforced here so downstream code can rely
// on them.
class GroupedData {
 public:
  GroupedData(std::vector<std::string> node_labels,
              std::vector<std::vector<std::uint8_t>> rows)
      : labels_(std::move(node_labels)), rows_(std::move(rows)) {
    validate();
    members_.reserve(rows_.size());
    for (const auto& row : rows_) {
      std::vector<int> m;
      for (int i = 0; i < n(); ++i)
        if (row[i]) m.push_back(i);
      members_.push_back(std::move(m));
    }
  }

  int n() const { return static_cast<int>(labels_.size()); }
  int T() const { return static_cast<int>(rows_.size()); }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::vector<std::uint8_t>>& rows() const { return rows_; }
  const std::vector<std::uint8_t>& row(int t) const { return rows_[t]; }

  // Indices of the nodes present in observation t, ascending.
  const std::vector<int>& members(int t) const { return members_[t]; }

  int label_index(const std::string& label) const {
    for (int i = 0; i < n(); ++i)
      if (labels_[i] == label) return i;
    throw Error(Errc::invalid_argument, "unknown node label '" + label + "'");
  }

  // Number of observations containing node i.
  int appearance_count(int i) const {
    int c = 0;
    for (const auto& row : rows_) c += row[i];
    return c;
  }

  // New dataset built from rows [indices[0], indices[1], ...] of this one.
  // Rows are already validated, so the checks are skipped.
  GroupedData resample(const std::vector<int>& indices) const {
    std::vector<std::vector<std::uint8_t>> rows;
    rows.reserve(indices.size());
    for (int t : indices) rows.push_back(rows_[t]);
    return GroupedData(labels_, std::move(rows), unchecked_tag{});
  }

  bool operator==(const GroupedData& o) const {
    return labels_ == o.labels_ && rows_ == o.rows_;
  }

 private:
  struct unchecked_tag {};
  GroupedData(std::vector<std::string> labels,
              std::vector<std::vector<std::uint8_t>> rows, unchecked_tag)
      : labels_(std::move(labels)), rows_(std::move(rows)) {
    members_.reserve(rows_.size());
    for (const auto& row : rows_) {
      std::vector<int> m;
      for (int i = 0; i < n(); ++i)
        if (row[i]) m.push_back(i);
      members_.push_back(std::move(m));
    }
  }

  void validate() const {
    if (labels_.empty())
      throw Error(Errc::invalid_argument, "population size must be >= 1");
    if (rows_.empty())
      throw Error(Errc::invalid_argument, "observation count must be >= 1");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_) {
      if (l.empty())
        throw Error(Errc::malformed_file, "empty node label");
      if (l.find_first_of(",\r\n") != std::string::npos)
        throw Error(Errc::malformed_file,
                    "node label '" + l + "' contains a comma or newline");
      if (!seen.insert(l).second)
        throw Error(Errc::duplicate_label, "node label '" + l + "' repeats");
    }
    for (std::size_t t = 0; t < rows_.size(); ++t) {
      if (rows_[t].size() != labels_.size())
        throw Error(Errc::dimension_mismatch,
                    "row " + std::to_string(t + 1) + " has " +
                        std::to_string(rows_[t].size()) + " entries, expected " +
                        std::to_string(labels_.size()));
      bool any = false;
      for (std::size_t i = 0; i < rows_[t].size(); ++i) {
        if (rows_[t][i] > 1)
          throw Error(Errc::non_binary_entry,
                      "row " + std::to_string(t + 1) + ", column " +
                          std::to_string(i + 1) + " is not 0 or 1");
        any = any || rows_[t][i];
      }
      if (!any)
        throw Error(Errc::empty_group,
                    "row " + std::to_string(t + 1) + " is an empty group");
    }
  }

  std::vector<std::string> labels_;
  std::vector<std::vector<std::uint8_t>> rows_;
  std::vector<std::vector<int>> members_;
};

// Observed hub identities for each group, stored as one node index per
// observation.  Only valid together with the GroupedData it annotates: the
// hub of a group must belong to the group.
class HubAssignments {
 public:
  HubAssignments(const GroupedData& data, std::vector<int> hub_index)
      : hubs_(std::move(hub_index)) {
    if (static_cast<int>(hubs_.size()) != data.T())
      throw Error(Errc::dimension_mismatch,
                  "hub assignments do not match observation count");
    for (int t = 0; t < data.T(); ++t) {
      if (hubs_[t] < 0 || hubs_[t] >= data.n())
        throw Error(Errc::invalid_argument,
                    "row " + std::to_string(t + 1) + ": hub index out of range");
      if (!data.row(t)[hubs_[t]])
        throw Error(Errc::hub_not_member,
                    "row " + std::to_string(t + 1) + ": hub '" +
                        data.labels()[hubs_[t]] + "' is not a group member");
    }
  }

  int T() const { return static_cast<int>(hubs_.size()); }
  int hub(int t) const { return hubs_[t]; }
  const std::vector<int>& hubs() const { return hubs_; }

 private:
  std::vector<int> hubs_;
};

// Symmetric adjacency matrix with unit diagonal and entries in [0,1].
// Symmetry is exact by construction: set() writes both triangles.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(int n) : m_(n) {
    if (n < 1) throw Error(Errc::invalid_argument, "adjacency size must be >= 1");
    for (int i = 0; i < n; ++i) m_(i, i) = 1.0;
  }

  static AdjacencyMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    SquareMatrix m = SquareMatrix::from_rows(rows);
    const int n = m.size();
    if (n < 1) throw Error(Errc::invalid_argument, "adjacency size must be >= 1");
    AdjacencyMatrix a(n);
    for (int i = 0; i < n; ++i) {
      if (m(i, i) != 1.0)
        throw Error(Errc::invalid_argument,
                    "diagonal entry (" + std::to_string(i + 1) + "," +
                        std::to_string(i + 1) + ") must be exactly 1");
      for (int j = i + 1; j < n; ++j) {
        if (m(i, j) != m(j, i))
          throw Error(Errc::invalid_argument,
                      "matrix is not exactly symmetric at (" +
                          std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
        a.set(i, j, m(i, j));
      }
    }
    return a;
  }

  int size() const { return m_.size(); }
  double operator()(int i, int j) const { return m_(i, j); }

  // Writes the (i,j) and (j,i) entries.  The diagonal is pinned to 1.
  void set(int i, int j, double w) {
    if (i == j) {
      if (w != 1.0)
        throw Error(Errc::invalid_argument, "diagonal entries are fixed at 1");
      return;
    }
    if (!(w >= 0.0 && w <= 1.0) || std::isnan(w))
      throw Error(Errc::invalid_argument, "adjacency weight outside [0,1]");
    m_(i, j) = w;
    m_(j, i) = w;
  }

  const SquareMatrix& dense() const { return m_; }

  bool operator==(const AdjacencyMatrix& o) const { return m_ == o.m_; }

 private:
  SquareMatrix m_;
};

// Hub probability vector: non-negative, sums to 1 within 1e-12.
class HubWeights {
 public:
  HubWeights() = default;
  explicit HubWeights(std::vector<double> values) : v_(std::move(values)) {
    if (v_.empty()) throw Error(Errc::invalid_argument, "empty weight vector");
    double sum = 0.0;
    for (double x : v_) {
      if (!(x >= 0.0) || std::isnan(x))
        throw Error(Errc::invalid_argument, "hub weight is negative or NaN");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw Error(Errc::invalid_argument, "hub weights do not sum to 1");
  }

  int size() const { return static_cast<int>(v_.size()); }
  double operator[](int i) const { return v_[i]; }
  const std::vector<double>& values() const { return v_; }

  bool operator==(const HubWeights& o) const { return v_ == o.v_; }

 private:
  std::vector<double> v_;
};

// Posterior hub probabilities P(S_x = 1 | G^(t)), one row per observation.
// Row t is zero outside the members of group t and sums to 1.
class Responsibilities {
 public:
  Responsibilities(const GroupedData& data, std::vector<std::vector<double>> values)
      : v_(std::move(values)) {
    if (static_cast<int>(v_.size()) != data.T())
      throw Error(Errc::dimension_mismatch, "responsibility row count != T");
    for (int t = 0; t < data.T(); ++t) {
      if (static_cast<int>(v_[t].size()) != data.n())
        throw Error(Errc::dimension_mismatch, "responsibility row width != n");
      double sum = 0.0;
      for (int i = 0; i < data.n(); ++i) {
        if (!data.row(t)[i] && v_[t][i] != 0.0)
          throw Error(Errc::invalid_argument,
                      "non-member has positive responsibility in row " +
                          std::to_string(t + 1));
        sum += v_[t][i];
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw Error(Errc::invalid_argument,
                    "responsibility row " + std::to_string(t + 1) +
                        " does not sum to 1");
    }
  }

  int T() const { return static_cast<int>(v_.size()); }
  double operator()(int t, int i) const { return v_[t][i]; }
  const std::vector<std::vector<double>>& values() const { return v_; }

 private:
  std::vector<std::vector<double>> v_;
};

// One multistart restart of the EM fitter.
struct RestartRecord {
  std::uint64_t seed = 0;
  int iterations = 0;  // number of parameter updates (M-steps) applied
  double final_ll = -std::numeric_limits<double>::infinity();
  bool converged = false;
  std::vector<double> ll_trace;  // log likelihood per E-step evaluation
};

// Output of the EM fitter.  `A` has small entries zeroed at `zero_threshold`;
// `A_raw` is the winning restart's matrix before that final thresholding.
struct FitResult {
  AdjacencyMatrix A;
  AdjacencyMatrix A_raw;
  HubWeights rho;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::vector<RestartRecord> restarts;
  int chosen_restart = -1;
  double zero_threshold = 0.0;
};

}  // namespace hubnet
