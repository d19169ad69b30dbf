#pragma once

// Helpers shared by the test suites: exhaustive enumeration of group space,
// random parameter draws, and a scratch directory guard.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hubnet/hubnet.hpp"

namespace testutil {

inline std::vector<std::string> table1_labels() { return {"v1", "v2", "v3", "v4"}; }

inline std::vector<std::vector<std::uint8_t>> table1_rows() {
  return {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 0, 0}, {1, 0, 1, 1}, {0, 1, 1, 1}};
}

inline hubnet::GroupedData table1() {
  return hubnet::GroupedData(table1_labels(), table1_rows());
}

// All 2^n - 1 non-empty membership rows, in mask order.
inline std::vector<std::vector<std::uint8_t>> all_nonempty_rows(int n) {
  std::vector<std::vector<std::uint8_t>> rows;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::uint8_t> row(n, 0);
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) row[i] = 1;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline hubnet::AdjacencyMatrix random_adjacency(int n, hubnet::Rng& rng,
                                                double lo = 0.0, double hi = 0.95) {
  hubnet::AdjacencyMatrix a(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) a.set(i, j, lo + (hi - lo) * rng.uniform01());
  return a;
}

inline hubnet::HubWeights random_weights(int n, hubnet::Rng& rng) {
  std::vector<double> x(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform_open();
    sum += x[i];
  }
  for (int i = 0; i < n; ++i) x[i] /= sum;
  return hubnet::HubWeights(std::move(x));
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("hubnet_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testutil
