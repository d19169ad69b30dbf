#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hubnet/descriptive.hpp"
#include "hubnet/error.hpp"
#include "hubnet/evaluate.hpp"
#include "hubnet/matrix.hpp"
#include "hubnet/types.hpp"

namespace hubnet {

using json = nlohmann::ordered_json;

// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::io_failure, "read error on '" + path + "'");
  return std::move(ss).str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_failure, "cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw Error(Errc::io_failure, "write error on '" + path + "'");
}

// FNV-1a 64-bit digest, hex encoded; recorded in run manifests.
inline std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

inline std::vector<std::string> non_empty_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string::npos) pos = text.size();
    std::string line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
    start = pos + 1;
    if (pos == text.size()) break;
  }
  return lines;
}

inline double parse_double(const std::string& cell, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size())
      throw Error(Errc::malformed_file, where + ": bad number '" + cell + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (...) {
    throw Error(Errc::malformed_file, where + ": bad number '" + cell + "'");
  }
}

}  // namespace detail

// Grouped-data CSV: header of node labels (plus an optional hub column),
// then one 0/1 row per observation.
inline std::pair<GroupedData, std::optional<HubAssignments>> load_grouped_data(
    const std::string& path, const std::optional<std::string>& hub_column = {}) {
  const auto lines = detail::non_empty_lines(read_file(path));
  if (lines.empty()) throw Error(Errc::malformed_file, path + ": empty file");
  const auto header = detail::split_csv_line(lines[0]);

  int hub_col = -1;
  std::vector<std::string> labels;
  std::vector<int> node_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (hub_column && header[c] == *hub_column) {
      if (hub_col >= 0)
        throw Error(Errc::malformed_file,
                    path + ": hub column '" + *hub_column + "' appears twice");
      hub_col = static_cast<int>(c);
    } else {
      labels.push_back(header[c]);
      node_cols.push_back(static_cast<int>(c));
    }
  }
  if (hub_column && hub_col < 0)
    throw Error(Errc::malformed_file,
                path + ": hub column '" + *hub_column + "' not found in header");
  if (lines.size() < 2) throw Error(Errc::malformed_file, path + ": no data rows");

  std::vector<std::vector<std::uint8_t>> rows;
  std::vector<std::string> hub_labels;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = detail::split_csv_line(lines[r]);
    if (cells.size() != header.size())
      throw Error(Errc::malformed_file,
                  path + ": row " + std::to_string(r) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    std::vector<std::uint8_t> row;
    row.reserve(labels.size());
    for (std::size_t k = 0; k < node_cols.size(); ++k) {
      const std::string& cell = cells[node_cols[k]];
      if (cell == "0")
        row.push_back(0);
      else if (cell == "1")
        row.push_back(1);
      else
        throw Error(Errc::non_binary_entry,
                    path + ": row " + std::to_string(r) + ", column '" +
                        labels[k] + "' holds '" + cell + "', expected 0 or 1");
    }
    rows.push_back(std::move(row));
    if (hub_col >= 0) hub_labels.push_back(cells[hub_col]);
  }

  GroupedData g(std::move(labels), std::move(rows));
  std::optional<HubAssignments> hubs;
  if (hub_col >= 0) {
    std::vector<int> hub_idx;
    hub_idx.reserve(hub_labels.size());
    for (std::size_t t = 0; t < hub_labels.size(); ++t) {
      try {
        hub_idx.push_back(g.label_index(hub_labels[t]));
      } catch (const Error&) {
        throw Error(Errc::malformed_file,
                    path + ": row " + std::to_string(t + 1) + ": hub '" +
                        hub_labels[t] + "' is not a node label");
      }
    }
    hubs.emplace(g, std::move(hub_idx));
  }
  return {std::move(g), std::move(hubs)};
}

inline void save_grouped_data(const GroupedData& g, const std::string& path,
                              const HubAssignments* hubs = nullptr,
                              const std::string& hub_column = "hub") {
  std::ostringstream out;
  for (int i = 0; i < g.n(); ++i) {
    if (i) out << ',';
    out << g.labels()[i];
  }
  if (hubs) out << ',' << hub_column;
  out << '\n';
  for (int t = 0; t < g.T(); ++t) {
    for (int i = 0; i < g.n(); ++i) {
      if (i) out << ',';
      out << static_cast<int>(g.row(t)[i]);
    }
    if (hubs) out << ',' << g.labels()[hubs->hub(t)];
    out << '\n';
  }
  write_file(path, out.str());
}

enum class MatrixFormat { matrix_csv, edge_list, json_doc };

inline MatrixFormat matrix_format_from_name(const std::string& name) {
  if (name == "matrix-csv") return MatrixFormat::matrix_csv;
  if (name == "edge-list") return MatrixFormat::edge_list;
  if (name == "json") return MatrixFormat::json_doc;
  throw Error(Errc::invalid_argument, "unknown matrix format '" + name + "'");
}

inline void save_matrix(const SquareMatrix& m, const std::vector<std::string>& labels,
                        const std::string& path, MatrixFormat format,
                        const std::vector<std::pair<int, int>>& undefined_pairs = {}) {
  if (static_cast<int>(labels.size()) != m.size())
    throw Error(Errc::dimension_mismatch, "label count does not match matrix order");
  switch (format) {
    case MatrixFormat::matrix_csv: {
      std::ostringstream out;
      out << "node";
      for (const auto& l : labels) out << ',' << l;
      out << '\n';
      for (int i = 0; i < m.size(); ++i) {
        out << labels[i];
        for (int j = 0; j < m.size(); ++j) out << ',' << format_double(m(i, j));
        out << '\n';
      }
      write_file(path, out.str());
      return;
    }
    case MatrixFormat::edge_list: {
      std::ostringstream out;
      for (int i = 0; i < m.size(); ++i)
        for (int j = i + 1; j < m.size(); ++j)
          if (m(i, j) > 0.0)
            out << labels[i] << ',' << labels[j] << ',' << format_double(m(i, j)) << '\n';
      write_file(path, out.str());
      return;
    }
    case MatrixFormat::json_doc: {
      json doc;
      doc["labels"] = labels;
      json rows = json::array();
      for (int i = 0; i < m.size(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.size(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
      }
      doc["matrix"] = std::move(rows);
      if (!undefined_pairs.empty()) {
        json pairs = json::array();
        for (const auto& [i, j] : undefined_pairs) pairs.push_back({labels[i], labels[j]});
        doc["undefined_pairs"] = std::move(pairs);
      }
      write_file(path, doc.dump(2) + "\n");
      return;
    }
  }
}

inline std::pair<std::vector<std::string>, SquareMatrix> load_matrix_csv(
    const std::string& path) {
  const auto lines = detail::non_empty_lines(read_file(path));
  if (lines.size() < 2) throw Error(Errc::malformed_file, path + ": no matrix rows");
  const auto header = detail::split_csv_line(lines[0]);
  const int n = static_cast<int>(header.size()) - 1;
  if (n < 1) throw Error(Errc::malformed_file, path + ": header too short");
  if (static_cast<int>(lines.size()) != n + 1)
    throw Error(Errc::malformed_file,
                path + ": expected " + std::to_string(n + 1) + " lines, found " +
                    std::to_string(lines.size()));
  std::vector<std::string> labels(header.begin() + 1, header.end());
  SquareMatrix m(n);
  for (int i = 0; i < n; ++i) {
    const auto cells = detail::split_csv_line(lines[i + 1]);
    if (static_cast<int>(cells.size()) != n + 1)
      throw Error(Errc::malformed_file,
                  path + ": row " + std::to_string(i + 1) + " has " +
                      std::to_string(cells.size()) + " cells");
    for (int j = 0; j < n; ++j)
      m(i, j) = detail::parse_double(cells[j + 1],
                                     path + " row " + std::to_string(i + 1));
  }
  return {std::move(labels), std::move(m)};
}

inline std::pair<std::vector<std::string>, SquareMatrix> load_matrix_json(
    const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::malformed_file, path + ": " + e.what());
  }
  if (!doc.contains("labels") || !doc.contains("matrix"))
    throw Error(Errc::malformed_file, path + ": missing 'labels' or 'matrix'");
  std::vector<std::string> labels = doc["labels"].get<std::vector<std::string>>();
  const auto rows = doc["matrix"].get<std::vector<std::vector<double>>>();
  SquareMatrix m = SquareMatrix::from_rows(rows);
  if (static_cast<int>(labels.size()) != m.size())
    throw Error(Errc::malformed_file, path + ": label count does not match matrix");
  return {std::move(labels), std::move(m)};
}

namespace detail {

inline json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline double null_to_neg_inf(const json& v) {
  if (v.is_null()) return -std::numeric_limits<double>::infinity();
  return v.get<double>();
}

inline json adjacency_rows(const AdjacencyMatrix& a) {
  json rows = json::array();
  for (int i = 0; i < a.size(); ++i) {
    json row = json::array();
    for (int j = 0; j < a.size(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

// Estimation result document:
// {"labels": [...], "rho": [...], "A": [[...]], "log_likelihood": x,
//  "restarts": [{"seed", "iterations", "final_ll", "converged"}, ...]}.
inline json result_to_json(const std::vector<std::string>& labels,
                           const AdjacencyMatrix& a, const HubWeights& rho,
                           double log_likelihood,
                           const std::vector<RestartRecord>& restarts) {
  if (static_cast<int>(labels.size()) != a.size())
    throw Error(Errc::dimension_mismatch, "label count does not match matrix order");
  json doc;
  doc["labels"] = labels;
  doc["rho"] = rho.values();
  doc["A"] = detail::adjacency_rows(a);
  doc["log_likelihood"] = detail::finite_or_null(log_likelihood);
  json rs = json::array();
  for (const auto& r : restarts) {
    json rec;
    rec["seed"] = r.seed;
    rec["iterations"] = r.iterations;
    rec["final_ll"] = detail::finite_or_null(r.final_ll);
    rec["converged"] = r.converged;
    rs.push_back(std::move(rec));
  }
  doc["restarts"] = std::move(rs);
  return doc;
}

struct ResultDocument {
  std::vector<std::string> labels;
  AdjacencyMatrix A;
  HubWeights rho;
  double log_likelihood = 0.0;
};

inline ResultDocument result_from_json(const json& doc, const std::string& where) {
  for (const char* key : {"labels", "rho", "A", "log_likelihood"})
    if (!doc.contains(key))
      throw Error(Errc::malformed_file, where + ": missing '" + std::string(key) + "'");
  ResultDocument out;
  out.labels = doc["labels"].get<std::vector<std::string>>();
  out.A = AdjacencyMatrix::from_rows(doc["A"].get<std::vector<std::vector<double>>>());
  out.rho = HubWeights(doc["rho"].get<std::vector<double>>());
  out.log_likelihood = detail::null_to_neg_inf(doc["log_likelihood"]);
  if (static_cast<int>(out.labels.size()) != out.A.size() ||
      out.rho.size() != out.A.size())
    throw Error(Errc::malformed_file, where + ": inconsistent dimensions");
  return out;
}

inline ResultDocument load_result(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::malformed_file, path + ": " + e.what());
  }
  return result_from_json(doc, path);
}

// Simulation truth document: the result fields plus the 0/1 structure mask.
inline json truth_to_json(const std::vector<std::string>& labels,
                          const AdjacencyMatrix& a, const HubWeights& rho) {
  json doc;
  doc["labels"] = labels;
  doc["rho"] = rho.values();
  doc["A"] = detail::adjacency_rows(a);
  json structure = json::array();
  for (int i = 0; i < a.size(); ++i) {
    json row = json::array();
    for (int j = 0; j < a.size(); ++j)
      row.push_back(i != j && a(i, j) > 0.0 ? 1 : 0);
    structure.push_back(std::move(row));
  }
  doc["structure"] = std::move(structure);
  return doc;
}

// Partition CSV: "label,community" lines with communities 1 and 2; a header
// line "node,community" is allowed.  Every matrix label must appear once.
inline Partition load_partition(const std::string& path,
                                const std::vector<std::string>& labels) {
  const auto lines = detail::non_empty_lines(read_file(path));
  if (lines.empty()) throw Error(Errc::malformed_file, path + ": empty file");
  std::vector<int> side(labels.size(), 0);
  std::size_t start = 0;
  {
    const auto cells = detail::split_csv_line(lines[0]);
    if (cells.size() == 2 && cells[0] == "node" && cells[1] == "community") start = 1;
  }
  for (std::size_t r = start; r < lines.size(); ++r) {
    const auto cells = detail::split_csv_line(lines[r]);
    if (cells.size() != 2)
      throw Error(Errc::malformed_file,
                  path + ": line " + std::to_string(r + 1) + " is not 'label,community'");
    int idx = -1;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cells[0]) {
        idx = static_cast<int>(i);
        break;
      }
    if (idx < 0)
      throw Error(Errc::malformed_file,
                  path + ": unknown node '" + cells[0] + "' on line " +
                      std::to_string(r + 1));
    if (side[idx] != 0)
      throw Error(Errc::malformed_file,
                  path + ": node '" + cells[0] + "' assigned twice");
    if (cells[1] == "1")
      side[idx] = 1;
    else if (cells[1] == "2")
      side[idx] = 2;
    else
      throw Error(Errc::malformed_file,
                  path + ": community '" + cells[1] + "' on line " +
                      std::to_string(r + 1) + " is not 1 or 2");
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (side[i] == 0)
      throw Error(Errc::malformed_file,
                  path + ": node '" + labels[i] + "' has no community");
  return Partition(std::move(side));
}

inline json bootstrap_to_json(const BootstrapSummary& s,
                              const std::vector<std::string>& labels) {
  json doc;
  doc["labels"] = labels;
  json rows = json::array();
  for (int i = 0; i < s.sd_A.size(); ++i) {
    json row = json::array();
    for (int j = 0; j < s.sd_A.size(); ++j) row.push_back(s.sd_A(i, j));
    rows.push_back(std::move(row));
  }
  doc["sd_A"] = std::move(rows);
  doc["sd_rho"] = s.sd_rho;
  doc["sd_A_percentiles"] = {{"max", s.percentiles.max},   {"p95", s.percentiles.p95},
                             {"p75", s.percentiles.p75},   {"median", s.percentiles.median},
                             {"p25", s.percentiles.p25},   {"p5", s.percentiles.p5},
                             {"min", s.percentiles.min}};
  doc["replicates"] = s.replicates;
  doc["dropped"] = s.dropped;
  return doc;
}

}  // namespace hubnet
