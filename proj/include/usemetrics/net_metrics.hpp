#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "usemetrics/usage_graph.hpp"

namespace usemetrics {

struct AdjacencyMatrix {
  enum class Mode { Binary, Weighted };

  std::vector<std::string> nodes;
  Eigen::MatrixXd a;  // entries >= 0
  Mode mode = Mode::Weighted;

  Eigen::Index n() const { return a.rows(); }
};

AdjacencyMatrix adjacency_from_pairs(const PairFrequencyTable& pairs);

// Entry-wise a > 0 indicator.
AdjacencyMatrix binarized(const AdjacencyMatrix& A);

// Divides each nonzero column by its sum; the orientation expected by
// geodesic_weight. Zero columns stay zero.
AdjacencyMatrix column_normalized(const AdjacencyMatrix& A);

enum class Direction { In, Out };

// In: C_in(v_i) = sum_j a[j][i] / sum_all a (and symmetrically for Out);
// each direction sums to 1. Throws Error(EmptyMatrix) when sum a == 0 or
// the matrix is empty.
Eigen::VectorXd degree_centrality(const AdjacencyMatrix& A, Direction dir);

struct PowerIterationResult {
  Eigen::VectorXd values;
  int iterations = 0;
  double last_delta = 0.0;
};

// Fixed point of PR(v_i) = (1-lambda)/N + lambda * sum_j PR(v_j)/outdeg(v_j)
// over in-neighbors j, with dangling mass redistributed uniformly each
// iteration. Edge multiplicity does not matter: the walk follows the
// binarized graph. Throws Error(NonConvergence) with iterations and last
// delta; Error(EmptyMatrix) on an empty matrix.
PowerIterationResult pagerank(const AdjacencyMatrix& A, double lambda = 0.85,
                              double tol = 1e-12, int max_iter = 1000);

// Power iteration in the column-action orientation: p_i <- sum_j p_j *
// a[j][i] / outdeg_count(j), L1-normalized each step. A spectral shift
// (adding the previous vector) suppresses period-2 oscillation without
// changing the eigenvectors. Throws Error(ZeroMatrix) on an all-zero
// matrix and Error(NonConvergence) past max_iter.
PowerIterationResult eigenvector_centrality(const AdjacencyMatrix& A,
                                            double tol = 1e-12,
                                            int max_iter = 10000);

// All-pairs BFS on the binarized directed graph.
struct ShortestPaths {
  Eigen::MatrixXi dist;   // hops; -1 encodes Unreachable; diagonal 0
  Eigen::MatrixXd sigma;  // count of distinct geodesics; sigma(i,i) = 1

  bool reachable(Eigen::Index i, Eigen::Index j) const {
    return dist(i, j) >= 0;
  }
};

ShortestPaths shortest_paths(const AdjacencyMatrix& A, int threads = 1);

// Number of geodesics from m to n passing through v (v distinct from both).
double sigma_through(const ShortestPaths& sp, Eigen::Index m, Eigen::Index n,
                     Eigen::Index v);

// Product of a[v_k][v_{k+1}] along the path, on a column-normalized matrix.
// Paths may include zero-weight edges (the product is then 0). Throws
// Error(MissingEdge) for unknown node keys or paths shorter than 2 nodes,
// Error(UnnormalizedMatrix) when some nonzero column does not sum to 1.
double geodesic_weight(const AdjacencyMatrix& A_normalized,
                       const std::vector<std::string>& path);

struct ClosenessResult {
  // Mean geodesic length over reachable targets; absent for nodes that
  // reach nothing.
  std::vector<std::optional<double>> values;
  std::vector<int> reachable_counts;
};

ClosenessResult closeness(const AdjacencyMatrix& A, int threads = 1);

enum class BetweennessNorm { None, PairCount };

// B(v) = sum over ordered pairs (m, n), m != v != n, of
// sigma(m,n|v)/sigma(m,n); PairCount divides by (n-1)(n-2).
Eigen::VectorXd betweenness(const AdjacencyMatrix& A,
                            BetweennessNorm norm = BetweennessNorm::None,
                            int threads = 1);

// ---------------------------------------------------------------------------
// Metric tables

struct MetricTable {
  std::vector<std::string> nodes;
  std::vector<std::string> names;  // column names
  Eigen::MatrixXd values;          // nodes x names, finite
  std::map<std::string, std::string> metadata;

  void add(const std::string& name, const Eigen::VectorXd& column);
  Eigen::VectorXd column(const std::string& name) const;
};

// CSV with a "# key: value" metadata comment block, a node column, and one
// column per metric. Optional-valued columns (closeness) are passed
// separately and render absent cells as empty.
std::string write_metric_table(
    const MetricTable& table,
    const std::map<std::string, std::vector<std::optional<double>>>&
        sparse_columns = {});

MetricTable parse_metric_table(const std::string& csv);

}  // namespace usemetrics
