#pragma once
// mapping.hpp
// Rank correlation, principal axes over metric tables, seeded k-means, and
// the journal co-use map built from session pair counts.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "usemetrics/core.hpp"
#include "usemetrics/errors.hpp"
#include "usemetrics/net_metrics.hpp"
#include "usemetrics/usage_graph.hpp"

namespace usemetrics {

// Mid-rank assignment: tied values share the average of the rank positions
// they occupy. Ranks start at 1.
Eigen::VectorXd mid_ranks(const Eigen::VectorXd& x);

// Spearman rank correlation: Pearson correlation of mid-ranks.
// Throws LengthMismatch on unequal sizes and DegenerateInput when either
// side is constant or shorter than 2.
double spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct CorrelationMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd r;  // symmetric, unit diagonal
};

// Pairwise Spearman correlations of the table's columns.
CorrelationMatrix spearman_matrix(const MetricTable& table);

std::string correlation_csv(const CorrelationMatrix& matrix);

struct PcaResult {
  std::vector<std::string> names;   // input column labels, may be empty
  Eigen::VectorXd eigenvalues;      // descending
  Eigen::VectorXd variance_ratios;  // share of total variance per axis
  Eigen::MatrixXd loadings;         // one column per kept axis
  Eigen::MatrixXd scores;           // coordinates on the kept axes
};

// Principal axes of the Spearman correlation matrix of the table's columns.
// The mapped objects are the measures themselves: scores(i, c) is
// loadings(i, c) * sqrt(eigenvalue_c). `components` keeps the leading axes
// (0 keeps all). Sign convention: each axis's largest-magnitude loading is
// positive.
PcaResult measure_pca(const MetricTable& table, int components = 0);

// Principal axes of row observations (eigenvectors of the covariance of
// centered columns). scores = centered rows projected onto the loadings.
PcaResult coordinate_pca(const Eigen::MatrixXd& observations,
                         int components = 0);

struct KMeansOptions {
  int restarts = 8;
  int max_iterations = 200;
  std::uint64_t seed = 1;
};

struct KMeansResult {
  std::vector<int> assignments;
  Eigen::MatrixXd centroids;  // k x dims
  double inertia = 0.0;
  std::vector<double> inertia_history;  // accepted restart, per iteration
  int iterations = 0;
  int restarts_used = 0;
};

// Seeded k-means++ with restarts. Everything, including tie breaks and
// empty-cluster repair, is deterministic given the seed. Throws
// InvalidConfig on k < 1 or empty input, KTooLarge when k exceeds the
// number of distinct points.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k,
                    const KMeansOptions& options = {});

struct JournalMapOptions {
  int clusters = 4;  // clamped to the number of distinct positions
  KMeansOptions kmeans;
  ExtractOptions extract;
};

struct JournalMapResult {
  std::vector<std::string> journals;
  Eigen::MatrixXd coordinates;  // journals x 2
  std::vector<int> clusters;
  Eigen::VectorXd variance_ratios;
  KMeansResult clustering;
};

// Journal co-use map: directed journal pair counts from sessions,
// symmetrized by adding the transpose, rows projected onto two principal
// axes, positions clustered. A single journal sits at the origin in one
// cluster.
JournalMapResult journal_map(
    const std::vector<UsageEvent>& events,
    const std::map<std::string, std::string>& journal_of,
    const JournalMapOptions& options = {});

std::string journal_map_csv(const JournalMapResult& map);

}  // namespace usemetrics
