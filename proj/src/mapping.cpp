#include "usemetrics/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "usemetrics/io_utils.hpp"
#include "usemetrics/rng.hpp"

namespace usemetrics {

namespace {

double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Descending eigen decomposition of a symmetric matrix with the sign of
// each axis fixed so its largest-magnitude loading is positive.
void symmetric_axes(const Eigen::MatrixXd& s, Eigen::VectorXd& eigenvalues,
                    Eigen::MatrixXd& loadings) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::DegenerateInput,
                "eigen decomposition did not converge");
  Eigen::Index p = s.rows();
  eigenvalues.resize(p);
  loadings.resize(p, p);
  for (Eigen::Index c = 0; c < p; ++c) {
    eigenvalues[c] = solver.eigenvalues()[p - 1 - c];
    loadings.col(c) = solver.eigenvectors().col(p - 1 - c);
    Eigen::Index peak = 0;
    loadings.col(c).cwiseAbs().maxCoeff(&peak);
    if (loadings(peak, c) < 0.0) loadings.col(c) = -loadings.col(c);
  }
}

Eigen::VectorXd ratios_of(const Eigen::VectorXd& eigenvalues) {
  Eigen::VectorXd clamped = eigenvalues.cwiseMax(0.0);
  double total = clamped.sum();
  if (total > 0.0) return clamped / total;
  return Eigen::VectorXd::Zero(eigenvalues.size());
}

Eigen::Index kept_axes(Eigen::Index available, int requested) {
  if (requested <= 0) return available;
  return std::min<Eigen::Index>(available, requested);
}

}  // namespace

Eigen::VectorXd mid_ranks(const Eigen::VectorXd& x) {
  Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x[order[static_cast<std::size_t>(j + 1)]] ==
                            x[order[static_cast<std::size_t>(i)]])
      ++j;
    // Positions i+1 .. j+1 share their average rank.
    double shared = static_cast<double>(i + j + 2) / 2.0;
    for (Eigen::Index k = i; k <= j; ++k)
      ranks[order[static_cast<std::size_t>(k)]] = shared;
    i = j + 1;
  }
  return ranks;
}

double spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size())
    throw Error(ErrorCode::LengthMismatch,
                "spearman inputs differ in length");
  if (x.size() < 2)
    throw Error(ErrorCode::DegenerateInput,
                "spearman needs at least 2 observations");
  Eigen::VectorXd rx = mid_ranks(x);
  Eigen::VectorXd ry = mid_ranks(y);
  Eigen::VectorXd dx = rx.array() - rx.mean();
  Eigen::VectorXd dy = ry.array() - ry.mean();
  double vx = dx.squaredNorm();
  double vy = dy.squaredNorm();
  if (vx <= 0.0 || vy <= 0.0)
    throw Error(ErrorCode::DegenerateInput,
                "spearman input is constant");
  return dx.dot(dy) / std::sqrt(vx * vy);
}

CorrelationMatrix spearman_matrix(const MetricTable& table) {
  if (table.names.empty())
    throw Error(ErrorCode::EmptyTable, "metric table has no columns");
  Eigen::Index p = static_cast<Eigen::Index>(table.names.size());
  CorrelationMatrix matrix;
  matrix.names = table.names;
  matrix.r = Eigen::MatrixXd::Identity(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      double r;
      try {
        r = spearman(table.values.col(i), table.values.col(j));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::DegenerateInput)
          throw Error(ErrorCode::DegenerateInput,
                      "columns " + table.names[static_cast<std::size_t>(i)] +
                          "/" + table.names[static_cast<std::size_t>(j)] +
                          ": " + e.what());
        throw;
      }
      matrix.r(i, j) = r;
      matrix.r(j, i) = r;
    }
  }
  return matrix;
}

std::string correlation_csv(const CorrelationMatrix& matrix) {
  std::ostringstream out;
  std::vector<std::string> header = {"measure"};
  header.insert(header.end(), matrix.names.begin(), matrix.names.end());
  out << csv_join(header) << '\n';
  for (std::size_t i = 0; i < matrix.names.size(); ++i) {
    std::vector<std::string> row = {matrix.names[i]};
    for (std::size_t j = 0; j < matrix.names.size(); ++j)
      row.push_back(format_double(matrix.r(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(j))));
    out << csv_join(row) << '\n';
  }
  return out.str();
}

PcaResult measure_pca(const MetricTable& table, int components) {
  CorrelationMatrix corr = spearman_matrix(table);
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd loadings;
  symmetric_axes(corr.r, eigenvalues, loadings);
  Eigen::Index keep = kept_axes(eigenvalues.size(), components);

  PcaResult result;
  result.names = table.names;
  result.eigenvalues = eigenvalues.head(keep);
  result.variance_ratios = ratios_of(eigenvalues).head(keep);
  result.loadings = loadings.leftCols(keep);
  // The measures themselves are the mapped objects: coordinate on an axis
  // is the loading scaled by that axis's standard deviation.
  result.scores.resize(loadings.rows(), keep);
  for (Eigen::Index c = 0; c < keep; ++c)
    result.scores.col(c) =
        result.loadings.col(c) * std::sqrt(std::max(0.0, eigenvalues[c]));
  return result;
}

PcaResult coordinate_pca(const Eigen::MatrixXd& observations,
                         int components) {
  if (observations.rows() == 0 || observations.cols() == 0)
    throw Error(ErrorCode::EmptyMatrix, "no observations");
  Eigen::MatrixXd centered =
      observations.rowwise() - observations.colwise().mean();
  Eigen::Index n = observations.rows();
  Eigen::Index d = observations.cols();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  if (n > 1)
    cov = centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd loadings;
  symmetric_axes(cov, eigenvalues, loadings);
  Eigen::Index keep = kept_axes(eigenvalues.size(), components);

  PcaResult result;
  result.eigenvalues = eigenvalues.head(keep);
  result.variance_ratios = ratios_of(eigenvalues).head(keep);
  result.loadings = loadings.leftCols(keep);
  result.scores = centered * result.loadings;
  return result;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k,
                    const KMeansOptions& options) {
  Eigen::Index n = points.rows();
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "no points to cluster");
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be at least 1");
  if (options.restarts < 1 || options.max_iterations < 1)
    throw Error(ErrorCode::InvalidConfig,
                "restarts and max_iterations must be positive");

  std::set<std::vector<double>> distinct;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> row(points.cols() >= 0
                                ? static_cast<std::size_t>(points.cols())
                                : 0);
    for (Eigen::Index c = 0; c < points.cols(); ++c)
      row[static_cast<std::size_t>(c)] = points(i, c);
    distinct.insert(std::move(row));
  }
  if (static_cast<std::size_t>(k) > distinct.size())
    throw Error(ErrorCode::KTooLarge,
                "k " + std::to_string(k) + " exceeds " +
                    std::to_string(distinct.size()) + " distinct points");

  auto dist2 = [&](Eigen::Index i, const Eigen::RowVectorXd& c) {
    return (points.row(i) - c).squaredNorm();
  };

  KMeansResult best;
  bool have_best = false;
  for (int restart = 0; restart < options.restarts; ++restart) {
    std::mt19937_64 rng(derive_seed(
        options.seed, "kmeans_restart_" + std::to_string(restart)));

    // k-means++ seeding.
    Eigen::MatrixXd centroids(k, points.cols());
    Eigen::VectorXd d2 = Eigen::VectorXd::Constant(
        n, std::numeric_limits<double>::infinity());
    Eigen::Index first = std::min<Eigen::Index>(
        n - 1, static_cast<Eigen::Index>(unit_interval(rng) *
                                         static_cast<double>(n)));
    centroids.row(0) = points.row(first);
    for (int c = 1; c < k; ++c) {
      for (Eigen::Index i = 0; i < n; ++i)
        d2[i] = std::min(d2[i], dist2(i, centroids.row(c - 1)));
      double total = d2.sum();
      Eigen::Index chosen = -1;
      if (total > 0.0) {
        double target = unit_interval(rng) * total;
        double cumulative = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (d2[i] <= 0.0) continue;
          cumulative += d2[i];
          chosen = i;
          if (cumulative > target) break;
        }
      } else {
        // All mass sits on already-chosen positions; take the first point
        // that is not yet a centroid. KTooLarge guarantees one exists.
        for (Eigen::Index i = 0; i < n && chosen < 0; ++i) {
          bool taken = false;
          for (int cc = 0; cc < c && !taken; ++cc)
            taken = (points.row(i) - centroids.row(cc)).squaredNorm() == 0.0;
          if (!taken) chosen = i;
        }
      }
      centroids.row(c) = points.row(chosen);
    }

    // Lloyd iterations.
    std::vector<int> assignments(static_cast<std::size_t>(n), -1);
    std::vector<double> history;
    int iterations = 0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      ++iterations;
      bool changed = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        int nearest = 0;
        double nearest_d2 = dist2(i, centroids.row(0));
        for (int c = 1; c < k; ++c) {
          double d = dist2(i, centroids.row(c));
          if (d < nearest_d2) {
            nearest_d2 = d;
            nearest = c;
          }
        }
        if (assignments[static_cast<std::size_t>(i)] != nearest) {
          assignments[static_cast<std::size_t>(i)] = nearest;
          changed = true;
        }
      }
      double inertia = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        inertia +=
            dist2(i, centroids.row(assignments[static_cast<std::size_t>(i)]));
      history.push_back(inertia);
      if (!changed) break;

      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
      std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        int c = assignments[static_cast<std::size_t>(i)];
        sums.row(c) += points.row(i);
        ++sizes[static_cast<std::size_t>(c)];
      }
      std::vector<bool> stolen(static_cast<std::size_t>(n), false);
      for (int c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) {
          centroids.row(c) =
              sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
          continue;
        }
        // Empty cluster: seize the point farthest from its centroid.
        Eigen::Index farthest = -1;
        double farthest_d2 = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (stolen[static_cast<std::size_t>(i)]) continue;
          double d =
              dist2(i, centroids.row(assignments[static_cast<std::size_t>(i)]));
          if (d > farthest_d2) {
            farthest_d2 = d;
            farthest = i;
          }
        }
        centroids.row(c) = points.row(farthest);
        stolen[static_cast<std::size_t>(farthest)] = true;
      }
    }

    double inertia = history.empty() ? 0.0 : history.back();
    if (!have_best || inertia < best.inertia) {
      best.assignments = assignments;
      best.centroids = centroids;
      best.inertia = inertia;
      best.inertia_history = history;
      best.iterations = iterations;
      have_best = true;
    }
  }
  best.restarts_used = options.restarts;
  return best;
}

JournalMapResult journal_map(
    const std::vector<UsageEvent>& events,
    const std::map<std::string, std::string>& journal_of,
    const JournalMapOptions& options) {
  PairFrequencyTable pairs = extract_pairs(events, PairLevel::Journal, true,
                                           journal_of, options.extract);
  AdjacencyMatrix C = adjacency_from_pairs(pairs);

  JournalMapResult result;
  result.journals = C.nodes;
  Eigen::Index n = C.n();
  if (n == 1) {
    result.coordinates = Eigen::MatrixXd::Zero(1, 2);
    result.variance_ratios = Eigen::VectorXd::Zero(2);
    result.clusters = {0};
    result.clustering.assignments = {0};
    result.clustering.centroids = Eigen::MatrixXd::Zero(1, 2);
    result.clustering.restarts_used = 0;
    return result;
  }

  Eigen::MatrixXd symmetric = C.a + C.a.transpose();
  PcaResult pca = coordinate_pca(symmetric, 2);
  result.coordinates = Eigen::MatrixXd::Zero(n, 2);
  result.coordinates.leftCols(pca.scores.cols()) = pca.scores;
  result.variance_ratios = Eigen::VectorXd::Zero(2);
  result.variance_ratios.head(pca.variance_ratios.size()) =
      pca.variance_ratios;

  std::set<std::vector<double>> distinct;
  for (Eigen::Index i = 0; i < n; ++i)
    distinct.insert(
        {result.coordinates(i, 0), result.coordinates(i, 1)});
  int k = std::min<int>(options.clusters,
                        static_cast<int>(distinct.size()));
  KMeansOptions kopts = options.kmeans;
  result.clustering = kmeans(result.coordinates, std::max(1, k), kopts);
  result.clusters = result.clustering.assignments;
  return result;
}

std::string journal_map_csv(const JournalMapResult& map) {
  std::ostringstream out;
  out << "journal_id,x,y,cluster\n";
  for (std::size_t i = 0; i < map.journals.size(); ++i) {
    out << csv_escape(map.journals[i]) << ','
        << format_double(map.coordinates(static_cast<Eigen::Index>(i), 0))
        << ','
        << format_double(map.coordinates(static_cast<Eigen::Index>(i), 1))
        << ',' << map.clusters[i] << '\n';
  }
  return out.str();
}

}  // namespace usemetrics
