#include "usemetrics/net_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "usemetrics/io_utils.hpp"
#include "usemetrics/parallel.hpp"

namespace usemetrics {

namespace {

[[noreturn]] void empty_matrix() {
  throw Error(ErrorCode::EmptyMatrix, "adjacency matrix is empty");
}

std::vector<std::vector<Eigen::Index>> out_adjacency(const AdjacencyMatrix& A) {
  std::vector<std::vector<Eigen::Index>> adj(
      static_cast<std::size_t>(A.n()));
  for (Eigen::Index i = 0; i < A.n(); ++i)
    for (Eigen::Index j = 0; j < A.n(); ++j)
      if (A.a(i, j) > 0.0) adj[static_cast<std::size_t>(i)].push_back(j);
  return adj;
}

}  // namespace

AdjacencyMatrix adjacency_from_pairs(const PairFrequencyTable& pairs) {
  if (pairs.counts.empty())
    throw Error(ErrorCode::EmptyMatrix, "no pairs to build a matrix from");
  std::set<std::string> node_set;
  for (const auto& [pair, count] : pairs.counts) {
    node_set.insert(pair.first);
    node_set.insert(pair.second);
  }
  AdjacencyMatrix A;
  A.mode = AdjacencyMatrix::Mode::Weighted;
  A.nodes.assign(node_set.begin(), node_set.end());
  std::map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < A.nodes.size(); ++i)
    index[A.nodes[i]] = static_cast<Eigen::Index>(i);
  Eigen::Index n = static_cast<Eigen::Index>(A.nodes.size());
  A.a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [pair, count] : pairs.counts) {
    A.a(index[pair.first], index[pair.second]) =
        static_cast<double>(count);
    if (!pairs.directed && pair.first != pair.second)
      A.a(index[pair.second], index[pair.first]) =
          static_cast<double>(count);
  }
  return A;
}

AdjacencyMatrix binarized(const AdjacencyMatrix& A) {
  AdjacencyMatrix B;
  B.nodes = A.nodes;
  B.mode = AdjacencyMatrix::Mode::Binary;
  B.a = (A.a.array() > 0.0).cast<double>();
  return B;
}

AdjacencyMatrix column_normalized(const AdjacencyMatrix& A) {
  AdjacencyMatrix N;
  N.nodes = A.nodes;
  N.mode = A.mode;
  N.a = A.a;
  for (Eigen::Index j = 0; j < N.a.cols(); ++j) {
    double sum = N.a.col(j).sum();
    if (sum > 0.0) N.a.col(j) /= sum;
  }
  return N;
}

Eigen::VectorXd degree_centrality(const AdjacencyMatrix& A, Direction dir) {
  if (A.n() == 0) empty_matrix();
  double total = A.a.sum();
  if (!(total > 0.0)) empty_matrix();
  Eigen::VectorXd sums = dir == Direction::In
                             ? Eigen::VectorXd(A.a.colwise().sum().transpose())
                             : Eigen::VectorXd(A.a.rowwise().sum());
  return sums / total;
}

PowerIterationResult pagerank(const AdjacencyMatrix& A, double lambda,
                              double tol, int max_iter) {
  Eigen::Index n = A.n();
  if (n == 0) empty_matrix();
  if (!(lambda > 0.0 && lambda < 1.0))
    throw Error(ErrorCode::InvalidConfig, "lambda must lie in (0,1)");

  // The walk runs on the binarized graph: each node spreads its mass evenly
  // over its distinct out-neighbors.
  Eigen::MatrixXd step = Eigen::MatrixXd::Zero(n, n);  // step(j,i): j -> i
  std::vector<bool> dangling(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < n; ++j) {
    double outdeg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (A.a(j, i) > 0.0) outdeg += 1.0;
    if (outdeg == 0.0) {
      dangling[static_cast<std::size_t>(j)] = true;
      continue;
    }
    for (Eigen::Index i = 0; i < n; ++i)
      if (A.a(j, i) > 0.0) step(j, i) = 1.0 / outdeg;
  }

  double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, inv_n);
  Eigen::VectorXd next(n);
  for (int iter = 1; iter <= max_iter; ++iter) {
    double dangling_mass = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (dangling[static_cast<std::size_t>(j)]) dangling_mass += p[j];
    double base = (1.0 - lambda) * inv_n + lambda * dangling_mass * inv_n;
    next.noalias() = lambda * (step.transpose() * p);
    next.array() += base;
    double delta = (next - p).lpNorm<1>();
    p.swap(next);
    if (delta < tol) return {p, iter, delta};
  }
  throw Error(ErrorCode::NonConvergence,
              "pagerank: no convergence after " + std::to_string(max_iter) +
                  " iterations, last delta " +
                  format_double((p - next).lpNorm<1>()));
}

PowerIterationResult eigenvector_centrality(const AdjacencyMatrix& A,
                                            double tol, int max_iter) {
  Eigen::Index n = A.n();
  if (n == 0) empty_matrix();
  if (!(A.a.sum() > 0.0))
    throw Error(ErrorCode::ZeroMatrix, "matrix has no nonzero entry");

  // Column action: influence flows from citing row j into cited column i,
  // each row's entries divided by its nonzero count.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double nonzero = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (A.a(j, i) > 0.0) nonzero += 1.0;
    if (nonzero == 0.0) continue;
    for (Eigen::Index i = 0; i < n; ++i)
      if (A.a(j, i) > 0.0) m(i, j) = A.a(j, i) / nonzero;
  }

  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd next(n);
  for (int iter = 1; iter <= max_iter; ++iter) {
    // Spectral shift (I + M): identical eigenvectors, no period-2 stall.
    next.noalias() = m * p;
    next += p;
    double norm = next.lpNorm<1>();
    if (!(norm > 0.0))
      throw Error(ErrorCode::ZeroMatrix, "iteration annihilated the vector");
    next /= norm;
    double delta = (next - p).lpNorm<1>();
    p.swap(next);
    if (delta < tol) return {p, iter, delta};
  }
  throw Error(ErrorCode::NonConvergence,
              "eigenvector centrality: no convergence after " +
                  std::to_string(max_iter) + " iterations");
}

ShortestPaths shortest_paths(const AdjacencyMatrix& A, int threads) {
  Eigen::Index n = A.n();
  ShortestPaths sp;
  sp.dist = Eigen::MatrixXi::Constant(n, n, -1);
  sp.sigma = Eigen::MatrixXd::Zero(n, n);
  if (n == 0) return sp;

  std::vector<std::vector<Eigen::Index>> adj = out_adjacency(A);
  // Sources are independent; each writes only its own row.
  parallel_for(n, threads, [&](std::int64_t source) {
    Eigen::Index s = static_cast<Eigen::Index>(source);
    std::vector<Eigen::Index> queue(static_cast<std::size_t>(n));
    sp.dist(s, s) = 0;
    sp.sigma(s, s) = 1.0;
    std::size_t head = 0, tail = 0;
    queue[tail++] = s;
    while (head < tail) {
      Eigen::Index u = queue[head++];
      int du = sp.dist(s, u);
      for (Eigen::Index w : adj[static_cast<std::size_t>(u)]) {
        if (sp.dist(s, w) < 0) {
          sp.dist(s, w) = du + 1;
          queue[tail++] = w;
        }
        if (sp.dist(s, w) == du + 1) sp.sigma(s, w) += sp.sigma(s, u);
      }
    }
  });
  return sp;
}

double sigma_through(const ShortestPaths& sp, Eigen::Index m, Eigen::Index n,
                     Eigen::Index v) {
  if (v == m || v == n) return 0.0;
  if (!sp.reachable(m, v) || !sp.reachable(v, n) || !sp.reachable(m, n))
    return 0.0;
  if (sp.dist(m, v) + sp.dist(v, n) != sp.dist(m, n)) return 0.0;
  return sp.sigma(m, v) * sp.sigma(v, n);
}

double geodesic_weight(const AdjacencyMatrix& A_normalized,
                       const std::vector<std::string>& path) {
  const AdjacencyMatrix& A = A_normalized;
  for (Eigen::Index j = 0; j < A.n(); ++j) {
    double sum = A.a.col(j).sum();
    if (sum != 0.0 && std::abs(sum - 1.0) > 1e-9)
      throw Error(ErrorCode::UnnormalizedMatrix,
                  "column " + A.nodes[static_cast<std::size_t>(j)] +
                      " sums to " + format_double(sum));
  }
  if (path.size() < 2)
    throw Error(ErrorCode::MissingEdge, "path needs at least one edge");
  std::map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < A.nodes.size(); ++i)
    index[A.nodes[i]] = static_cast<Eigen::Index>(i);
  double product = 1.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    auto from = index.find(path[k]);
    auto to = index.find(path[k + 1]);
    if (from == index.end())
      throw Error(ErrorCode::MissingEdge, "unknown node " + path[k]);
    if (to == index.end())
      throw Error(ErrorCode::MissingEdge, "unknown node " + path[k + 1]);
    product *= A.a(from->second, to->second);
  }
  return product;
}

ClosenessResult closeness(const AdjacencyMatrix& A, int threads) {
  ShortestPaths sp = shortest_paths(A, threads);
  Eigen::Index n = A.n();
  ClosenessResult result;
  result.values.resize(static_cast<std::size_t>(n));
  result.reachable_counts.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || !sp.reachable(i, j)) continue;
      sum += static_cast<double>(sp.dist(i, j));
      ++count;
    }
    result.reachable_counts[static_cast<std::size_t>(i)] = count;
    if (count > 0)
      result.values[static_cast<std::size_t>(i)] =
          sum / static_cast<double>(count);
  }
  return result;
}

Eigen::VectorXd betweenness(const AdjacencyMatrix& A, BetweennessNorm norm,
                            int threads) {
  ShortestPaths sp = shortest_paths(A, threads);
  Eigen::Index n = A.n();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    double total = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      if (m == v) continue;
      for (Eigen::Index t = 0; t < n; ++t) {
        if (t == v || t == m || !sp.reachable(m, t)) continue;
        double through = sigma_through(sp, m, t, v);
        if (through > 0.0) total += through / sp.sigma(m, t);
      }
    }
    b[v] = total;
  }
  if (norm == BetweennessNorm::PairCount) {
    double pairs = static_cast<double>(n - 1) * static_cast<double>(n - 2);
    if (pairs > 0.0) b /= pairs;
  }
  return b;
}

void MetricTable::add(const std::string& name, const Eigen::VectorXd& column) {
  if (static_cast<std::size_t>(column.size()) != nodes.size())
    throw Error(ErrorCode::LengthMismatch,
                "metric column length differs from node count");
  if (!column.allFinite())
    throw Error(ErrorCode::InvalidConfig,
                "metric values must be finite: " + name);
  Eigen::MatrixXd grown(nodes.size(), names.size() + 1);
  if (names.empty()) {
    grown.col(0) = column;
  } else {
    grown.leftCols(static_cast<Eigen::Index>(names.size())) = values;
    grown.col(static_cast<Eigen::Index>(names.size())) = column;
  }
  values = grown;
  names.push_back(name);
}

Eigen::VectorXd MetricTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values.col(static_cast<Eigen::Index>(i));
  throw Error(ErrorCode::InvalidConfig, "no metric named " + name);
}

std::string write_metric_table(
    const MetricTable& table,
    const std::map<std::string, std::vector<std::optional<double>>>&
        sparse_columns) {
  std::ostringstream out;
  for (const auto& [key, value] : table.metadata)
    out << "# " << key << ": " << value << '\n';
  std::vector<std::string> header = {"node"};
  header.insert(header.end(), table.names.begin(), table.names.end());
  for (const auto& [name, column] : sparse_columns) {
    if (column.size() != table.nodes.size())
      throw Error(ErrorCode::LengthMismatch,
                  "sparse column length differs from node count: " + name);
    header.push_back(name);
  }
  out << csv_join(header) << '\n';
  for (std::size_t i = 0; i < table.nodes.size(); ++i) {
    std::vector<std::string> row = {table.nodes[i]};
    for (std::size_t c = 0; c < table.names.size(); ++c)
      row.push_back(format_double(
          table.values(static_cast<Eigen::Index>(i),
                       static_cast<Eigen::Index>(c))));
    for (const auto& [name, column] : sparse_columns)
      row.push_back(column[i].has_value() ? format_double(*column[i]) : "");
    out << csv_join(row) << '\n';
  }
  return out.str();
}

MetricTable parse_metric_table(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  MetricTable table;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t colon = line.find(':');
      if (colon != std::string::npos && colon > 2) {
        std::string key = line.substr(2, colon - 2);
        std::string value = line.substr(colon + 1);
        if (!value.empty() && value[0] == ' ') value.erase(0, 1);
        table.metadata[key] = value;
      }
      continue;
    }
    if (header.empty()) {
      header = csv_split(line);
      if (header.size() < 2 || header[0] != "node")
        throw Error(ErrorCode::ColumnMismatch,
                    "metric table header must start with 'node'");
      continue;
    }
    std::vector<std::string> fields = csv_split(line);
    if (fields.size() != header.size())
      throw Error(ErrorCode::ColumnMismatch,
                  "metric table row width differs from header");
    rows.push_back(std::move(fields));
  }
  if (header.empty())
    throw Error(ErrorCode::ColumnMismatch, "empty metric table");

  // Columns containing any empty cell are optional-valued and are skipped;
  // MetricTable holds complete finite columns only.
  std::vector<bool> complete(header.size(), true);
  for (const auto& row : rows)
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c].empty()) complete[c] = false;

  for (const auto& row : rows) table.nodes.push_back(row[0]);
  std::vector<std::string> skipped;
  Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (!complete[c]) {
      skipped.push_back(header[c]);
      continue;
    }
    Eigen::VectorXd column(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      try {
        column[r] = std::stod(rows[static_cast<std::size_t>(r)][c]);
      } catch (...) {
        throw Error(ErrorCode::MalformedLine,
                    "non-numeric metric value in column " + header[c]);
      }
    }
    table.add(header[c], column);
  }
  if (!skipped.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < skipped.size(); ++i) {
      if (i > 0) joined += ",";
      joined += skipped[i];
    }
    table.metadata["skipped_columns"] = joined;
  }
  return table;
}

}  // namespace usemetrics
