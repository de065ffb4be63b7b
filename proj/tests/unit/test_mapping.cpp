#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "support/helpers.hpp"
#include "usemetrics/errors.hpp"
#include "usemetrics/mapping.hpp"

using namespace usemetrics;
using testutil::code_of;

TEST_CASE("mid_ranks average the positions of ties") {
  Eigen::VectorXd x(4);
  x << 40.0, 7.0, 7.0, 2.0;
  Eigen::VectorXd r = mid_ranks(x);
  CHECK(r[0] == 4.0);
  CHECK(r[1] == 2.5);
  CHECK(r[2] == 2.5);
  CHECK(r[3] == 1.0);

  Eigen::VectorXd all_tied = Eigen::VectorXd::Constant(3, 9.0);
  Eigen::VectorXd rt = mid_ranks(all_tied);
  for (int i = 0; i < 3; ++i) CHECK(rt[i] == 2.0);
}

TEST_CASE("spearman hits the textbook value on a single swap") {
  Eigen::VectorXd x(4), y(4);
  x << 1, 2, 3, 4;
  y << 1, 3, 2, 4;
  CHECK(spearman(x, y) == 0.8);  // 1 - 6*2/(4*15), exact in doubles
  CHECK(spearman(x, x) == 1.0);

  SUBCASE("ties do not break perfect self correlation") {
    Eigen::VectorXd tied(5);
    tied << 1, 2, 2, 2, 7;
    CHECK(spearman(tied, tied) == 1.0);
  }

  SUBCASE("monotone transforms leave the value bit-identical") {
    Eigen::VectorXd gx = x.array().exp();
    Eigen::VectorXd gy = y.array() * 100.0 + 3.0;
    CHECK(spearman(gx, gy) == spearman(x, y));
  }

  SUBCASE("degenerate input is refused") {
    Eigen::VectorXd constant = Eigen::VectorXd::Constant(4, 5.0);
    CHECK(code_of([&] { spearman(x, constant); }) ==
          ErrorCode::DegenerateInput);
    Eigen::VectorXd one(1);
    one << 3.0;
    CHECK(code_of([&] { spearman(one, one); }) == ErrorCode::DegenerateInput);
    Eigen::VectorXd three(3);
    three << 1, 2, 3;
    CHECK(code_of([&] { spearman(x, three); }) == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("spearman_matrix is symmetric with a unit diagonal") {
  MetricTable table;
  table.nodes = {"n1", "n2", "n3", "n4"};
  Eigen::VectorXd a(4), b(4), c(4);
  a << 1, 2, 3, 4;
  b << 1, 3, 2, 4;
  c << 4, 3, 2, 1;
  table.add("a", a);
  table.add("b", b);
  table.add("c", c);

  CorrelationMatrix m = spearman_matrix(table);
  REQUIRE(m.names == std::vector<std::string>{"a", "b", "c"});
  for (int i = 0; i < 3; ++i) CHECK(m.r(i, i) == 1.0);
  CHECK(m.r(0, 1) == 0.8);
  CHECK(m.r(1, 0) == 0.8);
  CHECK(m.r(0, 2) == -1.0);
  CHECK(m.r(1, 2) == -0.8);

  std::string csv = correlation_csv(m);
  CHECK(csv.find("measure,a,b,c\n") == 0);
  CHECK(csv.find("a,1,0.8,-1\n") != std::string::npos);

  SUBCASE("a constant column is reported by name") {
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(4, 2.0);
    table.add("flat", flat);
    bool named = false;
    try {
      spearman_matrix(table);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateInput);
      named = std::string(e.what()).find("a/flat") != std::string::npos;
    }
    CHECK(named);
  }

  SUBCASE("a table without columns is refused") {
    MetricTable empty;
    empty.nodes = {"n1"};
    CHECK(code_of([&] { spearman_matrix(empty); }) == ErrorCode::EmptyTable);
  }
}

TEST_CASE("measure_pca concentrates perfectly correlated measures") {
  MetricTable table;
  table.nodes = {"n1", "n2", "n3", "n4", "n5"};
  Eigen::VectorXd base(5);
  base << 3, 1, 4, 1.5, 9;
  table.add("u", base);
  table.add("v", 2.0 * base + Eigen::VectorXd::Constant(5, 1.0));

  PcaResult pca = measure_pca(table);
  REQUIRE(pca.variance_ratios.size() == 2);
  CHECK(pca.variance_ratios[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pca.variance_ratios[1] == doctest::Approx(0.0).epsilon(1e-9));
  // Both measures sit at the same spot on the first axis, loading
  // 1/sqrt(2) scaled by sqrt(2).
  CHECK(pca.scores(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pca.scores(1, 0) == doctest::Approx(1.0).epsilon(1e-9));

  SUBCASE("variance ratios never increase") {
    std::mt19937_64 rng(7);
    MetricTable wide;
    for (int i = 0; i < 30; ++i) wide.nodes.push_back("n" + std::to_string(i));
    for (int m = 0; m < 6; ++m) {
      Eigen::VectorXd col(30);
      for (int i = 0; i < 30; ++i)
        col[i] = double(rng() % 1000) + (m < 3 ? 2.0 * i : 0.0);
      wide.add("m" + std::to_string(m), col);
    }
    PcaResult p = measure_pca(wide);
    double total = 0.0;
    for (Eigen::Index i = 0; i + 1 < p.variance_ratios.size(); ++i)
      CHECK(p.variance_ratios[i] + 1e-12 >= p.variance_ratios[i + 1]);
    for (Eigen::Index i = 0; i < p.variance_ratios.size(); ++i)
      total += p.variance_ratios[i];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("components truncates the kept axes") {
    PcaResult one = measure_pca(table, 1);
    CHECK(one.variance_ratios.size() == 1);
    CHECK(one.loadings.cols() == 1);
    CHECK(one.scores.cols() == 1);
  }
}

TEST_CASE("coordinate_pca recovers a line through point observations") {
  Eigen::MatrixXd points(10, 2);
  for (int i = 0; i < 10; ++i) {
    points(i, 0) = static_cast<double>(i);
    points(i, 1) = 2.0 * i + 5.0;
  }
  PcaResult pca = coordinate_pca(points);
  CHECK(pca.variance_ratios[0] == doctest::Approx(1.0).epsilon(1e-12));
  // Scores spread along one axis only.
  for (int i = 0; i < 10; ++i)
    CHECK(pca.scores(i, 1) == doctest::Approx(0.0).epsilon(1e-9));
  // Neighboring points sit sqrt(5) apart along the line.
  CHECK(std::abs(pca.scores(1, 0) - pca.scores(0, 0)) ==
        doctest::Approx(std::sqrt(5.0)).epsilon(1e-9));

  CHECK(code_of([] { coordinate_pca(Eigen::MatrixXd()); }) ==
        ErrorCode::EmptyMatrix);
}

TEST_CASE("kmeans separates two blobs and repeats itself") {
  std::mt19937_64 rng(99);
  Eigen::MatrixXd points(20, 2);
  for (int i = 0; i < 20; ++i) {
    double cx = i < 10 ? 0.0 : 10.0;
    points(i, 0) = cx + double(rng() % 100) / 100.0;
    points(i, 1) = cx + double(rng() % 100) / 100.0;
  }
  KMeansResult result = kmeans(points, 2);
  REQUIRE(result.assignments.size() == 20);
  for (int i = 1; i < 10; ++i)
    CHECK(result.assignments[i] == result.assignments[0]);
  for (int i = 11; i < 20; ++i)
    CHECK(result.assignments[i] == result.assignments[10]);
  CHECK(result.assignments[0] != result.assignments[10]);
  CHECK(result.restarts_used == 8);

  SUBCASE("the same seed reproduces the same clustering") {
    KMeansResult again = kmeans(points, 2);
    CHECK(again.assignments == result.assignments);
    CHECK(again.centroids.cwiseEqual(result.centroids).all());
    CHECK(again.inertia == result.inertia);
  }

  SUBCASE("inertia never rises within the accepted restart") {
    for (std::size_t i = 1; i < result.inertia_history.size(); ++i)
      CHECK(result.inertia_history[i] <= result.inertia_history[i - 1]);
  }

  SUBCASE("k equal to the distinct point count gives singletons") {
    Eigen::MatrixXd tiny(3, 2);
    tiny << 0, 0, 5, 5, 9, 0;
    KMeansResult singles = kmeans(tiny, 3);
    std::set<int> seen(singles.assignments.begin(),
                       singles.assignments.end());
    CHECK(seen == std::set<int>{0, 1, 2});
    CHECK(singles.inertia == 0.0);
  }

  SUBCASE("invalid requests are refused") {
    Eigen::MatrixXd tiny(3, 2);
    tiny << 0, 0, 5, 5, 5, 5;  // two distinct positions
    CHECK(code_of([&] { kmeans(tiny, 3); }) == ErrorCode::KTooLarge);
    CHECK(code_of([&] { kmeans(tiny, 0); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([&] { kmeans(Eigen::MatrixXd(), 1); }) ==
          ErrorCode::InvalidConfig);
    KMeansOptions bad;
    bad.restarts = 0;
    CHECK(code_of([&] { kmeans(tiny, 2, bad); }) == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("journal_map pulls co-used communities together") {
  // Two three-journal communities, each session bouncing inside one.
  std::map<std::string, std::string> journal_of = {
      {"a1", "jA"}, {"b1", "jB"}, {"c1", "jC"},
      {"x1", "jX"}, {"y1", "jY"}, {"z1", "jZ"}};
  std::vector<UsageEvent> events;
  auto add_session = [&](const std::string& sid,
                         const std::vector<std::string>& walk) {
    for (std::size_t i = 0; i < walk.size(); ++i)
      events.push_back(testutil::event(sid + "-" + std::to_string(i), sid,
                                       "u", walk[i],
                                       10000 + 100000 * events.size()));
  };
  for (int rep = 0; rep < 3; ++rep) {
    add_session("p" + std::to_string(rep), {"a1", "b1", "c1", "a1"});
    add_session("q" + std::to_string(rep), {"x1", "y1", "z1", "x1"});
  }

  JournalMapOptions options;
  options.clusters = 2;
  JournalMapResult map = journal_map(events, journal_of, options);
  REQUIRE(map.journals ==
          std::vector<std::string>{"jA", "jB", "jC", "jX", "jY", "jZ"});
  CHECK(map.coordinates.rows() == 6);
  CHECK(map.coordinates.cols() == 2);
  CHECK(map.clusters[0] == map.clusters[1]);
  CHECK(map.clusters[1] == map.clusters[2]);
  CHECK(map.clusters[3] == map.clusters[4]);
  CHECK(map.clusters[4] == map.clusters[5]);
  CHECK(map.clusters[0] != map.clusters[3]);

  std::string csv = journal_map_csv(map);
  CHECK(csv.substr(0, 23) == "journal_id,x,y,cluster\n");
  CHECK(csv.find("jA,") == 23);  // first data row follows the header

  SUBCASE("the same events give the same map") {
    JournalMapResult again = journal_map(events, journal_of, options);
    CHECK(again.coordinates.cwiseEqual(map.coordinates).all());
    CHECK(again.clusters == map.clusters);
  }
}

TEST_CASE("a single journal maps to the origin") {
  std::map<std::string, std::string> journal_of = {{"a1", "jA"},
                                                   {"a2", "jA"}};
  std::vector<UsageEvent> events = {
      testutil::event("e1", "s1", "u1", "a1", 1000),
      testutil::event("e2", "s1", "u1", "a2", 1100),
  };
  JournalMapOptions options;
  options.extract.allow_self_pairs = true;
  JournalMapResult map = journal_map(events, journal_of, options);
  REQUIRE(map.journals == std::vector<std::string>{"jA"});
  CHECK(map.coordinates(0, 0) == 0.0);
  CHECK(map.coordinates(0, 1) == 0.0);
  CHECK(map.clusters == std::vector<int>{0});
  CHECK(map.clustering.restarts_used == 0);
}
