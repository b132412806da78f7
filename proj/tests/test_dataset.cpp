#include <catch2/catch_amalgamated.hpp>
#include <fstream>
#include <json.hpp>

#include "marlab/dataset.hpp"
#include "marlab/io.hpp"

using namespace marlab;

TEST_CASE("sphere samples in one dimension are exactly +-1", "[dataset]") {
  const Dataset ds = sample_sphere(5, 1, 99);
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    REQUIRE(std::abs(ds.points(i, 0)) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sphere samples sit on the radius-sqrt(d) sphere", "[dataset]") {
  const Dataset ds = sample_sphere(50, 300, 7);
  const double radius = std::sqrt(300.0);
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    REQUIRE(std::abs(ds.points.row(i).norm() - radius) <= 1e-10 * radius);
  REQUIRE_NOTHROW(ds.validate());
}

TEST_CASE("sampling is bit-identical for equal inputs", "[dataset]") {
  const Dataset a = sample_sphere(20, 13, 1234);
  const Dataset b = sample_sphere(20, 13, 1234);
  REQUIRE(a.points == b.points);
  REQUIRE(a.labels == b.labels);
  const Dataset c = sample_sphere(20, 13, 1235);
  REQUIRE(a.points != c.points);
}

TEST_CASE("label rules: uniform is seeded, alternating is exact", "[dataset]") {
  const Dataset alt = sample_sphere(9, 4, 5, LabelRule::kBalancedAlternating);
  for (Eigen::Index i = 0; i < alt.size(); ++i)
    REQUIRE(alt.labels(i) == (i % 2 == 0 ? 1.0 : -1.0));
  const Dataset uni = sample_sphere(400, 4, 5);
  const auto pos = (uni.labels.array() > 0).count();
  REQUIRE(pos > 100);
  REQUIRE(pos < 300);
}

TEST_CASE("invalid sampling arguments are rejected", "[dataset]") {
  REQUIRE_THROWS_AS(sample_sphere(0, 4, 1), InvalidArgument);
  REQUIRE_THROWS_AS(sample_sphere(4, 0, 1), InvalidArgument);
}

TEST_CASE("orthogonal dataset matches the scaled basis", "[dataset]") {
  const Dataset ds = orthogonal_dataset(4);
  REQUIRE(ds.size() == 4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j)
      REQUIRE(ds.points(i, j) == (i == j ? 2.0 : 0.0));
    REQUIRE(ds.labels(i) == (i < 2 ? 1.0 : -1.0));
  }

  const Dataset d2 = orthogonal_dataset(2);
  REQUIRE(d2.points(0, 0) == Catch::Approx(std::sqrt(2.0)));
  REQUIRE(d2.points(1, 1) == Catch::Approx(std::sqrt(2.0)));
  REQUIRE(d2.labels(0) == 1.0);
  REQUIRE(d2.labels(1) == -1.0);

  REQUIRE_THROWS_AS(orthogonal_dataset(5), InvalidArgument);
  REQUIRE_THROWS_AS(orthogonal_dataset(0), InvalidArgument);
}

TEST_CASE("orthogonal subset balances labels over the selected points", "[dataset]") {
  const Dataset ds = orthogonal_subset(64, 20);
  REQUIRE(ds.size() == 20);
  REQUIRE((ds.labels.array() > 0).count() == 10);
  REQUIRE(ds.points(19, 19) == Catch::Approx(8.0));
}

TEST_CASE("correlation stats on orthogonal data", "[dataset]") {
  const CorrelationStats st = correlation_stats(orthogonal_dataset(4));
  REQUIRE(st.p_max == 0.0);
  REQUIRE(st.balance_c == 0.5);
  REQUIRE(st.c_prime == Catch::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("a duplicated point yields p_max = d", "[dataset]") {
  Dataset ds;
  ds.d = 9;
  ds.points = Eigen::MatrixXd::Zero(2, 9);
  ds.points(0, 0) = 3.0;
  ds.points(1, 0) = 3.0;
  ds.labels.resize(2);
  ds.labels << 1.0, -1.0;
  REQUIRE(correlation_stats(ds).p_max == 9.0);
}

TEST_CASE("single-point dataset has p_max 0", "[dataset]") {
  const Dataset ds = sample_sphere(1, 6, 3);
  REQUIRE(correlation_stats(ds).p_max == 0.0);
}

TEST_CASE("hand-computed three-point fixture matches exactly", "[dataset]") {
  const json fx = load_json(std::string(MARLAB_FIXTURE_DIR) + "/corr3.json");
  const Dataset ds = dataset_from_json(fx.at("dataset"));
  const CorrelationStats st = correlation_stats(ds);
  const auto& exp = fx.at("expected");
  REQUIRE_THAT(st.p_max, Catch::Matchers::WithinULP(exp.at("p_max").get<double>(), 4));
  REQUIRE_THAT(st.balance_c,
               Catch::Matchers::WithinULP(exp.at("balance_c").get<double>(), 0));
  REQUIRE_THAT(st.c_prime, Catch::Matchers::WithinULP(exp.at("c_prime").get<double>(), 4));
}

TEST_CASE("pairwise unit inner products concentrate (soft statistical check)", "[dataset][slow]") {
  // d = 2000, m = ceil(sqrt(d)): the fraction of seeds whose max unit inner
  // product exceeds ln(d)/sqrt(d) should be small.
  const int d = 2000;
  const Eigen::Index m = 45;
  const double threshold = std::log(2000.0) / std::sqrt(2000.0);
  int exceeded = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dataset ds = sample_sphere(m, d, seed);
    if (correlation_stats(ds).p_max_unit > threshold) ++exceeded;
  }
  REQUIRE(exceeded <= 10);  // <= 20% of 50 seeds
}

TEST_CASE("gaussian-normalized source shares the sphere construction", "[dataset]") {
  const Dataset ds = sample_gaussian_normalized(6, 10, 11);
  REQUIRE(ds.source == DataSource::kGaussianNormalized);
  REQUIRE_NOTHROW(ds.validate());
}
