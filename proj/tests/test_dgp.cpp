#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "peerfx/dgp.hpp"
#include "peerfx/error.hpp"
#include "peerfx/instruments.hpp"
#include "test_support.hpp"

using namespace peerfx;

namespace {

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("default threshold") {
  const double c = default_threshold();
  CHECK(c == doctest::Approx(0.953873).epsilon(1e-6));
  const boost::math::normal n02(0.0, std::numbers::sqrt2);
  CHECK(boost::math::cdf(boost::math::complement(n02, c)) == doctest::Approx(0.25).epsilon(1e-12));
  const boost::math::normal standard;
  CHECK(-std::numbers::sqrt2 * boost::math::quantile(standard, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("simulate_network extremes and link rate") {
  RngStream rng(1);
  FormationConfig fc;
  fc.threshold = -std::numeric_limits<double>::infinity();
  CHECK(simulate_network(10, fc, rng).graph.edge_count() == 45);
  fc.threshold = std::numeric_limits<double>::infinity();
  CHECK(simulate_network(10, fc, rng).graph.edge_count() == 0);
  fc.threshold = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(simulate_network(10, fc, rng), InvalidArgument);
  CHECK_THROWS_AS(simulate_network(1, FormationConfig{}, rng), InvalidArgument);

  // Links sharing an agent share its eta, so the spread of the per-network
  // link rate is measured rather than taken from the binomial formula.
  const std::size_t reps = 4000, n = 25;
  const double pairs = n * (n - 1) / 2.0;
  double sum = 0, sum_sq = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream s = RngStream::derive(7, r, 0);
    const double rate = static_cast<double>(simulate_network(n, FormationConfig{}, s).graph.edge_count()) / pairs;
    sum += rate;
    sum_sq += rate * rate;
  }
  const double mean = sum / reps;
  const double sd = std::sqrt(sum_sq / reps - mean * mean);
  CHECK(sd > std::sqrt(0.25 * 0.75 / pairs));
  CHECK(std::abs(mean - 0.25) <= 4.0 * sd / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("noncooperative formation produces valid symmetric graphs") {
  FormationConfig fc;
  fc.kind = FormationKind::noncooperative;
  fc.threshold = -1.0;
  for (PairShock shock : {PairShock::normal, PairShock::logistic}) {
    fc.shock = shock;
    RngStream rng(3);
    const NetworkDraw draw = simulate_network(30, fc, rng);
    CHECK(draw.graph.edge_count() > 0);
    CHECK(draw.graph.edge_count() < 435);
    const Eigen::MatrixXd a = draw.graph.adjacency();
    CHECK(a == a.transpose());
  }
}

TEST_CASE("covariate-dependent formation hook") {
  FormationConfig fc;
  fc.covariate_weight = 1.0;
  RngStream rng(5);
  CHECK_THROWS_AS(simulate_network(10, fc, rng), InvalidArgument);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 100.0);
  CHECK(simulate_network(10, fc, rng, x).graph.edge_count() == 45);
}

TEST_CASE("draw_covariates moments and determinism") {
  RngStream rng(42);
  const Eigen::VectorXd x = draw_covariates(1000000, rng);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / (x.size() - 1);
  CHECK(std::abs(mean - 1.0) < 0.005);
  CHECK(std::abs(var - 1.0) < 0.01);

  RngStream a(9), b(9);
  CHECK(draw_covariates(50, a) == draw_covariates(50, b));
}

TEST_CASE("draw_errors couplings") {
  const std::size_t n = 200000;
  RngStream rng(8);
  Eigen::VectorXd eta(n);
  for (std::size_t i = 0; i < n; ++i) eta(i) = rng.normal();
  const std::vector<double> eta_v(eta.data(), eta.data() + n);

  const Eigen::VectorXd e0 = draw_errors(eta, {Phi::zero, 1.0}, rng);
  CHECK(std::abs(correlation(eta_v, {e0.data(), e0.data() + n})) < 0.01);

  const Eigen::VectorXd e1 = draw_errors(eta, {Phi::linear, 1.0}, rng);
  CHECK(correlation(eta_v, {e1.data(), e1.data() + n}) == doctest::Approx(1.0 / std::numbers::sqrt2).epsilon(0.01));

  const Eigen::VectorXd es = draw_errors(eta, {Phi::sine3, 0.0}, rng);
  CHECK(es.minCoeff() >= 0.0);
  CHECK(es.maxCoeff() <= 1.0);

  const Eigen::VectorXd ee = draw_errors(eta, {Phi::exp3, 0.0}, rng);
  CHECK(ee.minCoeff() >= 1.0);
  CHECK(ee.maxCoeff() <= std::exp(3.0));
}

TEST_CASE("phi names") {
  CHECK(parse_phi("exp3") == Phi::exp3);
  CHECK_THROWS_WITH_AS(parse_phi("bogus"), doctest::Contains("{zero, linear, exp3, sine3}"), InvalidArgument);
  CHECK(phi_label(Phi::zero) == "φ(η) = 0");
  CHECK(phi_label(Phi::linear) == "φ(η) = η");
  CHECK(phi_label(Phi::exp3) == "φ(η) = exp(3Φ(η))");
  CHECK(phi_label(Phi::sine3) == "φ(η) = sin(3Φ(η))");
}

TEST_CASE("simulate_outcomes") {
  std::mt19937_64 gen(4);
  const Graph g = peerfx::testing::random_graph(gen, 25, 0.25);
  const Eigen::VectorXd x = peerfx::testing::random_vector(gen, 25);
  const Eigen::VectorXd eps = peerfx::testing::random_vector(gen, 25);
  const Eigen::MatrixXd h = row_normalize(g);

  StructuralParams p{0.3, 0.0, 1.0, 0.5};
  CHECK((simulate_outcomes(g, x, eps, p) - (Eigen::VectorXd::Constant(25, 0.3) + x + 0.5 * h * x + eps))
            .cwiseAbs()
            .maxCoeff() < 1e-14);

  const Graph empty = Graph::from_edges(25, std::vector<Edge>{});
  p.delta = 0.5;
  CHECK((simulate_outcomes(empty, x, eps, p) - (Eigen::VectorXd::Constant(25, 0.3) + x + eps)).cwiseAbs().maxCoeff() <
        1e-14);

  const Eigen::VectorXd y = simulate_outcomes(g, x, eps, p);
  const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(25, 0.3) + x + 0.5 * h * x + eps;
  CHECK((y - p.delta * h * y - rhs).cwiseAbs().maxCoeff() <= 1e-12);
  // Recover eps from the structural equation.
  const Eigen::VectorXd back = y - 0.3 * Eigen::VectorXd::Ones(25) - p.delta * h * y - x - 0.5 * h * x;
  CHECK((back - eps).cwiseAbs().maxCoeff() < 1e-10);

  p.delta = 1.0;
  CHECK_THROWS_AS(simulate_outcomes(g, x, eps, p), InvalidArgument);
  p.delta = -1.2;
  CHECK_THROWS_AS(simulate_outcomes(g, x, eps, p), InvalidArgument);
}

TEST_CASE("reduced_form_check") {
  const Graph k6 = peerfx::testing::complete(6);
  std::mt19937_64 gen(10);
  const Eigen::VectorXd x = peerfx::testing::random_vector(gen, 6);
  const Eigen::VectorXd eps = peerfx::testing::random_vector(gen, 6);

  StructuralParams p{0.2, 0.0, 1.0, 0.5};
  CHECK(reduced_form_check(k6, x, eps, p, 0) < 1e-14);

  p.delta = 0.5;
  CHECK(reduced_form_check(k6, x, eps, p, 40) < 1e-10);

  p.gamma = -p.delta * p.beta;
  CHECK(p.lambda() == 0.0);
  const double d10 = reduced_form_check(k6, x, eps, p, 10);
  const double d11 = reduced_form_check(k6, x, eps, p, 11);
  CHECK(d11 / d10 == doctest::Approx(0.5).epsilon(0.4));

  CHECK_THROWS_AS(reduced_form_check(k6, x, eps, p, -1), InvalidArgument);
  const Graph isolated = Graph::from_edges(3, std::vector<Edge>{{0, 1}});
  CHECK_THROWS_AS(reduced_form_check(isolated, Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0, 0, 0), p, 5),
                  InvalidArgument);
}

TEST_CASE("simulate_dataset determinism and layout") {
  DesignConfig cfg;
  cfg.groups = 12;
  cfg.group_size = 9;
  cfg.coupling.phi = Phi::linear;
  const Dataset a = simulate_dataset(cfg, 77, 3);
  const Dataset b = simulate_dataset(cfg, 77, 3);
  CHECK(a.signature() == b.signature());
  CHECK(a.groups.front().id == "g00");
  CHECK(a.groups.back().id == "g11");
  CHECK(a.observation_count() == 108);
  CHECK(simulate_dataset(cfg, 77, 4).signature() != a.signature());
  CHECK(simulate_dataset(cfg, 78, 3).signature() != a.signature());

  RngStream r1 = RngStream::derive(5, 1, 2), r2 = RngStream::derive(5, 1, 2);
  const GroupDraw g1 = simulate_group("a", 10, cfg, r1);
  const GroupDraw g2 = simulate_group("a", 10, cfg, r2);
  CHECK(g1.data.graph == g2.data.graph);
  CHECK(g1.eta == g2.eta);
  CHECK(g1.errors == g2.errors);
  CHECK(g1.data.y == g2.data.y);
}

TEST_CASE("leave-own-out instruments are uncorrelated with own errors") {
  DesignConfig cfg;
  cfg.coupling.phi = Phi::linear;
  std::vector<double> q, eps, degree;
  for (std::size_t g = 0; g < 400; ++g) {
    RngStream rng = RngStream::derive(31, 0, g);
    const GroupDraw draw = simulate_group("g", 25, cfg, rng);
    const Eigen::VectorXd q1 = q_transform(draw.data.graph, draw.data.x, 1);
    for (Eigen::Index i = 0; i < 25; ++i) {
      q.push_back(q1(i));
      eps.push_back(draw.errors(i));
      degree.push_back(static_cast<double>(draw.data.graph.degree(static_cast<std::size_t>(i))));
    }
  }
  const double bound = 4.0 / std::sqrt(static_cast<double>(q.size()));
  CHECK(std::abs(correlation(q, eps)) < bound);
  // The network itself is endogenous: degree tracks eta and so eps.
  CHECK(correlation(degree, eps) > 10 * bound);
}
