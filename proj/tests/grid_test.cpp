#include "gridcascade/grid.hpp"

#include <doctest.h>

#include <random>

#include "gridcascade/cases.hpp"
#include "gridcascade/errors.hpp"
#include "test_support.hpp"

using namespace cascade;

TEST_CASE("five-node built-in case passes validation with N=5 and 7 lines") {
  const GridCase grid = builtin_five_node();
  CHECK(grid.topology.node_count == 5);
  CHECK(grid.topology.lines.size() == 7);
  CHECK(validate_topology(grid.topology).ok());
  CHECK(validate_params(grid.topology, grid.params).ok());
  CHECK(grid.topology.generators == std::vector<NodeId>{1, 4});
}

TEST_CASE("validation reports self-loops, duplicates and bad couplings") {
  GridTopology topology = make_topology(
      4, {Line::make(3, 3, 1.0), Line::make(0, 1, 1.0), Line::make(1, 0, 2.0),
          Line::make(1, 2, -1.0), Line::make(2, 7, 1.0)},
      {9});
  ValidationResult result = validate_topology(topology);
  CHECK_FALSE(result.ok());
  CHECK(result.has(ValidationCode::self_loop));
  CHECK(result.has(ValidationCode::duplicate_line));
  CHECK(result.has(ValidationCode::nonpositive_coupling));
  CHECK(result.has(ValidationCode::dangling_node));
  CHECK(result.has(ValidationCode::generator_out_of_range));
}

TEST_CASE("machine parameter validation flags positivity and imbalance") {
  const GridCase grid = builtin_five_node();
  MachineParams params = grid.params;
  params.inertia[2] = 0.0;
  params.damping[1] = -0.5;
  params.power[0] = 1.0;  // breaks the balance by 2
  ValidationResult result = validate_params(grid.topology, params);
  CHECK(result.has(ValidationCode::nonpositive_inertia));
  CHECK(result.has(ValidationCode::nonpositive_damping));
  CHECK(result.has(ValidationCode::power_imbalance));
}

TEST_CASE("remove_line drops the line from the set") {
  const GridCase grid = builtin_five_node();
  const GridTopology after = remove_line(grid.topology, 1, 3);  // (2,4) in 1-based ids
  CHECK(after.lines.size() == 6);
  CHECK_FALSE(after.has_line(1, 3));
  CHECK_FALSE(after.has_line(3, 1));
  CHECK_THROWS_AS(remove_line(after, 1, 3), ValidationError);
}

TEST_CASE("degrees after removing line (1,2) from the five-node grid") {
  const GridCase grid = builtin_five_node();
  const GridTopology after = remove_line(grid.topology, 0, 1);
  // Hand count on the remaining edge set {(1,3),(1,5),(2,3),(2,4),(3,4),(4,5)}.
  CHECK(after.degrees() == std::vector<int>{2, 2, 3, 3, 2});
}

TEST_CASE("removing then re-adding a line restores the original topology") {
  const GridCase grid = builtin_five_node();
  const Line original = grid.topology.lines[grid.topology.line_index(1, 2).value()];
  GridTopology after = remove_line(grid.topology, 1, 2);
  after = add_line(after, original);
  CHECK(after.lines == grid.topology.lines);
}

TEST_CASE("connected components") {
  const GridCase grid = builtin_five_node();
  SUBCASE("intact grid is one component") {
    CHECK(connected_components(grid.topology).size() == 1);
  }
  SUBCASE("cutting every line at node 5 yields {5} and {1,2,3,4}") {
    GridTopology cut = remove_line(grid.topology, 0, 4);
    cut = remove_line(cut, 3, 4);
    const auto components = connected_components(cut);
    REQUIRE(components.size() == 2);
    CHECK(components[0] == std::vector<NodeId>{0, 1, 2, 3});
    CHECK(components[1] == std::vector<NodeId>{4});
  }
  SUBCASE("empty line set gives singletons") {
    const GridTopology empty = make_topology(3, {}, {});
    CHECK(connected_components(empty).size() == 3);
  }
}

TEST_CASE("laplacian row for node 5 of the five-node grid") {
  const GridCase grid = builtin_five_node();
  const Eigen::MatrixXd lap = laplacian(grid.topology, Weighting::unweighted);
  CHECK(lap(4, 4) == doctest::Approx(2.0));
  CHECK(lap(4, 0) == doctest::Approx(-1.0));
  CHECK(lap(4, 3) == doctest::Approx(-1.0));
  CHECK(lap(4, 1) == doctest::Approx(0.0));
  CHECK(lap(4, 2) == doctest::Approx(0.0));

  const Eigen::MatrixXd weighted = laplacian(grid.topology, Weighting::physical);
  CHECK(weighted(4, 4) == doctest::Approx(2.0 * 1.63));
  CHECK(weighted(4, 0) == doctest::Approx(-1.63));
}

TEST_CASE("single node has a 1x1 zero laplacian") {
  const GridTopology lone = make_topology(1, {}, {});
  const Eigen::MatrixXd lap = laplacian(lone, Weighting::unweighted);
  REQUIRE(lap.rows() == 1);
  CHECK(lap(0, 0) == 0.0);
}

TEST_CASE("laplacian properties on random connected graphs") {
  std::mt19937 rng(20240811);
  for (int trial = 0; trial < 20; ++trial) {
    const GridTopology topology = testing::random_connected_topology(rng, 12, 2.5);
    for (Weighting weighting : {Weighting::unweighted, Weighting::physical}) {
      const Eigen::MatrixXd lap = laplacian(topology, weighting);
      CHECK(lap.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
      CHECK(lap == lap.transpose());  // bit-for-bit under deterministic assembly

      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap, Eigen::EigenvaluesOnly);
      const Eigen::VectorXd eigenvalues = solver.eigenvalues();
      CHECK(std::abs(eigenvalues[0]) < 1e-9);
      // Connected graph: exactly one (numerical) zero.
      CHECK(eigenvalues[1] > 1e-9);
    }
  }
}

TEST_CASE("disconnected graph has a zero eigenvalue per component") {
  GridTopology two_parts = make_topology(
      5, {Line::make(0, 1, 1.0), Line::make(2, 3, 1.0), Line::make(3, 4, 1.0)}, {});
  REQUIRE(connected_components(two_parts).size() == 2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      laplacian(two_parts, Weighting::unweighted), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd eigenvalues = solver.eigenvalues();
  CHECK(std::abs(eigenvalues[0]) < 1e-12);
  CHECK(std::abs(eigenvalues[1]) < 1e-12);
  CHECK(eigenvalues[2] > 1e-9);
}
