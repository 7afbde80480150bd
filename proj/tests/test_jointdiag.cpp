#include <doctest.h>

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tbss/errors.hpp"
#include "tbss/jointdiag.hpp"
#include "tbss/metrics.hpp"

using namespace tbss;

namespace {

Eigen::MatrixXd random_orthogonal(index_t p, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(p, p);
  for (index_t i = 0; i < p; ++i)
    for (index_t j = 0; j < p; ++j) a(i, j) = normal(gen);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

std::vector<Eigen::MatrixXd> commuting_set(const Eigen::MatrixXd& v, index_t count,
                                           unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::vector<Eigen::MatrixXd> out;
  const index_t p = v.rows();
  for (index_t m = 0; m < count; ++m) {
    Eigen::VectorXd d(p);
    for (index_t i = 0; i < p; ++i) d[i] = unif(gen);
    out.push_back(v * d.asDiagonal() * v.transpose());
  }
  return out;
}

}  // namespace

TEST_SUITE("jointdiag") {

TEST_CASE("recovers the common eigenbasis of an exactly diagonalizable set") {
  const index_t p = 5;
  const Eigen::MatrixXd v0 = random_orthogonal(p, 101);
  const auto set = commuting_set(v0, 7, 102);
  const JointDiagResult res = joint_diagonalize(set);
  CHECK(res.converged);
  // The rotation is orthogonal ...
  CHECK((res.rotation.transpose() * res.rotation - Eigen::MatrixXd::Identity(p, p))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  // ... conjugation diagonalizes every matrix ...
  for (const auto& c : set) {
    Eigen::MatrixXd d = res.rotation.transpose() * c * res.rotation;
    d.diagonal().setZero();
    CHECK(d.cwiseAbs().maxCoeff() < 1e-8);
  }
  // ... and matches the generating basis up to order and sign.
  CHECK(md_index(res.rotation.transpose() * v0) < 1e-6);
}

TEST_CASE("already diagonal input converges without rotating") {
  std::vector<Eigen::MatrixXd> set = {
      Eigen::Vector3d(1.0, -2.0, 3.0).asDiagonal().toDenseMatrix(),
      Eigen::Vector3d(0.5, 0.25, -1.0).asDiagonal().toDenseMatrix()};
  const JointDiagResult res = joint_diagonalize(set);
  CHECK(res.converged);
  CHECK(res.sweeps_used == 1);
  CHECK((res.rotation - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK(res.off_diagonal == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("a single matrix reduces to its eigendecomposition") {
  const Eigen::MatrixXd v0 = random_orthogonal(4, 111);
  const auto set = commuting_set(v0, 1, 112);
  const JointDiagResult res = joint_diagonalize(set);
  Eigen::MatrixXd d = res.rotation.transpose() * set[0] * res.rotation;
  d.diagonal().setZero();
  CHECK(d.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("weight two equals listing the matrix twice") {
  const Eigen::MatrixXd v0 = random_orthogonal(4, 121);
  auto set = commuting_set(v0, 3, 122);
  std::mt19937_64 gen(123);
  std::normal_distribution<double> normal;
  // Perturb so the optimum actually depends on the weighting.
  for (auto& c : set) {
    Eigen::MatrixXd e(4, 4);
    for (index_t i = 0; i < 4; ++i)
      for (index_t j = 0; j < 4; ++j) e(i, j) = 0.05 * normal(gen);
    c += e + e.transpose();
  }
  const JointDiagResult weighted = joint_diagonalize(set, {}, {2.0, 1.0, 2.0});
  const std::vector<Eigen::MatrixXd> doubled = {set[0], set[0], set[1], set[2], set[2]};
  const JointDiagResult listed = joint_diagonalize(doubled);
  CHECK((weighted.rotation - listed.rotation).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(weighted.off_diagonal ==
        doctest::Approx(listed.off_diagonal).epsilon(1e-9));
}

TEST_CASE("diag and off objectives split the invariant total mass") {
  std::mt19937_64 gen(131);
  std::normal_distribution<double> normal;
  std::vector<Eigen::MatrixXd> set;
  std::vector<double> weights = {1.0, 2.0, 0.5};
  for (int m = 0; m < 3; ++m) {
    Eigen::MatrixXd e(4, 4);
    for (index_t i = 0; i < 4; ++i)
      for (index_t j = 0; j < 4; ++j) e(i, j) = normal(gen);
    set.push_back(0.5 * (e + e.transpose()));
  }
  double total = 0.0;
  for (std::size_t m = 0; m < set.size(); ++m)
    total += weights[m] * set[m].squaredNorm();
  for (unsigned seed : {141u, 142u, 143u}) {
    const Eigen::MatrixXd v = random_orthogonal(4, seed);
    const double split =
        off_objective(v, set, weights) + diag_objective(v, set, weights);
    CHECK(split == doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("sweep cap reports non-convergence") {
  const Eigen::MatrixXd v0 = random_orthogonal(5, 151);
  auto set = commuting_set(v0, 4, 152);
  std::mt19937_64 gen(153);
  std::normal_distribution<double> normal;
  for (auto& c : set) {
    Eigen::MatrixXd e(5, 5);
    for (index_t i = 0; i < 5; ++i)
      for (index_t j = 0; j < 5; ++j) e(i, j) = 0.1 * normal(gen);
    c += e + e.transpose();
  }
  JointDiagConfig cfg;
  cfg.max_sweeps = 1;
  const JointDiagResult res = joint_diagonalize(set, cfg);
  CHECK_FALSE(res.converged);
  CHECK(res.sweeps_used == 1);
  // The orthogonality of the accumulated rotation is preserved regardless.
  CHECK((res.rotation.transpose() * res.rotation - Eigen::MatrixXd::Identity(5, 5))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("off objective never increases across extra sweeps") {
  const Eigen::MatrixXd v0 = random_orthogonal(5, 161);
  auto set = commuting_set(v0, 6, 162);
  std::mt19937_64 gen(163);
  std::normal_distribution<double> normal;
  for (auto& c : set) {
    Eigen::MatrixXd e(5, 5);
    for (index_t i = 0; i < 5; ++i)
      for (index_t j = 0; j < 5; ++j) e(i, j) = 0.05 * normal(gen);
    c += e + e.transpose();
  }
  double total = 0.0;
  for (const auto& c : set) total += c.squaredNorm();
  double prev = total;
  for (int sweeps = 1; sweeps <= 8; ++sweeps) {
    JointDiagConfig cfg;
    cfg.max_sweeps = sweeps;
    cfg.tolerance = 1e-300;  // force the full sweep count
    const JointDiagResult res = joint_diagonalize(set, cfg);
    const double off = off_objective(res.rotation, set);
    CHECK(off <= prev + 1e-10 * total);
    prev = off;
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(joint_diagonalize({}), Error);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(4, 4);
  CHECK_THROWS_AS(joint_diagonalize({a, b}), Error);
  CHECK_THROWS_AS(joint_diagonalize({Eigen::MatrixXd::Zero(3, 2)}), Error);
  CHECK_THROWS_AS(joint_diagonalize({a}, {}, {1.0, 2.0}), Error);
  JointDiagConfig bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(joint_diagonalize({a}, bad), Error);
  bad.tolerance = 1e-6;
  bad.max_sweeps = 0;
  CHECK_THROWS_AS(joint_diagonalize({a}, bad), Error);
  CHECK_THROWS_AS(off_objective(Eigen::MatrixXd::Identity(2, 2), {a}), Error);
}

}  // TEST_SUITE
