#pragma once

#include <random>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "phalcor/array_model.hpp"

namespace test {

inline Eigen::VectorXcd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = {g(rng), g(rng)};
  return v;
}

inline Eigen::MatrixXcd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

inline phalcor::Direction random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return phalcor::Direction::from_vector({g(rng), g(rng), g(rng)});
}

inline double min_eigenvalue(const Eigen::MatrixXcd& hermitian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian);
  return es.eigenvalues().minCoeff();
}

}  // namespace test
