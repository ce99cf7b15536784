#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace invertext {

using Embedding = Eigen::VectorXf;
using Matrix = Eigen::MatrixXf;

inline void check_finite(const Embedding& e, const char* what = "embedding") {
  if (!e.allFinite()) throw std::runtime_error(std::string(what) + ": non-finite values");
}

inline double cosine_sim(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double na = a.cast<double>().norm();
  double nb = b.cast<double>().norm();
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero vector");
  double c = a.cast<double>().dot(b.cast<double>()) / (na * nb);
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

}  // namespace invertext
