#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "parafit/datamodel.hpp"
#include "parafit/rng.hpp"

namespace testing_util {

inline std::vector<double> random_unit(parafit::Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      n2 += x * x;
    }
  } while (n2 < 1e-12);
  for (auto& x : v) x /= std::sqrt(n2);
  return v;
}

inline parafit::Matrix random_unit_rows(parafit::Rng& rng, std::size_t n, std::size_t dim) {
  parafit::Matrix m(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = random_unit(rng, dim);
    for (std::size_t j = 0; j < dim; ++j) m.at(i, j) = v[j];
  }
  return m;
}

inline std::vector<std::vector<double>> to_rows(const parafit::Matrix& m) {
  std::vector<std::vector<double>> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

inline parafit::Matrix basis(std::size_t n, std::size_t dim) {
  parafit::Matrix m(n, dim);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i % dim) = 1.0;
  return m;
}

}  // namespace testing_util
