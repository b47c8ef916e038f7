#include "widedoa/linalg.hpp"

#include <limits>

namespace widedoa {

void fix_column_gauge(CMatrix& vectors, double tol) {
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
    auto col = vectors.col(k);
    const double norm = col.norm();
    if (norm == 0.0) continue;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      const double mag = std::abs(col(i));
      if (mag > tol * norm) {
        col *= std::conj(col(i)) / mag;
        col(i) = Complex(std::abs(col(i)), 0.0);
        break;
      }
    }
  }
}

bool is_hermitian(const CMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.norm();
  const double asym = (m - m.adjoint()).norm();
  return asym <= rel_tol * scale + std::numeric_limits<double>::min();
}

CMatrix orthonormal_columns(const CMatrix& m) {
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.householderQ() * CMatrix::Identity(m.rows(), m.cols());
}

double condition_number(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

}  // namespace widedoa
