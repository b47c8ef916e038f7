#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace widedoa {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Rotates each column by a unit phase so that its first element whose
// modulus exceeds `tol` times the column norm is real and positive.
void fix_column_gauge(CMatrix& vectors, double tol = 1e-10);

bool is_hermitian(const CMatrix& m, double rel_tol);

// Orthonormal basis of the column space (thin Householder QR).
CMatrix orthonormal_columns(const CMatrix& m);

// 2-norm condition number, infinite for rank-deficient input.
double condition_number(const CMatrix& m);

}  // namespace widedoa
