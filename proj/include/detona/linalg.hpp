#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <complex>
#include <stdexcept>
#include <vector>

namespace detona {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EigPairs {
  CVec values;
  CMat vectors;  // columns
};

inline EigPairs eig(const CMat& a) {
  Eigen::ComplexEigenSolver<CMat> es(a, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) throw NumericalError("complex eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline EigPairs eig(const Mat& a) { return eig(CMat(a.cast<Cplx>())); }

// Real-part sign census of a spectrum.
struct SplitCount {
  int n_stable = 0;    // Re mu < 0
  int n_unstable = 0;  // Re mu > 0
  int n_center = 0;    // |Re mu| <= tol
};

inline SplitCount split_count(const CVec& mus, double tol = 1e-10) {
  SplitCount s;
  for (Eigen::Index i = 0; i < mus.size(); ++i) {
    double re = mus[i].real();
    if (re < -tol)
      ++s.n_stable;
    else if (re > tol)
      ++s.n_unstable;
    else
      ++s.n_center;
  }
  return s;
}

// Orthonormal basis of the span of the columns of a (rank-revealing QR).
inline Mat orthonormal_basis(const Mat& a) {
  if (a.cols() == 0) return Mat(a.rows(), 0);
  Eigen::ColPivHouseholderQR<Mat> qr(a);
  Eigen::Index r = qr.rank();
  Mat q = qr.householderQ() * Mat::Identity(a.rows(), r);
  return q;
}

// Minimum principal angle between the column spans of a and b, in radians.
inline double min_principal_angle(const Mat& a, const Mat& b) {
  Mat qa = orthonormal_basis(a);
  Mat qb = orthonormal_basis(b);
  if (qa.cols() == 0 || qb.cols() == 0) return M_PI / 2;
  Eigen::JacobiSVD<Mat> svd(qa.transpose() * qb);
  double smax = svd.singularValues()(0);
  smax = std::min(1.0, std::max(-1.0, smax));
  return std::acos(smax);
}

// Symmetric positive definite square root.
inline Mat spd_sqrt(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  if (es.info() != Eigen::Success) throw NumericalError("selfadjoint eigensolver failed");
  Vec d = es.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] <= 0) throw NumericalError("spd_sqrt: matrix not positive definite");
    d[i] = std::sqrt(d[i]);
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

// Real basis of the stable (Re mu < 0) invariant subspace of a real matrix.
// Complex-conjugate pairs contribute their real and imaginary parts.
inline Mat real_stable_subspace(const Mat& a, double tol = 1e-10) {
  EigPairs ep = eig(a);
  std::vector<Vec> cols;
  for (Eigen::Index i = 0; i < ep.values.size(); ++i) {
    if (ep.values[i].real() >= -tol) continue;
    if (std::abs(ep.values[i].imag()) <= tol) {
      cols.push_back(ep.vectors.col(i).real());
    } else if (ep.values[i].imag() > 0) {  // take each pair once
      cols.push_back(ep.vectors.col(i).real());
      cols.push_back(ep.vectors.col(i).imag());
    }
  }
  Mat m(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = cols[j];
  return orthonormal_basis(m);
}

inline Mat real_unstable_subspace(const Mat& a, double tol = 1e-10) {
  return real_stable_subspace(-a, tol);
}

}  // namespace detona
