#ifndef DEKOHERE_TYPES_HPP
#define DEKOHERE_TYPES_HPP

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dekohere {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

using RealFn = std::function<double(double)>;

inline constexpr Complex kI{0.0, 1.0};

// Numerical contract of the library: algebraic identities hold to kTightTol,
// spectra may dip below zero by at most kPsdTol.
inline constexpr double kTightTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kDefaultDegeneracyTol = 1e-9;

// Thrown when an input violates a documented precondition.
class validation_error : public std::invalid_argument {
 public:
  explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

inline double hermiticity_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols())
    throw validation_error(std::string(who) + ": matrix must be square, got " +
                           std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline void require_hermitian(const Matrix& m, const char* who, double tol = kTightTol) {
  require_square(m, who);
  const double defect = hermiticity_defect(m);
  if (defect > tol)
    throw validation_error(std::string(who) + ": matrix not Hermitian (defect " +
                           std::to_string(defect) + " > tol)");
}

}  // namespace dekohere

#endif
