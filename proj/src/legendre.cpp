#include "rfempc/legendre.hpp"

namespace rfempc {

template Eigen::VectorXd legendre_shifted_coefficients<double>(int);
template double legendre_shifted<double>(int, double);
template QuadratureRule<double> gauss_legendre<double>(int);

}  // namespace rfempc
