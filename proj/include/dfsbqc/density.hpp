#pragma once

#include "dfsbqc/state.hpp"

#include <Eigen/Dense>

#include <map>
#include <utility>
#include <vector>

namespace dfsbqc {

using DensityMatrix2 = Eigen::Matrix2cd;
using DensityMatrix4 = Eigen::Matrix4cd;

DensityMatrix2 qubit_density(const QubitState& q);

/// (1/2) * trace norm of rho - sigma.
double trace_distance(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma);

/// Hermitian within tol, unit trace within tol, eigenvalues >= -tol.
bool is_valid_density(const Eigen::MatrixXcd& rho, double tol = kExactTol);

/// Reduced state of the first qubit of a two-qubit density matrix.
DensityMatrix2 partial_trace_second(const DensityMatrix4& rho);

using WeightedStates = std::vector<std::pair<double, StateVector>>;

/// Canonical basis index covering every term of every listed ensemble, so
/// densities built from different ensembles stay comparable.
std::map<BasisState, int> build_basis_index(
    std::initializer_list<const WeightedStates*> ensembles);

/// sum_i w_i |psi_i><psi_i| expressed on the given basis index.
Eigen::MatrixXcd density_on_index(const WeightedStates& ensemble,
                                  const std::map<BasisState, int>& index);

}  // namespace dfsbqc
