#include "dfsbqc/density.hpp"

#include <stdexcept>

namespace dfsbqc {

DensityMatrix2 qubit_density(const QubitState& q) {
    Eigen::Vector2cd v;
    v << q.amp_h, q.amp_v;
    return v * v.adjoint();
}

double trace_distance(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma) {
    if (rho.rows() != rho.cols() || rho.rows() != sigma.rows() || sigma.rows() != sigma.cols())
        throw std::invalid_argument("trace_distance: shape mismatch");
    Eigen::MatrixXcd d = rho - sigma;
    d = (d + d.adjoint()) / 2.0;  // scrub roundoff asymmetry
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

bool is_valid_density(const Eigen::MatrixXcd& rho, double tol) {
    if (rho.rows() != rho.cols()) return false;
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(rho.trace().real() - 1.0) > tol || std::abs(rho.trace().imag()) > tol)
        return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es((rho + rho.adjoint()) / 2.0);
    return es.eigenvalues().minCoeff() >= -tol;
}

DensityMatrix2 partial_trace_second(const DensityMatrix4& rho) {
    DensityMatrix2 out = DensityMatrix2::Zero();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) out(i, j) += rho(2 * i + k, 2 * j + k);
    return out;
}

std::map<BasisState, int> build_basis_index(
    std::initializer_list<const WeightedStates*> ensembles) {
    std::map<BasisState, int> idx;
    for (const auto* set : ensembles)
        for (const auto& [w, st] : *set)
            for (const auto& [b, amp] : st.terms()) idx.try_emplace(b, 0);
    int next = 0;
    for (auto& [b, i] : idx) i = next++;  // canonical basis order
    return idx;
}

Eigen::MatrixXcd density_on_index(const WeightedStates& ensemble,
                                  const std::map<BasisState, int>& index) {
    const int dim = static_cast<int>(index.size());
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& [w, st] : ensemble) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
        for (const auto& [b, amp] : st.terms()) v(index.at(b)) = amp;
        rho += w * (v * v.adjoint());
    }
    return rho;
}

}  // namespace dfsbqc
