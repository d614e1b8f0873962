#include "al3d/pca.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace al3d {

Eigen::VectorXd PcaModel::transform(const Eigen::VectorXd& v) const {
  if (v.size() != components.cols()) {
    throw std::invalid_argument("PcaModel::transform: dimensionality mismatch");
  }
  return components * (v - mean);
}

Eigen::VectorXd PcaModel::inverse(const Eigen::VectorXd& k) const {
  if (k.size() != components.rows()) {
    throw std::invalid_argument("PcaModel::inverse: dimensionality mismatch");
  }
  return components.transpose() * k + mean;
}

Eigen::MatrixXf PcaModel::transform_rows(const Eigen::MatrixXf& rows) const {
  if (rows.cols() != components.cols()) {
    throw std::invalid_argument("PcaModel::transform_rows: dimensionality mismatch");
  }
  const Eigen::MatrixXd centered =
      rows.cast<double>().rowwise() - mean.transpose();
  return (centered * components.transpose()).cast<float>();
}

PcaAccumulator::PcaAccumulator(int dim)
    : sum_(Eigen::VectorXd::Zero(dim)), outer_(Eigen::MatrixXd::Zero(dim, dim)) {
  if (dim < 1) throw std::invalid_argument("PcaAccumulator: dim must be positive");
}

void PcaAccumulator::add(const Eigen::MatrixXf& batch) {
  if (batch.cols() != sum_.size()) {
    throw std::invalid_argument("PcaAccumulator::add: dimensionality mismatch");
  }
  const Eigen::MatrixXd b = batch.cast<double>();
  sum_ += b.colwise().sum();
  outer_ += b.transpose() * b;
  count_ += batch.rows();
}

void PcaAccumulator::add_row(const Eigen::VectorXd& row) {
  if (row.size() != sum_.size()) {
    throw std::invalid_argument("PcaAccumulator::add_row: dimensionality mismatch");
  }
  sum_ += row;
  outer_ += row * row.transpose();
  count_ += 1;
}

void PcaAccumulator::merge(const PcaAccumulator& other) {
  if (other.sum_.size() != sum_.size()) {
    throw std::invalid_argument("PcaAccumulator::merge: dimensionality mismatch");
  }
  sum_ += other.sum_;
  outer_ += other.outer_;
  count_ += other.count_;
}

PcaModel PcaAccumulator::finalize(int k) const {
  const int dim = this->dim();
  if (k < 1 || k > dim) {
    throw std::invalid_argument("PcaAccumulator::finalize: k out of range");
  }
  if (count_ < std::max<long long>(2, k)) {
    throw std::invalid_argument("PcaAccumulator::finalize: not enough samples");
  }
  const Eigen::VectorXd mean = sum_ / static_cast<double>(count_);
  const Eigen::MatrixXd cov =
      (outer_ - static_cast<double>(count_) * mean * mean.transpose()) /
      static_cast<double>(count_ - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("PcaAccumulator::finalize: eigendecomposition failed");
  }
  // Eigenvalues come out ascending; take the top k in descending order.
  PcaModel model;
  model.mean = mean;
  model.components.resize(k, dim);
  model.explained_variances.resize(k);
  for (int i = 0; i < k; ++i) {
    const int src = dim - 1 - i;
    model.components.row(i) = solver.eigenvectors().col(src).transpose();
    model.explained_variances[i] = std::max(0.0, solver.eigenvalues()[src]);
  }
  return model;
}

PcaModel pca_fit(const Eigen::MatrixXf& data, int k) {
  PcaAccumulator acc(static_cast<int>(data.cols()));
  acc.add(data);
  return acc.finalize(k);
}

}  // namespace al3d
