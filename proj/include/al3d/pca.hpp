#pragma once

#include <Eigen/Core>

namespace al3d {

/// Linear compression model. Component rows are orthonormal and ordered by
/// nonincreasing explained variance (sample covariance convention, 1/(n-1)).
struct PcaModel {
  Eigen::VectorXd mean;                  // D
  Eigen::MatrixXd components;            // K x D
  Eigen::VectorXd explained_variances;   // K

  int input_dim() const { return static_cast<int>(components.cols()); }
  int output_dim() const { return static_cast<int>(components.rows()); }

  Eigen::VectorXd transform(const Eigen::VectorXd& v) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& k) const;
  /// Row-wise transform of an N x D float matrix.
  Eigen::MatrixXf transform_rows(const Eigen::MatrixXf& rows) const;
};

/// Single-pass moment accumulator with bounded memory. Batches may be fed in
/// any grouping and accumulators merged associatively across workers.
class PcaAccumulator {
 public:
  explicit PcaAccumulator(int dim);

  void add(const Eigen::MatrixXf& batch);
  void add_row(const Eigen::VectorXd& row);
  void merge(const PcaAccumulator& other);

  long long count() const { return count_; }
  int dim() const { return static_cast<int>(sum_.size()); }

  /// Eigendecomposition of the accumulated covariance, top-k components.
  /// Throws when k exceeds the dimensionality or the sample count.
  PcaModel finalize(int k) const;

 private:
  long long count_ = 0;
  Eigen::VectorXd sum_;
  Eigen::MatrixXd outer_;  // sum of x x^T
};

/// Convenience one-shot fit over a data matrix.
PcaModel pca_fit(const Eigen::MatrixXf& data, int k);

}  // namespace al3d
