#pragma once

#include <Eigen/Core>
#include <vector>

namespace ipoc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Block sizes of a collocation Newton matrix over `intervals` mesh intervals
/// with n_y differential, n_z algebraic and n_p parameter unknowns.
///
/// Unknown ordering: (Y_0, Z_0, Zmid_0, Y_1, Z_1, Zmid_1, ..., Y_N, Z_N, params).
/// Row ordering: per interval i the rows [algebraic at node i (n_z),
/// collocation (n_y), algebraic at midpoint (n_z)], then the algebraic rows at
/// the last node (n_z), then the boundary rows (n_y + n_p).
struct AbdLayout {
  int n_y = 0;
  int n_z = 0;
  int n_p = 0;
  int intervals = 0;

  int node_width() const { return n_y + n_z; }
  int interval_width() const { return n_y + 2 * n_z; }
  int bc_rows() const { return n_y + n_p; }
  Eigen::Index size() const {
    return Eigen::Index(intervals) * interval_width() + node_width() + n_p;
  }
  Eigen::Index node_offset(int i) const { return Eigen::Index(i) * interval_width(); }
  Eigen::Index mid_offset(int i) const { return node_offset(i) + node_width(); }
  Eigen::Index param_offset() const { return node_offset(intervals) + node_width(); }
  Eigen::Index bc_offset() const { return node_offset(intervals) + n_z; }
};

/// Almost-block-diagonal matrix with dense parameter columns and boundary rows.
class AbdMatrix {
 public:
  explicit AbdMatrix(const AbdLayout& layout);

  const AbdLayout& layout() const { return layout_; }

  /// Interval rows against (Y_i, Z_i, Zmid_i).
  Mat& local(int i) { return local_[i]; }
  const Mat& local(int i) const { return local_[i]; }
  /// Interval rows against (Y_{i+1}, Z_{i+1}).
  Mat& next(int i) { return next_[i]; }
  const Mat& next(int i) const { return next_[i]; }
  /// Interval rows against the parameters.
  Mat& param(int i) { return param_[i]; }
  const Mat& param(int i) const { return param_[i]; }

  /// Algebraic rows of the last node against (Y_N, Z_N) and the parameters.
  Mat& final_node() { return final_node_; }
  const Mat& final_node() const { return final_node_; }
  Mat& final_param() { return final_param_; }
  const Mat& final_param() const { return final_param_; }

  /// Boundary rows against (Y_0, Z_0), (Y_N, Z_N) and the parameters.
  Mat& bc_first() { return bc_first_; }
  const Mat& bc_first() const { return bc_first_; }
  Mat& bc_last() { return bc_last_; }
  const Mat& bc_last() const { return bc_last_; }
  Mat& bc_param() { return bc_param_; }
  const Mat& bc_param() const { return bc_param_; }

  Mat to_dense() const;
  Vec multiply(const Vec& x) const;
  /// |A| |x| with absolute values taken entrywise.
  Vec multiply_abs(const Vec& x) const;

 private:
  Vec apply(const Vec& x, bool absolute) const;

  AbdLayout layout_;
  std::vector<Mat> local_;
  std::vector<Mat> next_;
  std::vector<Mat> param_;
  Mat final_node_;
  Mat final_param_;
  Mat bc_first_;
  Mat bc_last_;
  Mat bc_param_;
};

/// Structured LU of an AbdMatrix.
///
/// Elimination sweeps the intervals left to right. The boundary rows are
/// carried along the sweep as pivot candidates, so every pivot is chosen by
/// partial pivoting over all rows that are nonzero in its column: the result
/// is row-equivalent to dense Gaussian elimination with partial pivoting while
/// touching only O(N b^2) storage.
///
/// The handle is immutable once built; `solve` may be called concurrently.
class AbdFactorization {
 public:
  /// Throws SingularMatrix naming the interval block (or `intervals` for the
  /// closing block) whose pivot falls below kSingularPivotRatio of the
  /// block's largest entry.
  explicit AbdFactorization(const AbdMatrix& matrix);

  const AbdLayout& layout() const { return layout_; }

  /// Throws DimensionError when rhs has the wrong length.
  Vec solve(const Vec& rhs) const;

 private:
  struct Step {
    Mat front;                // eliminated front, multipliers below the diagonal
    std::vector<int> pivots;  // row swapped into position k at elimination step k
  };

  AbdLayout layout_;
  std::vector<Step> steps_;
  Step closing_;
};

inline constexpr double kSingularPivotRatio = 1e-17;

}  // namespace ipoc
