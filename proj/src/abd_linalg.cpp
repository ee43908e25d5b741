#include "ipoc/abd_linalg.hpp"

#include <cmath>

#include "ipoc/errors.hpp"

namespace ipoc {

AbdMatrix::AbdMatrix(const AbdLayout& layout) : layout_(layout) {
  if (layout.n_y < 1 || layout.n_z < 0 || layout.n_p < 0 || layout.intervals < 1) {
    throw DimensionError("AbdLayout: need n_y >= 1, n_z >= 0, n_p >= 0, intervals >= 1");
  }
  const int s = layout.interval_width();
  const int b = layout.node_width();
  local_.assign(layout.intervals, Mat::Zero(s, s));
  next_.assign(layout.intervals, Mat::Zero(s, b));
  param_.assign(layout.intervals, Mat::Zero(s, layout.n_p));
  final_node_ = Mat::Zero(layout.n_z, b);
  final_param_ = Mat::Zero(layout.n_z, layout.n_p);
  bc_first_ = Mat::Zero(layout.bc_rows(), b);
  bc_last_ = Mat::Zero(layout.bc_rows(), b);
  bc_param_ = Mat::Zero(layout.bc_rows(), layout.n_p);
}

Mat AbdMatrix::to_dense() const {
  const AbdLayout& l = layout_;
  const int s = l.interval_width();
  const int b = l.node_width();
  Mat dense = Mat::Zero(l.size(), l.size());
  for (int i = 0; i < l.intervals; ++i) {
    const Eigen::Index r = l.node_offset(i);
    dense.block(r, l.node_offset(i), s, s) = local_[i];
    dense.block(r, l.node_offset(i + 1), s, b) = next_[i];
    dense.block(r, l.param_offset(), s, l.n_p) = param_[i];
  }
  const Eigen::Index last = l.node_offset(l.intervals);
  dense.block(last, last, l.n_z, b) = final_node_;
  dense.block(last, l.param_offset(), l.n_z, l.n_p) = final_param_;
  dense.block(l.bc_offset(), 0, l.bc_rows(), b) = bc_first_;
  dense.block(l.bc_offset(), last, l.bc_rows(), b) += bc_last_;
  dense.block(l.bc_offset(), l.param_offset(), l.bc_rows(), l.n_p) = bc_param_;
  return dense;
}

Vec AbdMatrix::multiply(const Vec& x) const { return apply(x, false); }

Vec AbdMatrix::multiply_abs(const Vec& x) const { return apply(x.cwiseAbs(), true); }

Vec AbdMatrix::apply(const Vec& x, bool absolute) const {
  const AbdLayout& l = layout_;
  if (x.size() != l.size()) throw DimensionError("AbdMatrix: size mismatch in product");
  const int s = l.interval_width();
  const int b = l.node_width();
  auto op = [absolute](const Mat& m) -> Mat { return absolute ? Mat(m.cwiseAbs()) : m; };
  const auto params = x.segment(l.param_offset(), l.n_p);
  Vec out(l.size());
  for (int i = 0; i < l.intervals; ++i) {
    out.segment(l.node_offset(i), s) = op(local_[i]) * x.segment(l.node_offset(i), s) +
                                       op(next_[i]) * x.segment(l.node_offset(i + 1), b) +
                                       op(param_[i]) * params;
  }
  const auto last = x.segment(l.node_offset(l.intervals), b);
  out.segment(l.node_offset(l.intervals), l.n_z) =
      op(final_node_) * last + op(final_param_) * params;
  out.segment(l.bc_offset(), l.bc_rows()) =
      op(bc_first_) * x.head(b) + op(bc_last_) * last + op(bc_param_) * params;
  return out;
}

namespace {

// In-place partial LU of the first `cols` columns of `front` with row
// pivoting over all rows. Remaining columns receive the row updates.
void eliminate(Mat& front, int cols, std::vector<int>& pivots, int block) {
  const Eigen::Index rows = front.rows();
  const double scale = front.cwiseAbs().maxCoeff();
  pivots.resize(cols);
  for (int k = 0; k < cols; ++k) {
    Eigen::Index best = k;
    front.col(k).tail(rows - k).cwiseAbs().maxCoeff(&best);
    best += k;
    pivots[k] = static_cast<int>(best);
    if (!(std::abs(front(best, k)) > kSingularPivotRatio * scale)) {
      throw SingularMatrix(block);
    }
    // Only the trailing columns move; earlier multipliers stay in place so
    // that the pivots can be replayed one at a time in forward().
    if (best != k) {
      const Eigen::Index tail = front.cols() - k;
      front.row(k).tail(tail).swap(front.row(best).tail(tail));
    }
    const double pivot = front(k, k);
    const Eigen::Index below = rows - k - 1;
    if (below == 0) continue;
    front.col(k).tail(below) /= pivot;
    const Eigen::Index right = front.cols() - k - 1;
    front.bottomRightCorner(below, right).noalias() -=
        front.col(k).tail(below) * front.row(k).tail(right);
  }
}

void forward(const Mat& front, const std::vector<int>& pivots, Vec& rhs) {
  const Eigen::Index rows = front.rows();
  for (std::size_t k = 0; k < pivots.size(); ++k) {
    const Eigen::Index kk = static_cast<Eigen::Index>(k);
    if (pivots[k] != kk) std::swap(rhs(kk), rhs(pivots[k]));
    const Eigen::Index below = rows - kk - 1;
    if (below > 0) rhs.tail(below) -= front.col(kk).tail(below) * rhs(kk);
  }
}

}  // namespace

AbdFactorization::AbdFactorization(const AbdMatrix& matrix) : layout_(matrix.layout()) {
  const AbdLayout& l = layout_;
  const int s = l.interval_width();
  const int b = l.node_width();
  const int c = l.bc_rows();
  const int np = l.n_p;
  const int width = s + 2 * b + np;
  const int cur = 0, nxt = s, lst = s + b, par = s + 2 * b;

  // Rows still waiting for a pivot, stored in front-column layout.
  Mat carried = Mat::Zero(c, width);
  carried.block(0, cur, c, b) = matrix.bc_first();
  carried.block(0, lst, c, b) = matrix.bc_last();
  carried.block(0, par, c, np) = matrix.bc_param();

  steps_.resize(l.intervals);
  for (int i = 0; i < l.intervals; ++i) {
    Step& step = steps_[i];
    step.front.setZero(c + s, width);
    step.front.topRows(c) = carried;
    step.front.block(c, cur, s, s) = matrix.local(i);
    step.front.block(c, nxt, s, b) = matrix.next(i);
    step.front.block(c, par, s, np) = matrix.param(i);
    eliminate(step.front, s, step.pivots, i);

    carried.setZero();
    carried.block(0, cur, c, b) = step.front.block(s, nxt, c, b);
    carried.block(0, lst, c, b) = step.front.block(s, lst, c, b);
    carried.block(0, par, c, np) = step.front.block(s, par, c, np);
  }

  // Closing block: unknowns (Y_N, Z_N, params). The carried "next" and "last"
  // columns both refer to node N.
  closing_.front.setZero(c + l.n_z, b + np);
  closing_.front.topLeftCorner(c, b) = carried.block(0, cur, c, b) + carried.block(0, lst, c, b);
  closing_.front.topRightCorner(c, np) = carried.block(0, par, c, np);
  closing_.front.bottomLeftCorner(l.n_z, b) = matrix.final_node();
  closing_.front.bottomRightCorner(l.n_z, np) = matrix.final_param();
  eliminate(closing_.front, b + np, closing_.pivots, l.intervals);
}

Vec AbdFactorization::solve(const Vec& rhs) const {
  const AbdLayout& l = layout_;
  if (rhs.size() != l.size()) throw DimensionError("AbdFactorization::solve: size mismatch");
  const int s = l.interval_width();
  const int b = l.node_width();
  const int c = l.bc_rows();
  const int np = l.n_p;

  std::vector<Vec> upper_rhs(l.intervals);
  Vec carried = rhs.segment(l.bc_offset(), c);
  Vec front_rhs(c + s);
  for (int i = 0; i < l.intervals; ++i) {
    front_rhs.head(c) = carried;
    front_rhs.tail(s) = rhs.segment(l.node_offset(i), s);
    forward(steps_[i].front, steps_[i].pivots, front_rhs);
    upper_rhs[i] = front_rhs.head(s);
    carried = front_rhs.tail(c);
  }

  Vec closing_rhs(c + l.n_z);
  closing_rhs.head(c) = carried;
  closing_rhs.tail(l.n_z) = rhs.segment(l.node_offset(l.intervals), l.n_z);
  forward(closing_.front, closing_.pivots, closing_rhs);
  Vec tail = closing_.front.triangularView<Eigen::Upper>().solve(closing_rhs);

  Vec x(l.size());
  x.segment(l.node_offset(l.intervals), b) = tail.head(b);
  x.segment(l.param_offset(), np) = tail.tail(np);
  const auto last = x.segment(l.node_offset(l.intervals), b);
  const auto params = x.segment(l.param_offset(), np);
  for (int i = l.intervals - 1; i >= 0; --i) {
    const Mat& front = steps_[i].front;
    Vec t = upper_rhs[i];
    t.noalias() -= front.block(0, s, s, b) * x.segment(l.node_offset(i + 1), b);
    t.noalias() -= front.block(0, s + b, s, b) * last;
    t.noalias() -= front.block(0, s + 2 * b, s, np) * params;
    x.segment(l.node_offset(i), s) =
        front.topLeftCorner(s, s).triangularView<Eigen::Upper>().solve(t);
  }
  return x;
}

}  // namespace ipoc
