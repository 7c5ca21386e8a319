#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "trajpred/common.hpp"

namespace trajpred::ad {

// Reverse-mode tape over dense matrices. Nodes are created in forward
// (topological) order; backward() walks them in reverse. Just the ops the
// denoiser needs, each with an explicitly derived adjoint.
class Tape {
 public:
  int input(Mat v) {
    return push(std::move(v), {});
  }

  const Mat& val(int i) const { return nodes_[static_cast<std::size_t>(i)].val; }
  Mat& grad(int i) { return nodes_[static_cast<std::size_t>(i)].grad; }

  // C = op(A) * op(B) with optional transposes.
  int matmul(int a, int b, bool ta = false, bool tb = false) {
    const Mat& av = val(a);
    const Mat& bv = val(b);
    Mat c = (ta ? av.transpose() : av) * (tb ? bv.transpose() : bv);
    return push(std::move(c), [a, b, ta, tb](Tape& t, int self) {
      const Mat& g = t.grad(self);
      const Mat p = ta ? t.val(a).transpose() : t.val(a);
      const Mat q = tb ? t.val(b).transpose() : t.val(b);
      Mat dp = g * q.transpose();
      Mat dq = p.transpose() * g;
      t.grad(a) += ta ? dp.transpose() : dp;
      t.grad(b) += tb ? dq.transpose() : dq;
    });
  }

  int add(int a, int b) {
    Mat c = val(a) + val(b);
    return push(std::move(c), [a, b](Tape& t, int self) {
      t.grad(a) += t.grad(self);
      t.grad(b) += t.grad(self);
    });
  }

  // a: N x C, bias: 1 x C broadcast over rows.
  int add_rowvec(int a, int bias) {
    Mat c = val(a).rowwise() + val(bias).row(0);
    return push(std::move(c), [a, bias](Tape& t, int self) {
      t.grad(a) += t.grad(self);
      t.grad(bias) += t.grad(self).colwise().sum();
    });
  }

  int scale(int a, double s) {
    Mat c = s * val(a);
    return push(std::move(c), [a, s](Tape& t, int self) { t.grad(a) += s * t.grad(self); });
  }

  // Row i scaled by the constant s(i).
  int scale_rows(int a, Vec s) {
    Mat c = s.asDiagonal() * val(a);
    return push(std::move(c), [a, s](Tape& t, int self) {
      t.grad(a) += s.asDiagonal() * t.grad(self);
    });
  }

  int relu(int a) {
    Mat c = val(a).cwiseMax(0.0);
    return push(std::move(c), [a](Tape& t, int self) {
      t.grad(a) += (t.val(a).array() > 0.0).cast<double>().matrix().cwiseProduct(t.grad(self));
    });
  }

  // Exact GELU: x * Phi(x). Unlike a ReLU head, gradients never die.
  int gelu(int a) {
    const Mat& x = val(a);
    Mat c = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)); });
    return push(std::move(c), [a](Tape& t, int self) {
      const Mat d = t.val(a).unaryExpr([](double v) {
        const double phi = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
        return 0.5 * (1.0 + std::erf(v * M_SQRT1_2)) + v * phi;
      });
      t.grad(a) += d.cwiseProduct(t.grad(self));
    });
  }

  int softmax_rows(int a) {
    Mat c = val(a);
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      const double m = c.row(i).maxCoeff();
      c.row(i) = (c.row(i).array() - m).exp();
      c.row(i) /= c.row(i).sum();
    }
    return push(std::move(c), [a](Tape& t, int self) {
      const Mat& y = t.val(self);
      const Mat& dy = t.grad(self);
      Mat dx(y.rows(), y.cols());
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const double dot = dy.row(i).dot(y.row(i));
        dx.row(i) = y.row(i).cwiseProduct(dy.row(i)) - dot * y.row(i);
      }
      t.grad(a) += dx;
    });
  }

  int concat_cols(const std::vector<int>& parts) {
    Eigen::Index rows = val(parts[0]).rows();
    Eigen::Index cols = 0;
    for (int p : parts) cols += val(p).cols();
    Mat c(rows, cols);
    Eigen::Index off = 0;
    for (int p : parts) {
      c.middleCols(off, val(p).cols()) = val(p);
      off += val(p).cols();
    }
    return push(std::move(c), [parts](Tape& t, int self) {
      Eigen::Index off = 0;
      for (int p : parts) {
        const Eigen::Index w = t.val(p).cols();
        t.grad(p) += t.grad(self).middleCols(off, w);
        off += w;
      }
    });
  }

  int slice_cols(int a, Eigen::Index c0, Eigen::Index width) {
    Mat c = val(a).middleCols(c0, width);
    return push(std::move(c), [a, c0, width](Tape& t, int self) {
      t.grad(a).middleCols(c0, width) += t.grad(self);
    });
  }

  // Row-wise layer norm with learned gain/offset (1 x C each).
  int layer_norm(int x, int gamma, int beta, double eps = 1e-5) {
    const Mat& xv = val(x);
    const Eigen::Index n = xv.rows(), c = xv.cols();
    Mat xhat(n, c);
    Vec inv_std(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = xv.row(i).mean();
      const double var = (xv.row(i).array() - mu).square().mean();
      inv_std(i) = 1.0 / std::sqrt(var + eps);
      xhat.row(i) = (xv.row(i).array() - mu) * inv_std(i);
    }
    Mat y(n, c);
    for (Eigen::Index i = 0; i < n; ++i) {
      y.row(i) = xhat.row(i).cwiseProduct(val(gamma).row(0)) + val(beta).row(0);
    }
    const int self = push(std::move(y), {});
    nodes_[static_cast<std::size_t>(self)].back = [x, gamma, beta, xhat, inv_std](Tape& t, int s) {
      const Mat& dy = t.grad(s);
      const Eigen::Index c2 = dy.cols();
      t.grad(beta) += dy.colwise().sum();
      t.grad(gamma) += dy.cwiseProduct(xhat).colwise().sum();
      Mat dxhat(dy.rows(), c2);
      for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        dxhat.row(i) = dy.row(i).cwiseProduct(t.val(gamma).row(0));
      }
      Mat dx(dy.rows(), c2);
      for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        const double m1 = dxhat.row(i).mean();
        const double m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
        dx.row(i) = inv_std(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
      }
      t.grad(x) += dx;
    };
    return self;
  }

  // Accumulates inv_total * sum((val - target)^2) and seeds the adjoint.
  double accumulate_sq_error(int a, const Mat& target, double inv_total) {
    const Mat diff = val(a) - target;
    grad(a) += 2.0 * inv_total * diff;
    return inv_total * diff.squaredNorm();
  }

  void backward() {
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (n.back) n.back(*this, i);
    }
  }

 private:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void(Tape&, int)> back;
  };

  int push(Mat v, std::function<void(Tape&, int)> back) {
    Node n;
    n.grad = Mat::Zero(v.rows(), v.cols());
    n.val = std::move(v);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace trajpred::ad
