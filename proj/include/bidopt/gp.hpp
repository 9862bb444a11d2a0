#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bidopt {

/// Thrown when the Gram factorization degenerates; carries a reciprocal
/// condition estimate so the caller can see how bad it was.
class GpConditionError : public std::runtime_error {
 public:
  GpConditionError(const std::string& what, double rcond)
      : std::runtime_error(what + " (rcond ~ " + std::to_string(rcond) + ")"),
        rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

/// Squared-exponential kernel over inputs that have already been mapped
/// to the unit box; one length scale per dimension, amplitude = k(x,x).
struct SquaredExponentialKernel {
  Eigen::VectorXd length_scales;
  double amplitude = 1.0;

  double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    double q = 0.0;
    for (Eigen::Index d = 0; d < a.size(); ++d) {
      const double r = (a[d] - b[d]) / length_scales[d];
      q += r * r;
    }
    return amplitude * std::exp(-0.5 * q);
  }
};

/// GP regressor over 1-D or 2-D inputs.
///
/// Internals work on scaled coordinates (each input dimension mapped
/// affinely to [0,1]) and on normalized targets (raw / target_scale), so
/// a unit amplitude stays meaningful when the raw targets are hundreds
/// of clicks. Posterior means/variances are de-normalized on the way out.
///
/// The noisy Gram K + lambda*I is kept as a lower Cholesky factor that is
/// extended one row per observation; `fit` builds the same factor in one
/// shot for cross-checking.
class Gp {
 public:
  using MeanFn = std::function<double(const Eigen::VectorXd&)>;

  struct Options {
    int dims = 1;
    Eigen::VectorXd length_scales;  // scaled units; default 0.2 per dim
    double amplitude = 1.0;         // prior variance, normalized units
    double noise = 0.25;            // lambda, normalized units
    double target_scale = 1.0;
    Eigen::VectorXd input_lo, input_hi;  // per-dim affine map to [0,1]
    MeanFn prior_mean;                   // raw target units; default 0

    static Options for_dims(int d) {
      Options o;
      o.dims = d;
      return o;
    }
  };

  explicit Gp(Options opts) : opts_(std::move(opts)) {
    if (opts_.dims < 1) throw std::invalid_argument("gp needs >= 1 input dim");
    if (opts_.length_scales.size() == 0)
      opts_.length_scales = Eigen::VectorXd::Constant(opts_.dims, 0.2);
    if (opts_.length_scales.size() != opts_.dims)
      throw std::invalid_argument("one length scale per input dim");
    if ((opts_.length_scales.array() <= 0.0).any())
      throw std::invalid_argument("length scales must be > 0");
    if (!(opts_.amplitude > 0.0)) throw std::invalid_argument("amplitude must be > 0");
    if (!(opts_.noise > 0.0)) throw std::invalid_argument("noise must be > 0");
    if (!(opts_.target_scale > 0.0))
      throw std::invalid_argument("target scale must be > 0");
    if (opts_.input_lo.size() == 0) opts_.input_lo = Eigen::VectorXd::Zero(opts_.dims);
    if (opts_.input_hi.size() == 0) opts_.input_hi = Eigen::VectorXd::Ones(opts_.dims);
    if (opts_.input_lo.size() != opts_.dims || opts_.input_hi.size() != opts_.dims)
      throw std::invalid_argument("input bounds must match dims");
    kernel_ = {opts_.length_scales, opts_.amplitude};
    inputs_raw_.resize(opts_.dims, 0);
    inputs_scaled_.resize(opts_.dims, 0);
  }

  const Options& options() const { return opts_; }
  Eigen::Index size() const { return inputs_raw_.cols(); }
  const Eigen::MatrixXd& inputs() const { return inputs_raw_; }
  const Eigen::VectorXd& targets() const { return targets_raw_; }

  struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
  };

  /// Value-semantic append; the noisy Gram factor grows by one row.
  Gp with_observation(const Eigen::VectorXd& x, double target) const {
    Gp next = *this;
    next.append(x, target);
    return next;
  }

  Gp with_observation(double x, double target) const {
    return with_observation(Eigen::VectorXd::Constant(1, x), target);
  }

  /// Batch constructor; numerically equivalent to sequential appends.
  static Gp fit(Options opts, const Eigen::MatrixXd& inputs,
                const Eigen::VectorXd& targets) {
    Gp gp(std::move(opts));
    const Eigen::Index n = inputs.cols();
    if (targets.size() != n) throw std::invalid_argument("inputs/targets mismatch");
    if (n == 0) return gp;

    gp.inputs_raw_ = inputs;
    gp.inputs_scaled_.resize(gp.opts_.dims, n);
    for (Eigen::Index i = 0; i < n; ++i)
      gp.inputs_scaled_.col(i) = gp.scale_input(inputs.col(i));
    gp.targets_raw_ = targets;

    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k <= i; ++k)
        gram(i, k) = gp.kernel_(gp.inputs_scaled_.col(i), gp.inputs_scaled_.col(k)) +
                     (i == k ? gp.opts_.noise : 0.0);
    Eigen::LLT<Eigen::MatrixXd> llt(gram.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success)
      throw GpConditionError("gram factorization failed", 0.0);
    gp.chol_ = llt.matrixL();

    Eigen::VectorXd centered(n);
    for (Eigen::Index i = 0; i < n; ++i)
      centered[i] = gp.normalized_target(i) - gp.normalized_mean(inputs.col(i));
    gp.alpha_ = gp.chol_.triangularView<Eigen::Lower>().solve(centered);
    return gp;
  }

  Posterior posterior(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd xs = scale_input(x);
    const double mean0 = normalized_mean(x);
    const double kxx = kernel_(xs, xs);
    const Eigen::Index n = size();
    if (n == 0) return denormalize(mean0, kxx);

    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = kernel_(xs, inputs_scaled_.col(i));
    chol_.triangularView<Eigen::Lower>().solveInPlace(k);
    const double mean = mean0 + k.dot(alpha_);
    const double var = std::max(0.0, kxx - k.squaredNorm());
    return denormalize(mean, var);
  }

  Posterior posterior(double x) const {
    return posterior(Eigen::VectorXd::Constant(1, x));
  }

  /// Posterior over many points with the triangular solve batched.
  void posterior_many(const Eigen::MatrixXd& points, Eigen::VectorXd& means,
                      Eigen::VectorXd& variances) const {
    const Eigen::Index g = points.cols();
    means.resize(g);
    variances.resize(g);
    const Eigen::Index n = size();
    if (n == 0) {
      for (Eigen::Index i = 0; i < g; ++i) {
        const auto p = denormalize(normalized_mean(points.col(i)),
                                   kernel_(scale_input(points.col(i)),
                                           scale_input(points.col(i))));
        means[i] = p.mean;
        variances[i] = p.variance;
      }
      return;
    }
    Eigen::MatrixXd cross(n, g);
    for (Eigen::Index i = 0; i < g; ++i) {
      const Eigen::VectorXd xs = scale_input(points.col(i));
      for (Eigen::Index k = 0; k < n; ++k)
        cross(k, i) = kernel_(xs, inputs_scaled_.col(k));
    }
    chol_.triangularView<Eigen::Lower>().solveInPlace(cross);
    for (Eigen::Index i = 0; i < g; ++i) {
      const Eigen::VectorXd xs = scale_input(points.col(i));
      const double mean = normalized_mean(points.col(i)) + cross.col(i).dot(alpha_);
      const double var = std::max(0.0, kernel_(xs, xs) - cross.col(i).squaredNorm());
      const auto p = denormalize(mean, var);
      means[i] = p.mean;
      variances[i] = p.variance;
    }
  }

  /// Posterior covariance over many points (normalized target units are
  /// scaled back to raw). Used by the joint Thompson draw.
  Eigen::MatrixXd posterior_covariance(const Eigen::MatrixXd& points) const {
    const Eigen::Index g = points.cols();
    Eigen::MatrixXd scaled(opts_.dims, g);
    for (Eigen::Index i = 0; i < g; ++i) scaled.col(i) = scale_input(points.col(i));
    Eigen::MatrixXd cov(g, g);
    for (Eigen::Index i = 0; i < g; ++i)
      for (Eigen::Index k = 0; k <= i; ++k)
        cov(i, k) = cov(k, i) = kernel_(scaled.col(i), scaled.col(k));
    const Eigen::Index n = size();
    if (n > 0) {
      Eigen::MatrixXd cross(n, g);
      for (Eigen::Index i = 0; i < g; ++i)
        for (Eigen::Index k = 0; k < n; ++k)
          cross(k, i) = kernel_(scaled.col(i), inputs_scaled_.col(k));
      chol_.triangularView<Eigen::Lower>().solveInPlace(cross);
      cov.noalias() -= cross.transpose() * cross;
    }
    return cov * (opts_.target_scale * opts_.target_scale);
  }

  /// 0.5 * log det(I + K0/lambda) with K0 the noiseless Gram, computed
  /// from the stored noisy factor.
  double information_gain() const {
    const Eigen::Index n = size();
    if (n == 0) return 0.0;
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(chol_(i, i));
    return log_det - 0.5 * static_cast<double>(n) * std::log(opts_.noise);
  }

 private:
  void append(const Eigen::VectorXd& x, double target) {
    if (x.size() != opts_.dims) throw std::invalid_argument("input dim mismatch");
    if (!std::isfinite(target)) throw std::invalid_argument("target must be finite");
    const Eigen::VectorXd xs = scale_input(x);
    const Eigen::Index n = size();

    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = kernel_(xs, inputs_scaled_.col(i));
    const double kxx = kernel_(xs, xs) + opts_.noise;

    Eigen::MatrixXd chol(n + 1, n + 1);
    chol.setZero();
    Eigen::VectorXd alpha(n + 1);
    double d2 = kxx;
    if (n > 0) {
      chol.topLeftCorner(n, n) = chol_;
      chol_.triangularView<Eigen::Lower>().solveInPlace(k);
      chol.row(n).head(n) = k.transpose();
      d2 = kxx - k.squaredNorm();
      alpha.head(n) = alpha_;
    }
    const double floor = 1e-12 * (opts_.amplitude + opts_.noise);
    if (!(d2 > floor)) {
      double lo = chol(0, 0), hi = chol(0, 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        lo = std::min(lo, chol(i, i));
        hi = std::max(hi, chol(i, i));
      }
      const double rcond = n > 0 ? (lo / hi) * (lo / hi) : 0.0;
      throw GpConditionError("gram extension lost positive definiteness", rcond);
    }
    const double d = std::sqrt(d2);
    chol(n, n) = d;

    const double centered = target / opts_.target_scale - normalized_mean(x);
    alpha[n] = (centered - (n > 0 ? chol.row(n).head(n).dot(alpha_) : 0.0)) / d;

    inputs_raw_.conservativeResize(Eigen::NoChange, n + 1);
    inputs_raw_.col(n) = x;
    inputs_scaled_.conservativeResize(Eigen::NoChange, n + 1);
    inputs_scaled_.col(n) = xs;
    targets_raw_.conservativeResize(n + 1);
    targets_raw_[n] = target;
    chol_ = std::move(chol);
    alpha_ = std::move(alpha);
  }

  Eigen::VectorXd scale_input(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(opts_.dims);
    for (Eigen::Index d = 0; d < opts_.dims; ++d) {
      const double span = opts_.input_hi[d] - opts_.input_lo[d];
      out[d] = span > 0.0 ? (x[d] - opts_.input_lo[d]) / span : x[d];
    }
    return out;
  }

  double normalized_mean(const Eigen::VectorXd& x_raw) const {
    return opts_.prior_mean ? opts_.prior_mean(x_raw) / opts_.target_scale : 0.0;
  }

  double normalized_target(Eigen::Index i) const {
    return targets_raw_[i] / opts_.target_scale;
  }

  Posterior denormalize(double mean, double var) const {
    return {mean * opts_.target_scale,
            std::max(0.0, var) * opts_.target_scale * opts_.target_scale};
  }

  Options opts_;
  SquaredExponentialKernel kernel_;
  Eigen::MatrixXd inputs_raw_;     // dims x n
  Eigen::MatrixXd inputs_scaled_;  // dims x n
  Eigen::VectorXd targets_raw_;
  Eigen::MatrixXd chol_;  // lower factor of K + noise*I (normalized units)
  Eigen::VectorXd alpha_; // L^{-1} (y_norm - m_norm)
};

}  // namespace bidopt
