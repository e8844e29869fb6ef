#pragma once

// Periodic orbit data in normalized coordinates. The true iterates, values,
// gradients and Hessians are
//   x_k = Q^k D^k xb_k,           f_k = lam^(k dn) fb_k + f_shift,
//   g_k = lam^(k dn) Q^k D^-k gb_k,
//   h_k = lam^(k dn) Q^k D^-k hb_k D^-k Q^-k,
// with D = diag(lam^e_i), exponents e_i in {0, 1, dn} grouped in blocks
// (a, b, c), and every normalized sequence periodic with period p.
// Templated over the scalar so the same code runs in double and in
// extended precision.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace divergence::schema {

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

struct BlockDims {
  int a = 0;  // exponent 0: directions that do not contract
  int b = 0;  // exponent 1
  int c = 0;  // exponent dn
  int n() const { return a + b + c; }
};

// Materialization beyond this scale is refused instead of overflowing.
inline constexpr double kHorizonScale = 1e300;

class HorizonError : public std::range_error {
 public:
  using std::range_error::range_error;
};

class ClosureError : public std::runtime_error {
 public:
  ClosureError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

template <class S>
double to_double(const S& v) {
  return static_cast<double>(v);
}

template <class S>
S integer_power(const S& x, long e) {
  if (e < 0) return S(1) / integer_power(x, -e);
  S result(1), base = x;
  while (e > 0) {
    if (e & 1) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

// Q, D(lam), the period and the block layout: everything except the sequences.
template <class S>
class BasicOrbitFrame {
 public:
  BasicOrbitFrame(BlockDims blocks, int dn, int period, S lambda, Mat<S> q, double tol = 1e-10)
      : blocks_(blocks), dn_(dn), period_(period), lambda_(std::move(lambda)) {
    const int n = blocks.n();
    if (blocks.a < 0 || blocks.b < 0 || blocks.c < 0 || n == 0) throw std::invalid_argument("invalid block sizes");
    if (period < 1) throw std::invalid_argument("period must be positive");
    if (dn < 2) throw std::invalid_argument("largest exponent must be at least 2");
    if (!(lambda_ > S(0) && lambda_ < S(1))) throw std::invalid_argument("lambda must lie in (0, 1)");
    if (q.rows() != n || q.cols() != n) throw std::invalid_argument("Q has the wrong shape");
    exponents_.assign(blocks.a, 0);
    exponents_.insert(exponents_.end(), blocks.b, 1);
    exponents_.insert(exponents_.end(), blocks.c, dn);

    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (exponents_[i] != exponents_[j] && q(i, j) != S(0))
          throw std::invalid_argument("Q does not commute with D: entry couples different blocks");
    const Mat<S> id = Mat<S>::Identity(n, n);
    if (to_double(S((q.transpose() * q - id).cwiseAbs().maxCoeff())) > tol)
      throw std::invalid_argument("Q is not orthogonal");

    q_powers_.reserve(period);
    q_powers_.push_back(id);
    for (int k = 1; k < period; ++k) q_powers_.push_back(q_powers_.back() * q);
    const Mat<S> qp = q_powers_.back() * q;
    if (to_double(S((qp - id).cwiseAbs().maxCoeff())) > tol) throw std::invalid_argument("Q^p is not the identity");
    q_ = std::move(q);
  }

  int dimension() const { return blocks_.n(); }
  int period() const { return period_; }
  int dn() const { return dn_; }
  const BlockDims& blocks() const { return blocks_; }
  const S& lambda() const { return lambda_; }
  const std::vector<int>& exponents() const { return exponents_; }
  const Mat<S>& q() const { return q_; }

  long wrap(long k) const {
    const long r = k % period_;
    return r < 0 ? r + period_ : r;
  }
  const Mat<S>& q_power(long k) const { return q_powers_[wrap(k)]; }

  S lambda_power(long e) const { return integer_power(lambda_, e); }

  // Diagonal of D(lam)^k, any integer k.
  Vec<S> d_diag(long k) const {
    Vec<S> d(dimension());
    const S l1 = lambda_power(k), ln = lambda_power(k * dn_);
    for (int i = 0; i < dimension(); ++i) d(i) = exponents_[i] == 0 ? S(1) : (exponents_[i] == 1 ? l1 : ln);
    return d;
  }

  // Throws HorizonError when lam^(-k dn) exceeds the representable horizon.
  void check_horizon(long k) const {
    if (k < 0) throw std::invalid_argument("negative orbit index");
    const double growth = -static_cast<double>(k) * dn_ * std::log(to_double(lambda_));
    if (growth > std::log(kHorizonScale))
      throw HorizonError("orbit index " + std::to_string(k) + " is beyond the overflow horizon");
  }

  template <class To>
  BasicOrbitFrame<To> cast() const {
    return BasicOrbitFrame<To>(blocks_, dn_, period_, static_cast<To>(lambda_), q_.template cast<To>());
  }

 private:
  BlockDims blocks_;
  int dn_;
  int period_;
  S lambda_;
  Mat<S> q_;
  std::vector<int> exponents_;
  std::vector<Mat<S>> q_powers_;
};

template <class S>
class BasicOrbitSchema {
 public:
  BasicOrbitSchema(BasicOrbitFrame<S> frame, std::vector<Vec<S>> x_bar, std::vector<S> f_bar,
                   std::vector<Vec<S>> g_bar, std::vector<Mat<S>> h_bar, S f_shift = S(0), double tol = 1e-10)
      : frame_(std::move(frame)),
        x_bar_(std::move(x_bar)),
        f_bar_(std::move(f_bar)),
        g_bar_(std::move(g_bar)),
        h_bar_(std::move(h_bar)),
        f_shift_(std::move(f_shift)) {
    const std::size_t p = frame_.period();
    const int n = frame_.dimension();
    if (x_bar_.size() != p || f_bar_.size() != p || g_bar_.size() != p || h_bar_.size() != p)
      throw std::invalid_argument("normalized sequences must have exactly one period of entries");
    for (std::size_t k = 0; k < p; ++k) {
      if (x_bar_[k].size() != n || g_bar_[k].size() != n) throw std::invalid_argument("vector has wrong dimension");
      if (h_bar_[k].rows() != n || h_bar_[k].cols() != n) throw std::invalid_argument("Hessian has wrong shape");
      const S asym = (h_bar_[k] - h_bar_[k].transpose()).cwiseAbs().maxCoeff();
      if (to_double(asym) > tol) throw std::invalid_argument("normalized Hessian is not symmetric");
    }
  }

  const BasicOrbitFrame<S>& frame() const { return frame_; }
  int dimension() const { return frame_.dimension(); }
  int period() const { return frame_.period(); }
  const Vec<S>& x_bar(long k) const { return x_bar_[frame_.wrap(k)]; }
  const S& f_bar(long k) const { return f_bar_[frame_.wrap(k)]; }
  const Vec<S>& g_bar(long k) const { return g_bar_[frame_.wrap(k)]; }
  const Mat<S>& h_bar(long k) const { return h_bar_[frame_.wrap(k)]; }
  const S& f_shift() const { return f_shift_; }

  template <class To>
  BasicOrbitSchema<To> cast() const {
    auto cv = [](const auto& list) {
      using Elem = std::decay_t<decltype(list.front())>;
      if constexpr (std::is_same_v<Elem, S>) {
        std::vector<To> out;
        for (const auto& v : list) out.push_back(static_cast<To>(v));
        return out;
      } else {
        std::vector<std::remove_cv_t<decltype(list.front().template cast<To>().eval())>> out;
        for (const auto& v : list) out.push_back(v.template cast<To>());
        return out;
      }
    };
    return BasicOrbitSchema<To>(frame_.template cast<To>(), cv(x_bar_), cv(f_bar_), cv(g_bar_), cv(h_bar_),
                                static_cast<To>(f_shift_));
  }

 private:
  BasicOrbitFrame<S> frame_;
  std::vector<Vec<S>> x_bar_;
  std::vector<S> f_bar_;
  std::vector<Vec<S>> g_bar_;
  std::vector<Mat<S>> h_bar_;
  S f_shift_;
};

using OrbitFrame = BasicOrbitFrame<double>;
using OrbitSchema = BasicOrbitSchema<double>;

template <class S>
struct OrbitPoint {
  Vec<S> x;
  S f;
  Vec<S> g;
  Mat<S> h;
};

// True-coordinate data at orbit index k. Each entry is scaled by a single
// combined power of lambda so no intermediate overflows.
template <class S>
OrbitPoint<S> materialize(const BasicOrbitSchema<S>& schema, long k) {
  const auto& frame = schema.frame();
  frame.check_horizon(k);
  const int n = schema.dimension();
  const auto& e = frame.exponents();
  const long dn = frame.dn();
  const Mat<S>& qk = frame.q_power(k);

  Vec<S> x(n), g(n);
  Mat<S> h(n, n);
  for (int i = 0; i < n; ++i) {
    x(i) = schema.x_bar(k)(i) * frame.lambda_power(k * e[i]);
    g(i) = schema.g_bar(k)(i) * frame.lambda_power(k * (dn - e[i]));
    for (int j = 0; j < n; ++j) {
      const S& hij = schema.h_bar(k)(i, j);
      h(i, j) = hij == S(0) ? S(0) : hij * frame.lambda_power(k * (dn - e[i] - e[j]));
    }
  }
  OrbitPoint<S> pt;
  pt.x = qk * x;
  pt.f = frame.lambda_power(k * dn) * schema.f_bar(k) + schema.f_shift();
  pt.g = qk * g;
  pt.h = qk * h * qk.transpose();
  return pt;
}

// sb_k = Q D xb_{k+1} - xb_k
template <class S>
Vec<S> normalized_step(const BasicOrbitSchema<S>& schema, long k) {
  const auto& frame = schema.frame();
  return frame.q() * (frame.d_diag(1).asDiagonal() * schema.x_bar(k + 1)) - schema.x_bar(k);
}

// True step x_{k+1} - x_k = Q^k D^k sb_k.
template <class S>
Vec<S> materialized_step(const BasicOrbitSchema<S>& schema, long k) {
  const auto& frame = schema.frame();
  frame.check_horizon(k);
  return frame.q_power(k) * (frame.d_diag(k).asDiagonal() * normalized_step(schema, k));
}

// Rebuild normalized iterates from one period of normalized steps. The
// non-contracting block needs the closure sum_j Q_a^j sb_{a,j} = 0 and is
// pinned by xb_{a,0} = 0; the contracting blocks have a unique periodic
// solution, obtained from the geometric sum at k = 0 and then by the
// backward recurrence xb_k = Q D xb_{k+1} - sb_k, which is stable.
template <class S>
std::vector<Vec<S>> steps_to_iterates(const std::vector<Vec<S>>& steps, const BasicOrbitFrame<S>& frame,
                                      double tol = 1e-10) {
  const int p = frame.period();
  const int n = frame.dimension();
  const int a = frame.blocks().a;
  const int m = n - a;
  if (static_cast<int>(steps.size()) != p) throw std::invalid_argument("need exactly one period of steps");
  for (const auto& s : steps)
    if (s.size() != n) throw std::invalid_argument("step has wrong dimension");

  std::vector<Vec<S>> x(p, Vec<S>::Zero(n));

  if (a > 0) {
    Vec<S> closure = Vec<S>::Zero(a);
    S scale(1);
    for (int j = 0; j < p; ++j) {
      closure += frame.q_power(j).topLeftCorner(a, a) * steps[j].head(a);
      scale += steps[j].head(a).norm();
    }
    const double residual = to_double(S(closure.norm()));
    if (residual > tol * to_double(scale))
      throw ClosureError("closure condition violated for the non-contracting block", residual);
    const Mat<S> qa_t = frame.q().topLeftCorner(a, a).transpose();
    for (int k = 0; k + 1 < p; ++k) x[k + 1].head(a) = qa_t * (x[k].head(a) + steps[k].head(a));
  }

  if (m > 0) {
    const Mat<S> q_tail = frame.q().bottomRightCorner(m, m);
    const Vec<S> d1 = frame.d_diag(1).tail(m);
    const Vec<S> dp = frame.d_diag(p).tail(m);
    Vec<S> sum = Vec<S>::Zero(m);
    for (int j = 0; j < p; ++j)
      sum += frame.q_power(j).bottomRightCorner(m, m) * (frame.d_diag(j).tail(m).asDiagonal() * steps[j].tail(m));
    Vec<S> x0(m);
    for (int i = 0; i < m; ++i) x0(i) = sum(i) / (dp(i) - S(1));
    x[0].tail(m) = x0;
    Vec<S> next = x0;  // xb_p = xb_0
    for (int k = p - 1; k >= 1; --k) {
      x[k].tail(m) = q_tail * (d1.asDiagonal() * next) - steps[k].tail(m);
      next = x[k].tail(m);
    }
  }

  // Round trip: Q D xb_{k+1} - xb_k must reproduce every step.
  const Vec<S> d1 = frame.d_diag(1);
  for (int k = 0; k < p; ++k) {
    const Vec<S> s = frame.q() * (d1.asDiagonal() * x[(k + 1) % p]) - x[k];
    const double r = to_double(S((s - steps[k]).norm()));
    if (r > tol * std::max(1.0, to_double(S(steps[k].norm()))))
      throw ClosureError("reconstructed iterates do not reproduce the steps", r);
  }
  return x;
}

}  // namespace divergence::schema
