#include <cmath>

#include "divergence/theorem1.hpp"

namespace divergence::replay {

namespace {

using J = Jet<double>;

std::vector<J> seed(const Vec<double>& x) {
  std::vector<J> v;
  for (int i = 0; i < x.size(); ++i) v.push_back(J::variable(x(i), x.size(), i));
  return v;
}

Vec<double> vec(std::initializer_list<double> v) {
  Vec<double> out(v.size());
  int i = 0;
  for (double e : v) out(i++) = e;
  return out;
}

BenignProblem problem(std::string name, int n, Residuals r, Vec<double> start) {
  auto obj = std::make_shared<LeastSquaresObjective>(name, n, std::move(r));
  return {std::move(name), std::move(obj), std::move(start)};
}

// Residuals A x - b for a fixed matrix.
Residuals linear(Mat<double> a, Vec<double> b) {
  return [a, b](const std::vector<J>& x) {
    std::vector<J> r;
    for (int i = 0; i < a.rows(); ++i) {
      J acc(-b(i));
      for (int j = 0; j < a.cols(); ++j) acc += J(a(i, j)) * x[j];
      r.push_back(acc);
    }
    return r;
  };
}

}  // namespace

double LeastSquaresObjective::value(const Vec<double>& x, long) const {
  std::vector<J> v;
  for (int i = 0; i < x.size(); ++i) v.emplace_back(x(i));
  double f = 0.0;
  for (const J& r : r_(v)) f += r.value() * r.value();
  return 0.5 * f;
}

std::optional<LeastSquares<double>> LeastSquaresObjective::least_squares(const Vec<double>& x, long) const {
  const auto r = r_(seed(x));
  LeastSquares<double> ls{Vec<double>(r.size()), Mat<double>(n_, r.size())};
  for (std::size_t j = 0; j < r.size(); ++j) {
    ls.residuals(j) = r[j].value();
    for (int i = 0; i < n_; ++i) ls.g_matrix(i, j) = r[j].derivative(i);
  }
  return ls;
}

Vec<double> LeastSquaresObjective::gradient(const Vec<double>& x, long k) const {
  const auto ls = least_squares(x, k);
  return ls->g_matrix * ls->residuals;
}

std::optional<Mat<double>> LeastSquaresObjective::hessian(const Vec<double>& x, long k) const {
  Mat<double> h(n_, n_);
  for (int i = 0; i < n_; ++i) {
    const double step = 1e-5 * std::max(1.0, std::abs(x(i)));
    Vec<double> xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    h.col(i) = (gradient(xp, k) - gradient(xm, k)) / (2 * step);
  }
  return Mat<double>((h + h.transpose()) / 2);
}

std::vector<BenignProblem> benign_suite() {
  std::vector<BenignProblem> s;

  s.push_back(problem(
      "diagonal_quadratic", 2,
      [](const std::vector<J>& x) { return std::vector<J>{x[0] - 1.0, J(3.0) * (x[1] + 2.0)}; }, vec({-3, 4})));

  {
    Mat<double> a(3, 3);
    a << 1.0, 0.5, 0.0, -0.5, 2.0, 0.3, 0.2, -0.3, 1.5;
    s.push_back(problem("rotated_quadratic", 3, linear(a, vec({1, -1, 2})), vec({5, 5, -5})));
  }
  {
    Mat<double> a = Mat<double>::Zero(5, 5);
    for (int i = 0; i < 5; ++i) {
      a(i, i) = 1.0 + 0.5 * i;
      if (i > 0) a(i, i - 1) = 0.4;
    }
    s.push_back(problem("banded_quadratic_5d", 5, linear(a, vec({1, 2, 3, 4, 5})), vec({0, 0, 0, 0, 0})));
  }

  s.push_back(problem(
      "mild_rosenbrock", 2,
      [](const std::vector<J>& x) {
        return std::vector<J>{J(2.0) * (x[1] - x[0] * x[0]), J(1.0) - x[0]};
      },
      vec({-1.2, 1.0})));

  s.push_back(problem(
      "circle_and_line", 2,
      [](const std::vector<J>& x) { return std::vector<J>{x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]}; },
      vec({3.0, 0.5})));

  s.push_back(problem(
      "square_chain", 3,
      [](const std::vector<J>& x) {
        return std::vector<J>{x[0] - x[1] * x[1], x[1] - x[2] * x[2], x[2] - 1.0};
      },
      vec({0.5, 0.5, 0.5})));

  s.push_back(problem(
      "trigonometric_pair", 2,
      [](const std::vector<J>& x) {
        return std::vector<J>{x[0] - J(0.5) * cos(x[1]), x[1] - J(0.3) * sin(x[0])};
      },
      vec({1.0, 1.0})));

  {
    Mat<double> a(6, 4);
    a << 1, 0, 0, 0.5,  //
        0, 1, 0.2, 0,   //
        0.3, 0, 1, 0,   //
        0, 0.1, 0, 1,   //
        1, 1, 0, 0,     //
        0, 0, 1, 1;
    s.push_back(problem("overdetermined_linear", 4, linear(a, vec({1, 0, -1, 2, 0.5, 1})), vec({3, -3, 3, -3})));
  }

  s.push_back(problem(
      "quadratic_fit", 3,
      [](const std::vector<J>& c) {
        std::vector<J> r;
        for (int i = 0; i < 9; ++i) {
          const double t = -1.0 + 0.25 * i;
          r.push_back(c[0] + J(t) * c[1] + J(t * t) * c[2] - std::cos(2.0 * t));
        }
        return r;
      },
      vec({1, 1, 1})));

  s.push_back(problem(
      "separable_cubic", 3,
      [](const std::vector<J>& x) {
        const double c[3] = {1.0, -2.0, 0.5};
        std::vector<J> r;
        for (int i = 0; i < 3; ++i) r.push_back(x[i] * x[i] * x[i] / 3.0 + x[i] - c[i]);
        return r;
      },
      vec({2, 2, 2})));

  return s;
}

}  // namespace divergence::replay
