#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tee/nn.hpp"

using namespace tee;
using namespace tee::nn;

namespace {

FeatureMap<double> random_map(int c, int h, int w, int batch, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  FeatureMap<double> m = FeatureMap<double>::zeros(c, h, w, batch);
  for (Eigen::Index j = 0; j < m.data.cols(); ++j)
    for (Eigen::Index i = 0; i < m.data.rows(); ++i) m.data(i, j) = dist(rng);
  return m;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace

TEST_CASE("conv forward matches a hand-computed 1x1 spatial case") {
  Conv2dSpec spec{1, 1, 3, 1, 1};
  Conv2d<double> conv;
  conv.spec = spec;
  conv.w = Mat<double>::Zero(1, 9);
  conv.w(0, 4) = 2.0;  // center tap (ky=1,kx=1,c=0) at row 4
  conv.b = Mat<double>::Constant(1, 1, 0.5);
  FeatureMap<double> x = FeatureMap<double>::zeros(1, 1, 1);
  x.data(0, 0) = 3.0;
  const auto y = conv_forward(conv, x);
  CHECK(y.height == 1);
  CHECK(y.width == 1);
  CHECK(y.data(0, 0) == doctest::Approx(6.5));
}

TEST_CASE("conv 2x2 stride 2 halves spatial size with floor division") {
  Conv2dSpec spec{2, 3, 2, 2, 0};
  std::mt19937_64 rng(1);
  auto conv = make_conv<double>(spec, rng);
  const auto x = random_map(2, 7, 9, 2, 5);
  const auto y = conv_forward(conv, x);
  CHECK(y.height == 3);
  CHECK(y.width == 4);
  CHECK(y.batch == 2);
}

TEST_CASE("conv backward gradients match finite differences") {
  Conv2dSpec spec{2, 3, 3, 1, 1};
  std::mt19937_64 rng(2);
  auto conv = make_conv<double>(spec, rng);
  const auto x = random_map(2, 4, 5, 2, 6);
  // loss = sum of squares of output / 2, so dy = y
  auto loss_of = [&](const Conv2d<double>& c) {
    const auto y = conv_forward(c, x);
    return 0.5 * y.data.squaredNorm();
  };
  ConvCache<double> cache;
  auto y = conv_forward(conv, x, &cache);
  FeatureMap<double> dx;
  const auto grads = conv_backward(conv, cache, y, &dx);

  const double h = 1e-6;
  std::mt19937_64 pick(3);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index i = pick() % conv.w.rows();
    const Eigen::Index j = pick() % conv.w.cols();
    Conv2d<double> plus = conv, minus = conv;
    plus.w(i, j) += h;
    minus.w(i, j) -= h;
    const double fd = (loss_of(plus) - loss_of(minus)) / (2 * h);
    CHECK(rel_err(fd, grads.w(i, j)) < 1e-5);
  }
  {
    Conv2d<double> plus = conv, minus = conv;
    plus.b(1, 0) += h;
    minus.b(1, 0) -= h;
    const double fd = (loss_of(plus) - loss_of(minus)) / (2 * h);
    CHECK(rel_err(fd, grads.b(1, 0)) < 1e-5);
  }
  // input gradient
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index i = pick() % x.data.rows();
    const Eigen::Index j = pick() % x.data.cols();
    FeatureMap<double> xp = x, xm = x;
    xp.data(i, j) += h;
    xm.data(i, j) -= h;
    const double fd =
        (0.5 * conv_forward(conv, xp).data.squaredNorm() -
         0.5 * conv_forward(conv, xm).data.squaredNorm()) / (2 * h);
    CHECK(rel_err(fd, dx.data(i, j)) < 1e-5);
  }
}

TEST_CASE("batch norm normalizes and backpropagates correctly") {
  auto bn = make_batch_norm<double>(3);
  bn.gamma.col(0) << 1.5, 0.5, 2.0;
  bn.beta.col(0) << 0.1, -0.2, 0.0;
  const auto x = random_map(3, 4, 4, 2, 9);

  BatchNormCache<double> cache;
  auto bn_run = bn;
  const auto y = batch_norm_forward(bn_run, x, true, &cache);
  // per-channel output mean ~ beta, std ~ gamma
  for (int c = 0; c < 3; ++c) {
    const double mean = y.data.row(c).mean();
    CHECK(mean == doctest::Approx(bn.beta(c, 0)).epsilon(1e-9));
  }

  // gradient check through training-mode batch norm
  const auto dy = random_map(3, 4, 4, 2, 10);
  FeatureMap<double> dx;
  const auto grads = batch_norm_backward(bn_run, cache, dy, &dx);
  auto loss_of = [&](const FeatureMap<double>& input, const Mat<double>& gamma,
                     const Mat<double>& beta) {
    auto b2 = bn;
    b2.gamma = gamma;
    b2.beta = beta;
    const auto out = batch_norm_forward(b2, input, true);
    return (out.data.array() * dy.data.array()).sum();
  };
  const double h = 1e-6;
  std::mt19937_64 pick(4);
  for (int t = 0; t < 8; ++t) {
    const Eigen::Index i = pick() % x.data.rows();
    const Eigen::Index j = pick() % x.data.cols();
    FeatureMap<double> xp = x, xm = x;
    xp.data(i, j) += h;
    xm.data(i, j) -= h;
    const double fd = (loss_of(xp, bn.gamma, bn.beta) - loss_of(xm, bn.gamma, bn.beta)) / (2 * h);
    CHECK(rel_err(fd, dx.data(i, j)) < 1e-4);
  }
  for (int c = 0; c < 3; ++c) {
    Mat<double> gp = bn.gamma, gm = bn.gamma;
    gp(c, 0) += h;
    gm(c, 0) -= h;
    const double fd = (loss_of(x, gp, bn.beta) - loss_of(x, gm, bn.beta)) / (2 * h);
    CHECK(rel_err(fd, grads.gamma(c, 0)) < 1e-5);
    Mat<double> bp = bn.beta, bm = bn.beta;
    bp(c, 0) += h;
    bm(c, 0) -= h;
    const double fdb = (loss_of(x, bn.gamma, bp) - loss_of(x, bn.gamma, bm)) / (2 * h);
    CHECK(rel_err(fdb, grads.beta(c, 0)) < 1e-5);
  }
}

TEST_CASE("batch norm eval mode uses running statistics") {
  auto bn = make_batch_norm<double>(1);
  bn.running_mean(0, 0) = 2.0;
  bn.running_var(0, 0) = 4.0;
  FeatureMap<double> x = FeatureMap<double>::zeros(1, 1, 2);
  x.data << 2.0, 6.0;
  const auto y = batch_norm_forward(bn, x, false);
  CHECK(y.data(0, 0) == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(y.data(0, 1) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("global average pool and its backward") {
  const auto x = random_map(3, 2, 2, 2, 12);
  const auto pooled = global_avg_pool(x);
  CHECK(pooled.rows() == 3);
  CHECK(pooled.cols() == 2);
  CHECK(pooled(1, 0) == doctest::Approx(x.sample(0).row(1).mean()));
  const Mat<double> dout = Mat<double>::Ones(3, 2);
  const auto dx = global_avg_pool_backward(dout, 2, 2);
  CHECK(dx.data(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("linear layer gradient check") {
  std::mt19937_64 rng(5);
  auto fc = make_linear<double>(4, 2, rng);
  Mat<double> x = Mat<double>::Random(4, 3);
  const auto y = linear_forward(fc, x);
  Mat<double> dx;
  const auto grads = linear_backward(fc, x, y, &dx);
  const double h = 1e-6;
  auto loss_of = [&](const Linear<double>& l) {
    return 0.5 * linear_forward(l, x).squaredNorm();
  };
  for (Eigen::Index i = 0; i < fc.w.rows(); ++i)
    for (Eigen::Index j = 0; j < fc.w.cols(); ++j) {
      Linear<double> p = fc, m = fc;
      p.w(i, j) += h;
      m.w(i, j) -= h;
      const double fd = (loss_of(p) - loss_of(m)) / (2 * h);
      CHECK(rel_err(fd, grads.w(i, j)) < 1e-6);
    }
}

TEST_CASE("softmax cross entropy value and gradient") {
  Mat<double> s(2, 1);
  s << 0.0, 0.0;
  Mat<double> ds;
  const double loss = softmax_cross_entropy(s, {0}, &ds);
  CHECK(loss == doctest::Approx(std::log(2.0)));
  CHECK(ds(0, 0) == doctest::Approx(-0.5));
  CHECK(ds(1, 0) == doctest::Approx(0.5));

  // FD check on random scores
  std::mt19937_64 rng(6);
  Mat<double> scores = Mat<double>::Random(2, 5);
  std::vector<int> targets{0, 1, 1, 0, 1};
  Mat<double> grad;
  softmax_cross_entropy(scores, targets, &grad);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      Mat<double> p = scores, m = scores;
      p(i, j) += h;
      m(i, j) -= h;
      const double fd =
          (softmax_cross_entropy<double>(p, targets) -
           softmax_cross_entropy<double>(m, targets)) / (2 * h);
      CHECK(rel_err(fd, grad(i, j)) < 1e-5);
    }
}

TEST_CASE("softmax is shift invariant") {
  Mat<double> s(2, 1);
  s << 1.3, -0.4;
  Mat<double> shifted = s.array() + 11.0;
  const auto p0 = softmax(s);
  const auto p1 = softmax(shifted);
  CHECK(p0(0, 0) == doctest::Approx(p1(0, 0)).epsilon(1e-12));
  CHECK(p0(1, 0) == doctest::Approx(p1(1, 0)).epsilon(1e-12));
}

TEST_CASE("relu and sigmoid behave and differentiate") {
  FeatureMap<double> x = FeatureMap<double>::zeros(1, 1, 3);
  x.data << -1.0, 0.0, 2.0;
  const auto r = relu(x);
  CHECK(r.data(0, 0) == 0.0);
  CHECK(r.data(0, 2) == 2.0);
  const auto s = sigmoid(x);
  CHECK(s.data(0, 1) == doctest::Approx(0.5));
  CHECK(s.data(0, 2) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));

  FeatureMap<double> dy = FeatureMap<double>::zeros(1, 1, 3);
  dy.data << 1.0, 1.0, 1.0;
  const auto dr = relu_backward(r, dy);
  CHECK(dr.data(0, 0) == 0.0);
  CHECK(dr.data(0, 2) == 1.0);
  const auto dsg = sigmoid_backward(s, dy);
  CHECK(dsg.data(0, 1) == doctest::Approx(0.25));
}

TEST_CASE("adam converges on a quadratic") {
  Mat<double> w = Mat<double>::Constant(3, 1, 5.0);
  std::vector<ParamRef<double>> params{{"w", &w}};
  Adam<double> opt(0.05);
  for (int i = 0; i < 600; ++i) {
    Mat<double> g = w;  // d/dw of 0.5*|w|^2
    opt.step(params, {&g});
  }
  CHECK(w.norm() < 1e-2);
}
