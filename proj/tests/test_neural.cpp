#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ssomc/neural.hpp"

using namespace ssomc;
using Net = DenseNet<double>;
using Mat = Net::Matrix;
using Vec = Net::Vector;

namespace {

Net random_net(std::vector<int> sizes, std::uint64_t seed, OutputActivation out = OutputActivation::Identity) {
  Net net(std::move(sizes), out);
  Rng rng = make_stream(seed, "test-net");
  net.initialize(rng);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) net.bias(l)[i] = 0.3 * normal(rng, 0.0, 1.0);
  }
  return net;
}

/// Loop-based forward pass for a single sample.
std::vector<double> scalar_forward(const Net& net, std::vector<double> a) {
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& w = net.weight(l);
    std::vector<double> z(w.rows());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double s = net.bias(l)[i];
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * a[j];
      const bool squash = l + 1 < net.layer_count() || net.output_activation() == OutputActivation::Tanh;
      z[i] = squash ? std::tanh(s) : s;
    }
    a = std::move(z);
  }
  return a;
}

}  // namespace

TEST_SUITE("neural") {
  TEST_CASE("zero network outputs zero") {
    Net net({3, 5, 2});
    const Mat y = net.forward(Mat::Ones(3, 4));
    CHECK(y.isZero(0.0));
  }

  TEST_CASE("single identity layer is affine") {
    Net net({2, 2});
    net.weight(0) = Mat::Identity(2, 2);
    net.bias(0) << 1.0, -1.0;
    Mat x(2, 1);
    x << 3.0, 4.0;
    const Mat y = net.forward(x);
    CHECK(y(0, 0) == 4.0);
    CHECK(y(1, 0) == 3.0);
  }

  TEST_CASE("forward matches a scalar loop") {
    for (auto out : {OutputActivation::Identity, OutputActivation::Tanh}) {
      const Net net = random_net({4, 8, 6, 3}, 5, out);
      Rng rng = make_stream(1, "test-x");
      Mat x(4, 7);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng, 0.0, 1.0);
      const Mat y = net.predict(x);
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const auto ref = scalar_forward(net, {x(0, c), x(1, c), x(2, c), x(3, c)});
        for (int r = 0; r < 3; ++r) CHECK(std::abs(y(r, c) - ref[r]) <= 1e-12);
      }
    }
  }

  TEST_CASE("backward agrees with finite differences") {
    Net net = random_net({4, 8, 3}, 11);
    Rng rng = make_stream(2, "test-x");
    Mat x(4, 5), up(3, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng, 0.0, 1.0);
    for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = normal(rng, 0.0, 1.0);
    auto f = [&](Net& n) { return (n.predict(x).array() * up.array()).sum(); };
    net.forward(x);
    auto g = net.zero_gradients();
    const Mat dx = net.backward(up, g);
    const Vec analytic = Net::flatten(g);
    const Vec p = net.flatten();
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      Vec q = p;
      q[k] += h;
      net.unflatten(q);
      const double fp = f(net);
      q[k] -= 2 * h;
      net.unflatten(q);
      const double fm = f(net);
      CHECK(std::abs((fp - fm) / (2 * h) - analytic[k]) <= 1e-6);
    }
    net.unflatten(p);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Mat xp = x, xm = x;
      xp.data()[i] += h;
      xm.data()[i] -= h;
      const double num = ((net.predict(xp) - net.predict(xm)).array() * up.array()).sum() / (2 * h);
      CHECK(std::abs(num - dx.data()[i]) <= 1e-6);
    }
  }

  TEST_CASE("gradients are linear in the upstream signal") {
    Net net = random_net({3, 6, 2}, 3);
    Mat x = Mat::Random(3, 4);
    Mat u1 = Mat::Random(2, 4), u2 = Mat::Random(2, 4);
    net.forward(x);
    auto g0 = net.zero_gradients();
    net.backward(Mat::Zero(2, 4), g0);
    CHECK(Net::flatten(g0).isZero(0.0));
    auto g1 = net.zero_gradients(), g2 = net.zero_gradients(), g12 = net.zero_gradients();
    net.backward(u1, g1);
    net.backward(u2, g2);
    net.backward(2.0 * u1 + u2, g12);
    CHECK((Net::flatten(g12) - 2.0 * Net::flatten(g1) - Net::flatten(g2)).norm() <= 1e-12);
  }

  TEST_CASE("flatten round trip") {
    Net net = random_net({3, 4, 2}, 4);
    const Vec p = net.flatten();
    CHECK(p.size() == 3 * 4 + 4 + 4 * 2 + 2);
    Net other({3, 4, 2});
    other.unflatten(p);
    CHECK(other.flatten() == p);
    CHECK_THROWS(other.unflatten(Vec::Zero(3)));
  }

  TEST_CASE("adamax steps") {
    Adamax<double> opt(0.1);
    Vec p(3);
    p << 1.0, 2.0, 3.0;
    Vec zero = Vec::Zero(3);
    Vec q = p;
    opt.step(q, zero);
    CHECK(q == p);

    Adamax<double> first(0.1);
    Vec g(3);
    g << 0.5, -2.0, 0.0;
    q = p;
    first.step(q, g);
    CHECK(q[0] == doctest::Approx(p[0] - 0.1).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(p[1] + 0.1).epsilon(1e-14));
    CHECK(q[2] == p[2]);

    Adamax<double> ten(0.01);
    Vec x = Vec::Constant(1, 1.0);
    double m = 0.0, u = 0.0, ref = 1.0;
    for (int t = 1; t <= 10; ++t) {
      const double grad = 2.0 * ref;
      Vec gv = Vec::Constant(1, 2.0 * x[0]);
      ten.step(x, gv);
      m = 0.9 * m + 0.1 * grad;
      u = std::max(0.999 * u, std::abs(grad));
      ref -= 0.01 / (1.0 - std::pow(0.9, t)) * m / u;
      CHECK(std::abs(x[0] - ref) <= 1e-14);
    }
  }

  TEST_CASE("gradient clipping") {
    Vec a(2), b(1);
    a << 3.0, 0.0;
    b << 4.0;
    CHECK(clip_grad_norm<double>({&a, &b}, 1.0) == doctest::Approx(5.0));
    CHECK(a[0] == doctest::Approx(0.6));
    CHECK(b[0] == doctest::Approx(0.8));
    Vec c(1);
    c << 0.5;
    clip_grad_norm<double>({&c}, 1.0);
    CHECK(c[0] == 0.5);
  }

  TEST_CASE("checkpoint round trip") {
    const auto path = std::filesystem::temp_directory_path() / "ssomc_test_weights.bin";
    Net a = random_net({3, 5, 2}, 8), b = random_net({2, 2}, 9, OutputActivation::Tanh);
    save_checkpoint(path, {{"a", &a}, {"b", &b}});
    Net a2({3, 5, 2}), b2({2, 2}, OutputActivation::Tanh);
    load_checkpoint(path, {{"a", &a2}, {"b", &b2}});
    CHECK(a2.flatten() == a.flatten());
    CHECK(b2.flatten() == b.flatten());
    Net wrong({3, 4, 2});
    CHECK_THROWS(load_checkpoint(path, {{"a", &wrong}, {"b", &b2}}));
    std::filesystem::remove(path);
  }
}
