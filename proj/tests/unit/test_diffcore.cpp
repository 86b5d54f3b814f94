#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>

#include "cmdp/diffcore/activations.hpp"
#include "cmdp/diffcore/adam.hpp"
#include "cmdp/diffcore/checkpoint.hpp"
#include "cmdp/diffcore/gaussian.hpp"
#include "cmdp/diffcore/nn.hpp"
#include "cmdp/diffcore/tape.hpp"
#include "cmdp/error.hpp"
#include "cmdp/oracle/oracle.hpp"
#include "cmdp/rng.hpp"

using namespace cmdp;

namespace {

ParamVector scalar_param(double x) {
  ParamVector p;
  p.add_segment("x", 1, 1);
  p[0] = x;
  return p;
}

}  // namespace

TEST_CASE("param vector layout") {
  ParamVector p;
  CHECK(p.add_segment("w", 2, 3) == 0);
  CHECK(p.add_segment("b", 1, 3) == 1);
  CHECK(p.size() == 9);
  CHECK(p.segments()[1].offset == 6);
  CHECK(p.find("b") == 1);
  CHECK_THROWS_AS(p.find("missing"), std::out_of_range);
  CHECK_THROWS(p.add_segment("w", 1, 1));
  CHECK_THROWS(p.add_segment("z", 0, 1));
  p.segment(0)(1, 2) = 4.0;
  CHECK(p[5] == 4.0);
  CHECK(p.all_finite());
  p[0] = std::nan("");
  CHECK_FALSE(p.all_finite());
}

TEST_CASE("grad of x squared at 3 is 6") {
  ParamVector p = scalar_param(3.0);
  Tape t;
  Var x = t.parameter(p, 0);
  ParamVector g = grad(t, square(x), p);
  CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("grad of a constant is exactly zero") {
  ParamVector p = scalar_param(3.0);
  p.add_segment("unused", 2, 2);
  Tape t;
  t.parameter(p, 0);
  ParamVector g = grad(t, t.constant(5.0), p);
  for (double v : g.values()) CHECK(v == 0.0);
}

TEST_CASE("grad of softplus at 0 is one half") {
  ParamVector p = scalar_param(0.0);
  Tape t;
  ParamVector g = grad(t, softplus(t.parameter(p, 0)), p);
  CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("grad rejects a non-scalar root and non-finite values") {
  ParamVector p;
  p.add_segment("v", 1, 2);
  {
    Tape t;
    CHECK_THROWS_AS(grad(t, t.parameter(p, 0), p), ShapeError);
  }
  {
    ParamVector q = scalar_param(-1.0);
    Tape t;
    CHECK_THROWS_AS(grad(t, log(t.parameter(q, 0)), q), NumericError);
  }
  {
    // Finite root, non-finite adjoint: exp(log(x^2)) at x = 0.
    ParamVector q = scalar_param(0.0);
    Tape t;
    Var root = exp(log(square(t.parameter(q, 0))));
    REQUIRE(root.scalar() == 0.0);
    CHECK_THROWS_AS(grad(t, root, q), NumericError);
  }
}

TEST_CASE("parameters of a different vector receive no gradient") {
  ParamVector a = scalar_param(2.0);
  ParamVector b = scalar_param(5.0);
  Tape t;
  Var root = t.parameter(a, 0) * t.parameter(b, 0);
  CHECK(grad(t, root, a)[0] == doctest::Approx(5.0));
  CHECK(grad(t, root, b)[0] == doctest::Approx(2.0));
}

TEST_CASE("kinks route the gradient through the first argument") {
  ParamVector p;
  p.add_segment("a", 1, 1);
  p.add_segment("b", 1, 1);
  p[0] = 1.0;
  p[1] = 1.0;
  {
    Tape t;
    ParamVector g = grad(t, min(t.parameter(p, 0), t.parameter(p, 1)), p);
    CHECK(g[0] == 1.0);
    CHECK(g[1] == 0.0);
  }
  {
    Tape t;
    ParamVector g = grad(t, max(t.parameter(p, 1), t.parameter(p, 0)), p);
    CHECK(g[1] == 1.0);
    CHECK(g[0] == 0.0);
  }
  {
    Tape t;
    ParamVector g = grad(t, sum(clip(t.parameter(p, 0), 0.0, 1.0)), p);
    CHECK(g[0] == 1.0);
  }
}

TEST_CASE("every tape op agrees with central differences") {
  Rng rng(11);
  std::normal_distribution<double> n01(0.0, 1.0);
  ParamVector p;
  p.add_segment("A", 3, 4);
  p.add_segment("B", 4, 2);
  p.add_segment("c", 1, 2);
  p.add_segment("d", 3, 1);
  for (double& v : p.values()) v = 0.6 * n01(rng);
  auto build = [](Tape& t, const ParamVector& q) {
    Var a = t.parameter(q, 0), b = t.parameter(q, 1), c = t.parameter(q, 2), d = t.parameter(q, 3);
    Var h = elu(matmul(a, b) + c);
    Var u = tanh(h) * exp(h * 0.3) - softplus(-h) + d;
    Var v = min(u, h * 0.5) + max(u * 2.0, h) + clip(u, -0.3, 0.4);
    Var w = log(square(v) + 1.0) + 2.0 - row_sum(v) * 0.1;
    return mean(w) + sum(square(d)) * 0.5 - (1.0 - sum(c));
  };
  for (int trial = 0; trial < 20; ++trial) {
    for (double& v : p.values()) v = 0.6 * n01(rng);
    Tape t;
    const ParamVector g = grad(t, build(t, p), p);
    const ParamVector fd = oracle::finite_diff_grad(
        [&](const ParamVector& x) {
          Tape s;
          return build(s, x).scalar();
        },
        p, 1e-6);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("broadcasting shapes and errors") {
  Tape t;
  Var m = t.constant(Matrix::Ones(3, 2));
  CHECK((m + t.constant(Matrix::Ones(1, 2))).rows() == 3);
  CHECK((m * t.constant(Matrix::Ones(3, 1))).cols() == 2);
  CHECK((m - t.constant(2.0)).value()(2, 1) == -1.0);
  CHECK_THROWS_AS(m + t.constant(Matrix::Ones(2, 2)), ShapeError);
  CHECK_THROWS_AS(matmul(m, m), ShapeError);
}

TEST_CASE("softplus values") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(std::abs(softplus(50.0) - 50.0) < 1e-12);
  CHECK(softplus(-1.3) == doctest::Approx(0.2410084538329922).epsilon(1e-14));
  CHECK(softplus(-1.3) == doctest::Approx(std::log1p(std::exp(-1.3))).epsilon(1e-14));
  CHECK(softplus_inverse(softplus(0.37)) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("softplus is positive and increasing on finite inputs") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-700.0, 700.0);
  for (int i = 0; i < 20000; ++i) {
    const double x = u(rng);
    CHECK(softplus(x) > 0.0);
    const double y = x + 1e-3 * (1.0 + std::abs(x));
    CHECK(softplus(y) >= softplus(x));
  }
  CHECK(softplus(-700.0) > 0.0);
  CHECK(softplus(-30.0) < softplus(-29.0));
}

TEST_CASE("gaussian log density and entropy") {
  const double m1[] = {0.3}, s1[] = {0.0}, a1[] = {0.3};
  CHECK(gaussian_logprob(m1, s1, a1) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  const double m2[] = {1.0, -2.0}, s2[] = {0.0, 0.0};
  CHECK(gaussian_logprob(m2, s2, m2) == doctest::Approx(-std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  for (double a : {0.1, 0.7, 2.5}) {
    const double ls[] = {0.4}, mu[] = {1.2};
    const double up[] = {1.2 + a}, down[] = {1.2 - a};
    CHECK(gaussian_logprob(mu, ls, up) == doctest::Approx(gaussian_logprob(mu, ls, down)).epsilon(1e-15));
  }
  const double e1[] = {0.0};
  CHECK(gaussian_entropy(e1) == doctest::Approx(1.418939).epsilon(1e-6));
  const double e2[] = {std::log(2.0)};
  CHECK(gaussian_entropy(e2) - gaussian_entropy(e1) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  const double e3[] = {0.0, 0.0, 0.0};
  CHECK(gaussian_entropy(e3) == doctest::Approx(3 * 1.4189385332046727).epsilon(1e-14));
  const double bad[] = {0.0, 1.0};
  CHECK_THROWS_AS(gaussian_logprob(m1, s1, bad), ShapeError);
}

TEST_CASE("gaussian tape head matches scalar forms") {
  Tape t;
  Matrix mean(2, 2);
  mean << 0.1, -0.4, 1.0, 2.0;
  Matrix ls(1, 2);
  ls << 0.2, -0.3;
  Matrix act(2, 2);
  act << 0.5, 0.0, 0.3, 2.2;
  GaussianPolicyOutput out{t.constant(mean), t.constant(ls)};
  const Matrix lp = gaussian_logprob(out, act).value();
  for (int r = 0; r < 2; ++r) {
    const double m[] = {mean(r, 0), mean(r, 1)}, s[] = {ls(0, 0), ls(0, 1)}, a[] = {act(r, 0), act(r, 1)};
    CHECK(lp(r, 0) == doctest::Approx(gaussian_logprob(m, s, a)).epsilon(1e-14));
  }
  const double s[] = {0.2, -0.3};
  CHECK(gaussian_entropy(out.log_std).scalar() == doctest::Approx(gaussian_entropy(s)).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_logprob(out, Matrix::Zero(2, 3)), ShapeError);
}

TEST_CASE("gaussian density integrates to one") {
  // Importance sampling from a wider proposal: E_q[p/q] = 1.
  Rng rng(2024);
  std::normal_distribution<double> q(0.0, 2.0);
  const double mu[] = {0.3}, ls[] = {-0.2}, qls[] = {std::log(2.0)}, zero[] = {0.0};
  double acc = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x[] = {q(rng)};
    acc += std::exp(gaussian_logprob(mu, ls, x) - gaussian_logprob(zero, qls, x));
  }
  CHECK(std::abs(acc / n - 1.0) < 0.01);
}

TEST_CASE("adam with zero gradient is the identity") {
  ParamVector p;
  p.add_segment("w", 2, 2);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.1 * static_cast<double>(i) - 0.2;
  const ParamVector before = p;
  AdamState s = AdamState::zeros_for(p);
  adam_step(p, s, p.zeros_like(), 0.1);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == before[i]);
  CHECK(s.step == 1);
}

TEST_CASE("first adam step moves each coordinate by about lr") {
  ParamVector p;
  p.add_segment("w", 1, 4);
  ParamVector g = p.zeros_like();
  const double gv[] = {0.5, -3.0, 1e-3, 20.0};
  for (int i = 0; i < 4; ++i) g[static_cast<std::size_t>(i)] = gv[i];
  AdamState s = AdamState::zeros_for(p);
  adam_step(p, s, g, 0.01);
  for (int i = 0; i < 4; ++i) {
    // m_hat = g, v_hat = g^2: step = lr * g / (|g| + eps).
    const double expected = -0.01 * gv[i] / (std::abs(gv[i]) + 1e-8);
    CHECK(p[static_cast<std::size_t>(i)] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("adam is deterministic and rejects non-finite gradients") {
  ParamVector p;
  p.add_segment("w", 1, 3);
  ParamVector g = p.zeros_like();
  g[0] = 0.3;
  g[1] = -0.1;
  g[2] = 2.0;
  ParamVector p1 = p, p2 = p;
  AdamState s1 = AdamState::zeros_for(p), s2 = AdamState::zeros_for(p);
  adam_step(p1, s1, g, 0.05);
  adam_step(p2, s2, g, 0.05);
  for (std::size_t i = 0; i < 3; ++i) CHECK(p1[i] == p2[i]);
  g[1] = std::nan("");
  const ParamVector keep = p1;
  CHECK_THROWS_AS(adam_step(p1, s1, g, 0.05), NumericError);
  CHECK(s1.step == 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(p1[i] == keep[i]);
}

TEST_CASE("gradient norm clipping") {
  ParamVector g;
  g.add_segment("g", 1, 2);
  g[0] = 3.0;
  g[1] = 4.0;
  clip_grad_norm(g, 1.0);
  CHECK(g[0] == doctest::Approx(0.6));
  CHECK(g[1] == doctest::Approx(0.8));
  clip_grad_norm(g, 10.0);
  CHECK(g[0] == doctest::Approx(0.6));
}

TEST_CASE("mlp forward") {
  SUBCASE("zero parameters give zero output") {
    Mlp net({{3, 4, 2}, Activation::kElu, OutputHead::kLinear}, "n");
    ParamVector p;
    net.declare(p);
    const Matrix y = net.forward(p, Matrix::Random(5, 3));
    CHECK(y.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("identity linear layer") {
    Mlp net({{3, 3}, Activation::kElu, OutputHead::kLinear}, "n");
    ParamVector p;
    net.declare(p);
    p.segment(p.find("n.w0")) = Matrix::Identity(3, 3);
    Matrix x(2, 3);
    x << 1, -2, 3, 0.5, 0.25, -7;
    CHECK(net.forward(p, x) == x);
  }
  SUBCASE("deterministic and shape checked") {
    Mlp net({{3, 8, 8, 2}, Activation::kTanh, OutputHead::kSoftplus}, "n");
    ParamVector p;
    net.declare(p);
    Rng rng(5);
    net.initialize(p, rng, 1.0);
    Matrix x = Matrix::Random(4, 3);
    const Matrix a = net.forward(p, x), b = net.forward(p, x);
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
    CHECK(a.minCoeff() > 0.0);
    CHECK_THROWS_AS(net.forward(p, Matrix::Random(4, 2)), ShapeError);
  }
}

TEST_CASE("checkpoint round trip") {
  ParamVector p;
  p.add_segment("a.w0", 2, 3);
  p.add_segment("a.b0", 1, 3);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::sin(static_cast<double>(i)) * 1e3;
  const auto dir = std::filesystem::temp_directory_path() / "cmdp_ckpt_test";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "ck", p, {{"note", "x"}});
  for (const auto& path : {dir / "ck", dir / "ck.bin", dir / "ck.json"}) {
    const LoadedCheckpoint back = load_checkpoint(path);
    REQUIRE(back.params.same_layout(p));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(back.params[i] == p[i]);
    CHECK(back.meta["note"] == "x");
  }
  std::filesystem::remove_all(dir);
}
