#include <doctest.h>

#include <cmath>

#include "helpers.h"
#include "specprop/ad/derivatives.h"
#include "specprop/ad/parameter_store.h"
#include "specprop/ad/tape.h"
#include "specprop/density/model.h"

using namespace specprop;
using ad::Tape;
using ad::Var;
using linalg::Matrix;
using linalg::Rng;
using linalg::Vector;

namespace {

// Two-layer net W2 lrelu(W1 x + b1) + b2 on a column x.
struct TwoLayer {
  Matrix w1, b1, w2, b2;
  explicit TwoLayer(Rng& rng, std::size_t in = 3, std::size_t hid = 5, std::size_t out = 4)
      : w1(testing::random_matrix(rng, hid, in)),
        b1(testing::random_matrix(rng, hid, 1)),
        w2(testing::random_matrix(rng, out, hid)),
        b2(testing::random_matrix(rng, out, 1)) {}
  Var operator()(Tape& t, Var x) const {
    Var h = ad::leaky_relu(ad::bias_add(ad::matmul(t.constant(w1), x), t.constant(b1)), 0.01);
    return ad::bias_add(ad::matmul(t.constant(w2), h), t.constant(b2));
  }
  Vector eval(const Vector& x) const {
    Tape t;
    return (*this)(t, t.constant(Matrix::column(x))).value().flatten();
  }
};

Vector column_of(Var v) { return v.value().flatten(); }

}  // namespace

TEST_CASE("evaluate examples") {
  Tape t;
  CHECK(ad::leaky_relu(t.constant(-1.0), 0.01).scalar() == doctest::Approx(-0.01));

  const Matrix x{{1.5}, {-2.0}};
  const Var y = ad::bias_add(ad::matmul(t.constant(Matrix::identity(2)), t.constant(x)), t.constant(Matrix(2, 1)));
  CHECK(y.value() == x);
}

TEST_CASE("three-block residual net matches hand composition") {
  density::ResidualFlow f({2, 8, 3, 0.01}, density::Direction::kLatentToData);
  Rng rng(12);
  f.initialize(rng, 1.0);
  const Vector z{0.3, -1.1};

  auto lrelu = [](Vector v) {
    for (double& x : v) x = x > 0 ? x : 0.01 * x;
    return v;
  };
  Vector x = z;
  const auto& p = f.parameters();
  for (std::size_t b = 0; b < 3; ++b) {
    auto w = [&](int l) { return p.value(p.index_of(density::ResidualFlow::weight_name(b, l))); };
    auto bias = [&](int l) { return p.value(p.index_of(density::ResidualFlow::bias_name(b, l))).col(0); };
    const Vector h1 = lrelu(matvec(w(0), x) + bias(0));
    const Vector h2 = lrelu(matvec(w(1), h1) + bias(1));
    x = x + (matvec(w(2), h2) + bias(2));
  }
  const Vector got = f.evaluate(z);
  CHECK(testing::rel_l2(got, x) < 1e-14);
}

TEST_CASE("vjp examples") {
  Tape t;
  const Var x = t.variable(Matrix{{1}, {2}, {3}});
  const Var u = t.constant(Matrix{{0.5}, {-1}, {2}});
  CHECK(ad::vjp(ad::scale(x, 2.0), x, u).value() == Matrix{{1}, {-2}, {4}});

  Rng rng(3);
  const Matrix a = testing::random_matrix(rng, 3, 3);
  const Var ax = ad::matmul(t.constant(a), x);
  const Var g = ad::vjp(ax, x, u);
  const Vector expect = matvec(a.transposed(), Vector{0.5, -1, 2});
  CHECK(testing::rel_l2(column_of(g), expect) < 1e-14);

  const Var unrelated = t.variable(Matrix{{1}});
  CHECK_THROWS_AS(ad::vjp(ad::scale(unrelated, 2.0), x, t.constant(Matrix{{1}})), ad::GraphError);
}

TEST_CASE("vjp of a random two-layer net matches finite differences") {
  Rng rng(31);
  const TwoLayer net(rng);
  const Vector x0{0.4, -0.7, 1.3};
  const Vector u{0.2, -1.0, 0.5, 0.9};

  Tape t;
  const Var x = t.variable(Matrix::column(x0));
  const Vector g = column_of(ad::vjp(net(t, x), x, t.constant(Matrix::column(u))));
  const Vector fd = testing::central_diff(
      [&](const Vector& xv) { return linalg::dot(u.span(), net.eval(xv).span()); }, x0, 1e-6);
  CHECK(testing::rel_l2(g, fd) < 1e-5);
}

TEST_CASE("jvp examples") {
  Tape t;
  const Var x = t.variable(Matrix{{1}, {2}});
  const Var v = t.constant(Matrix{{1}, {1}});
  CHECK(ad::jvp(ad::mul(x, x), x, v).value() == Matrix{{2}, {4}});

  Rng rng(4);
  const Matrix a = testing::random_matrix(rng, 3, 2);
  const Var j = ad::jvp(ad::matmul(t.constant(a), x), x, v);
  CHECK(testing::rel_l2(column_of(j), matvec(a, Vector{1, 1})) < 1e-15);
}

TEST_CASE("transpose pairing <u, J v> = <J^T u, v> on random nets") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const TwoLayer net(rng);
    Tape t;
    const Var x = t.variable(testing::random_matrix(rng, 3, 1));
    const Var y = net(t, x);
    const Var u = t.constant(testing::random_matrix(rng, 4, 1));
    const Var v = t.constant(testing::random_matrix(rng, 3, 1));
    const double lhs = ad::inner(u, ad::jvp(y, x, v)).scalar();
    const double rhs = ad::inner(ad::vjp(y, x, u), v).scalar();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("grad examples") {
  SUBCASE("quadratic") {
    Tape t;
    const Matrix theta0{{1.5, -2.0, 0.25}};
    const Var th = t.variable(theta0);
    const Var q = ad::scale(ad::inner(th, th), 0.5);
    const Var g = ad::gradients(q, std::span<const Var>(&th, 1))[0];
    CHECK(g.value() == theta0);
  }
  SUBCASE("linear model: gradient is the outer product c z^T") {
    Tape t;
    const Matrix w0{{1, 2}, {3, 4}, {5, 6}};
    const Var w = t.variable(w0);
    const Var z = t.constant(Matrix{{0.5}, {-2}});
    const Var c = t.constant(Matrix{{1}, {-1}, {3}});
    const Var s = ad::inner(c, ad::matmul(w, z));
    const Matrix g = ad::gradients(s, std::span<const Var>(&w, 1))[0].value();
    const Matrix expect = linalg::matmul(Matrix{{1}, {-1}, {3}}, Matrix{{0.5}, {-2}}, false, true);
    CHECK(g == expect);
  }
  SUBCASE("non-scalar output is rejected") {
    Tape t;
    const Var x = t.variable(Matrix{{1}, {2}});
    CHECK_THROWS(ad::gradients(ad::scale(x, 2.0), std::span<const Var>(&x, 1)));
  }
}

TEST_CASE("second order: d/dtheta ||J(z) v||^2 matches finite differences") {
  Rng rng(5);
  density::ResidualFlow f({2, 6, 2, 0.01}, density::Direction::kLatentToData);
  f.initialize(rng, 0.8);
  const Matrix z0{{0.3}, {-0.6}};
  const Matrix v0{{0.7}, {0.2}};

  auto value_and_grad = [&](bool with_grad, Vector* grad) {
    Tape t;
    const std::vector<Var> params = f.bind(t);
    const Var z = t.variable(z0);
    const Var jv = ad::jvp(f.forward(params, z), z, t.constant(v0));
    const Var s = ad::inner(jv, jv);
    if (with_grad) *grad = f.gradient(s, params);
    return s.scalar();
  };
  Vector g;
  value_and_grad(true, &g);
  const Vector fd = testing::central_diff(
      testing::with_params(f, [&] { return value_and_grad(false, nullptr); }), f.parameters().flatten(), 1e-5);
  CHECK(testing::rel_l2(g, fd) < 1e-4);
}

TEST_CASE("second order through vjp(jvp): gradient of <v, J^T J v>") {
  Rng rng(6);
  density::ResidualFlow f({2, 5, 2, 0.01}, density::Direction::kLatentToData);
  f.initialize(rng, 0.8);
  const Matrix z0{{-0.4}, {0.9}};
  const Matrix v0{{0.1}, {-1.0}};
  auto run = [&](Vector* grad) {
    Tape t;
    const std::vector<Var> params = f.bind(t);
    const Var z = t.variable(z0);
    const Var y = f.forward(params, z);
    const Var jv = ad::jvp(y, z, t.constant(v0));
    const Var mv = ad::vjp(y, z, jv);
    const Var s = ad::inner(t.constant(v0), mv);
    if (grad) *grad = f.gradient(s, params);
    return s.scalar();
  };
  Vector g;
  run(&g);
  const Vector fd =
      testing::central_diff(testing::with_params(f, [&] { return run(nullptr); }), f.parameters().flatten(), 1e-5);
  CHECK(testing::rel_l2(g, fd) < 1e-4);
}

TEST_CASE("first-order gradients of every smooth primitive match finite differences") {
  Rng rng(9);
  const Matrix x0 = [&] {
    Matrix m = testing::random_matrix(rng, 3, 4);
    for (double& v : m.span()) v = 0.5 + std::abs(v);  // keep log/sqrt/reciprocal in domain
    return m;
  }();
  const Matrix w = testing::random_matrix(rng, 3, 4);
  using Fn = std::function<Var(Var)>;
  const std::vector<std::pair<const char*, Fn>> cases = {
      {"log", [](Var x) { return ad::log(x); }},
      {"exp", [](Var x) { return ad::exp(x); }},
      {"sin", [](Var x) { return ad::sin(x); }},
      {"cos", [](Var x) { return ad::cos(x); }},
      {"reciprocal", [](Var x) { return ad::reciprocal(x); }},
      {"sqrt", [](Var x) { return ad::sqrt(x); }},
      {"square", [](Var x) { return ad::square(x); }},
      {"lrelu", [](Var x) { return ad::leaky_relu(ad::shift(x, -1.2), 0.01); }},
      {"sum_rows", [](Var x) { return ad::broadcast_rows(ad::sum_rows(x), 3); }},
      {"sum_cols", [](Var x) { return ad::broadcast_cols(ad::sum_cols(x), 4); }},
      {"tile/fold", [](Var x) { return ad::fold_cols(ad::mul(ad::tile_cols(x, 2), ad::tile_cols(x, 2)), 2); }},
      {"slice/pad", [](Var x) { return ad::pad_rows(ad::slice_rows(x, 1, 2), 1, 3); }},
      {"divide", [](Var x) { return ad::divide(ad::sin(x), x); }},
  };
  for (const auto& [name, fn] : cases) {
    CAPTURE(name);
    auto value = [&](const Vector& flat) {
      Tape t;
      const Var x = t.constant(Matrix(3, 4, flat.values()));
      return ad::inner(t.constant(w), fn(x)).scalar();
    };
    Tape t;
    const Var x = t.variable(x0);
    const Var s = ad::inner(t.constant(w), fn(x));
    const Vector g = ad::gradients(s, std::span<const Var>(&x, 1))[0].value().flatten();
    CHECK(testing::rel_l2(g, testing::central_diff(value, x0.flatten(), 1e-6)) < 1e-6);
  }
}

TEST_CASE("leaky relu derivative at 0 is the positive-side slope in both modes") {
  Tape t;
  const Var x = t.variable(Matrix{{0.0}});
  const Var y = ad::leaky_relu(x, 0.01);
  const Var one = t.constant(Matrix{{1.0}});
  CHECK(ad::jvp(y, x, one).scalar() == 1.0);
  CHECK(ad::vjp(y, x, one).scalar() == 1.0);
}

TEST_CASE("no implicit broadcasting") {
  Tape t;
  CHECK_THROWS_AS(ad::add(t.constant(Matrix(2, 3)), t.constant(Matrix(2, 1))), ad::GraphError);
  CHECK_THROWS_AS(ad::matmul(t.constant(Matrix(2, 3)), t.constant(Matrix(2, 3))), ad::GraphError);
}

TEST_CASE("parameter store flatten/unflatten round-trips exactly") {
  ad::ParameterStore s;
  Rng rng(2);
  s.add("a", testing::random_matrix(rng, 2, 3));
  s.add("b", testing::random_matrix(rng, 4, 1));
  CHECK(s.total_count() == 10);
  CHECK_THROWS(s.add("a", Matrix(1, 1)));
  ad::ParameterStore copy = s;
  const Vector flat = s.flatten();
  for (double& v : copy.value(0).span()) v = 0.0;
  copy.unflatten(flat);
  CHECK(copy == s);
  CHECK(s.index_of("b") == 1);
  CHECK_THROWS(copy.unflatten(Vector(3)));
}
