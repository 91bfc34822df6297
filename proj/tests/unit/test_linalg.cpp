#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.h"
#include "specprop/linalg/matrix.h"
#include "specprop/linalg/oracles.h"
#include "specprop/linalg/rng.h"

using namespace specprop::linalg;

TEST_CASE("matvec examples") {
  CHECK(matvec(Matrix::identity(3), Vector{1, 2, 3}) == Vector{1, 2, 3});
  const double d[] = {2, 3};
  CHECK(matvec(Matrix::diagonal(d), Vector{1, 1}) == Vector{2, 3});
  CHECK(matvec(Matrix{{0, 1}, {1, 0}}, Vector{5, 7}) == Vector{7, 5});
  CHECK_THROWS_AS(matvec(Matrix::identity(3), Vector{1, 2}), DimensionError);
}

TEST_CASE("matmul transposes agree with explicit transposition") {
  Rng rng(3);
  const Matrix a = testing::random_matrix(rng, 4, 3), b = testing::random_matrix(rng, 4, 5);
  const Matrix x = matmul(a, b, true, false), y = matmul(a.transposed(), b);
  CHECK(max_abs(x.span()) > 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.span()[i] == doctest::Approx(y.span()[i]).epsilon(1e-14));
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("cholesky_logdet examples") {
  CHECK(cholesky_logdet(Matrix::identity(5)) == 0.0);
  CHECK(cholesky_logdet(Matrix{{2, 0}, {0, 2}}) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(cholesky_logdet(Matrix{{1, 2}, {2, 1}}), NotPositiveDefinite);

  Rng rng(11);
  const Matrix a = testing::random_spd_simple(rng, 8);
  const SymmetricEigen e = sym_eig(a);
  double sum = 0.0;
  for (double l : e.eigenvalues) sum += std::log(l);
  CHECK(std::abs(cholesky_logdet(a) - sum) < 1e-10);
}

TEST_CASE("cholesky_logdet equals the eigenvalue log-sum up to 64x64") {
  Rng rng(5);
  for (std::size_t n : {2u, 7u, 16u, 33u, 64u}) {
    const Matrix a = random_spd(rng, n, 100.0, 0.5).matrix;
    const SymmetricEigen e = sym_eig(a);
    double sum = 0.0;
    for (double l : e.eigenvalues) sum += std::log(l);
    const double ld = cholesky_logdet(a);
    CHECK(std::abs(ld - sum) <= 1e-8 * std::abs(sum));
  }
}

TEST_CASE("sym_eig examples") {
  SUBCASE("diagonal") {
    const double d[] = {3, 1, 2};
    const SymmetricEigen e = sym_eig(Matrix::diagonal(d));
    CHECK(e.eigenvalues == Vector{3, 2, 1});
    CHECK(e.eigenvectors(0, 0) == 1.0);
    CHECK(e.eigenvectors(2, 1) == 1.0);
    CHECK(e.eigenvectors(1, 2) == 1.0);
  }
  SUBCASE("classic 2x2") {
    const SymmetricEigen e = sym_eig(Matrix{{2, 1}, {1, 2}});
    CHECK(e.eigenvalues[0] == doctest::Approx(3.0));
    CHECK(e.eigenvalues[1] == doctest::Approx(1.0));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(std::abs(e.eigenvectors(0, 0)) - s) < 1e-12);
    CHECK(std::abs(e.eigenvectors(0, 0) - e.eigenvectors(1, 0)) < 1e-12);
    CHECK(std::abs(e.eigenvectors(0, 1) + e.eigenvectors(1, 1)) < 1e-12);
  }
  SUBCASE("non-symmetric input is rejected") {
    CHECK_THROWS_AS(sym_eig(Matrix{{1, 2}, {0, 1}}), NotSymmetric);
  }
}

TEST_CASE("sym_eig reconstruction, orthonormality and eigen-equation") {
  Rng rng(21);
  const std::size_t n = 16;
  const Matrix a = testing::random_symmetric(rng, n);
  const SymmetricEigen e = sym_eig(a);
  const Matrix& v = e.eigenvectors;

  const Matrix vl = matmul(v, Matrix::diagonal(e.eigenvalues.span()));
  const Matrix rec = matmul(vl, v, false, true);
  CHECK(max_abs((rec - a).span()) < 1e-9);

  Matrix vtv = matmul(v, v, true, false);
  for (std::size_t i = 0; i < n; ++i) vtv(i, i) -= 1.0;
  CHECK(max_abs(vtv.span()) < 1e-8);

  const double scale = frobenius_norm(a);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector vi = v.col(i);
    const Vector r = matvec(a, vi) - e.eigenvalues[i] * vi;
    CHECK(norm2(r.span()) < 1e-8 * scale);
    if (i > 0) CHECK(e.eigenvalues[i - 1] >= e.eigenvalues[i]);
    // sign convention: largest-magnitude entry positive
    double big = 0.0;
    for (double x : vi)
      if (std::abs(x) > std::abs(big)) big = x;
    CHECK(big > 0.0);
  }
}

TEST_CASE("rademacher examples") {
  Rng rng(1);
  const Vector v = rademacher(rng, 1000);
  for (double x : v) CHECK(std::abs(x) == 1.0);

  Rng big(2);
  const Vector w = rademacher(big, 100000);
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= 100000.0;
  CHECK(std::abs(mean) < 0.02);

  Rng a(9, 4), b(9, 4);
  CHECK(rademacher(a, 77) == rademacher(b, 77));
  CHECK_THROWS(rademacher(a, 0));
}

TEST_CASE("rng streams are reproducible and split by identity") {
  Rng a(42, 0), b(42, 0), c(42, 1);
  std::set<std::uint64_t> seen;
  bool differ = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a(), y = b(), z = c();
    CHECK(x == y);
    differ = differ || x != z;
    seen.insert(x);
  }
  CHECK(differ);
  CHECK(seen.size() == 100);

  // split depends on the identity, not on how far the parent has advanced
  Rng p(7, 3);
  const Rng early = p.split(5);
  for (int i = 0; i < 10; ++i) p();
  Rng late = p.split(5), e2 = early;
  for (int i = 0; i < 10; ++i) CHECK(late() == e2());
  CHECK(Rng(7, 3).split(5).split(1)() != Rng(7, 3).split(1).split(5)());
}

TEST_CASE("normal and unit draws have the right moments") {
  Rng rng(8);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  const Vector u = random_unit(rng, 9);
  CHECK(norm2(u.span()) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("random_spd has the requested spectrum") {
  Rng rng(4);
  const SpdSample s = random_spd(rng, 12, 50.0, 2.0);
  const SymmetricEigen e = sym_eig(s.matrix);
  CHECK(e.eigenvalues[0] == doctest::Approx(100.0).epsilon(1e-10));
  CHECK(e.eigenvalues[11] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(s.eigenvalues[0] == doctest::Approx(2.0));
}
