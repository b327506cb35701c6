#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>

#include "qn/errors.hpp"
#include "qn/rng.hpp"
#include "qn/spd.hpp"
#include "testutil.hpp"

using namespace qn;

TEST_CASE("hand factorization") {
  Matrix a(2, 2);
  a << 4, 2, 2, 5;
  const SpdCholesky f = SpdCholesky::from_dense(a);
  CHECK(f.factor()(0, 0) == doctest::Approx(2.0));
  CHECK(f.factor()(1, 0) == doctest::Approx(1.0));
  CHECK(f.factor()(1, 1) == doctest::Approx(2.0));
  CHECK(f.det() == doctest::Approx(16.0));

  const SpdCholesky id = SpdCholesky::identity(4);
  CHECK(id.factor().isIdentity(0.0));
  CHECK(id.logdet() == 0.0);
}

TEST_CASE("indefinite matrix is rejected") {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;  // eigenvalues 3, -1
  CHECK_THROWS_AS(SpdCholesky::from_dense(a), NotPositiveDefinite);
}

TEST_CASE("asymmetric matrix is rejected") {
  Matrix a(2, 2);
  a << 1, 0.5, 0.0, 1;
  CHECK_THROWS_AS(SpdCholesky::from_dense(a), std::invalid_argument);
}

TEST_CASE("rank-one update and downdate") {
  const SpdCholesky id = SpdCholesky::identity(2);
  Vector e1(2);
  e1 << 1, 0;

  const SpdCholesky up = id.rank_one_update(e1);
  CHECK(up.factor()(0, 0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(up.factor()(1, 1) == doctest::Approx(1.0));
  CHECK(up.factor()(1, 0) == doctest::Approx(0.0));

  const SpdCholesky back = up.rank_one_downdate(e1);
  CHECK(test::rel_fro(back.dense(), Matrix::Identity(2, 2)) < 1e-14);

  CHECK_THROWS_AS(id.rank_one_downdate(2.0 * e1), DowndateBreakdown);
}

TEST_CASE("solve examples") {
  Matrix a(2, 2);
  a << 4, 2, 2, 5;
  const SpdCholesky f = SpdCholesky::from_dense(a);
  Vector b(2);
  b << 6, 7;
  const Vector x = f.solve(b);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(1.0));

  Vector diag(2);
  diag << 2, 1;
  const SpdCholesky d = SpdCholesky::from_diagonal(diag);
  Vector e1(2);
  e1 << 1, 0;
  CHECK(d.solve(e1)[0] == doctest::Approx(0.5));
  CHECK(d.solve(e1)[1] == 0.0);

  Vector wrong(3);
  CHECK_THROWS_AS(f.solve(wrong), std::invalid_argument);
}

TEST_CASE("determinants") {
  Vector diag(4);
  diag << 1, 2, 3, 4;
  const SpdCholesky d = SpdCholesky::from_diagonal(diag);
  CHECK(d.det() == doctest::Approx(24.0));
  CHECK(d.logdet() == doctest::Approx(std::log(24.0)));

  // logdet stays finite when det overflows
  Vector big = Vector::Constant(100, 1e40);
  const SpdCholesky huge = SpdCholesky::from_diagonal(big);
  CHECK(std::isfinite(huge.logdet()));
  CHECK_THROWS_AS(huge.det(), DetOverflow);
}

TEST_CASE("inverse examples") {
  CHECK(test::rel_fro(SpdCholesky::identity(3).inverse().dense(),
                      Matrix::Identity(3, 3)) < 1e-15);
  Vector diag(2);
  diag << 2, 4;
  const Matrix inv = SpdCholesky::from_diagonal(diag).inverse().dense();
  CHECK(inv(0, 0) == doctest::Approx(0.5));
  CHECK(inv(1, 1) == doctest::Approx(0.25));

  Matrix a(2, 2);
  a << 4, 2, 2, 5;
  Matrix expect(2, 2);
  expect << 5, -2, -2, 4;
  expect /= 16.0;
  CHECK(test::rel_fro(SpdCholesky::from_dense(a).inverse().dense(), expect) <
        1e-14);
}

TEST_CASE("random properties: solve, modify round trip, invert round trip") {
  Rng rng(20240811);
  for (int n : {5, 40, 200}) {
    const SpdCholesky a = test::random_spd(rng, n);
    const Matrix ad = a.dense();

    const Vector b = rng.gaussian_vector(n);
    CHECK((ad * a.solve(b) - b).norm() <= 1e-8 * b.norm());

    const Vector w = rng.gaussian_vector(n, 0.5);
    const SpdCholesky round = a.rank_one_update(w).rank_one_downdate(w);
    CHECK((round.dense() - ad).norm() <= 1e-8 * ad.norm());

    const SpdCholesky twice = a.inverse().inverse();
    CHECK(test::rel_fro(twice.dense(), ad) < 1e-8);

    // refactorizing the reconstruction preserves logdet
    const SpdCholesky re = SpdCholesky::from_dense(ad);
    CHECK(std::abs(re.logdet() - a.logdet()) <= 1e-10);
  }
}

TEST_CASE("csv round trip") {
  Rng rng(7);
  const SpdCholesky a = test::random_spd(rng, 6);
  const std::string path = "spd_roundtrip_test.csv";
  write_csv(a, path);
  const Matrix back = read_dense_csv(path);
  CHECK(test::rel_fro(back, a.dense()) < 1e-15);
  std::remove(path.c_str());
}
