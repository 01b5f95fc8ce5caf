#include <doctest.h>

#include "helpers.hpp"
#include "idscope/spectral.hpp"
#include "idscope/synth.hpp"

using namespace idscope;

TEST_CASE("entropy of explicit spectra") {
  const std::vector<double> flat(8, 3.0);
  CHECK(spectral_entropy(flat) == doctest::Approx(std::log(8.0)).epsilon(1e-15));
  const std::vector<double> spike{5.0, 0.0, 0.0};
  CHECK(spectral_entropy(spike) == 0.0);
  const std::vector<double> two{1.0, 3.0};
  CHECK(spectral_entropy(two) == doctest::Approx(-(0.25 * std::log(0.25) + 0.75 * std::log(0.75))));
  CHECK(spectral_entropy(std::vector<double>{}) == 0.0);
}

TEST_CASE("gram and singular-value routes agree") {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const PointCloud z = testing::gaussian_cloud(100, 50, s);
    for (bool center : {true, false}) {
      const auto a = von_neumann_entropy(z, center, SpectrumRoute::SingularValues);
      const auto b = von_neumann_entropy(z, center, SpectrumRoute::Gram);
      CHECK(std::abs(a.entropy - b.entropy) <= 1e-8);
      CHECK(std::abs(a.effective_rank - b.effective_rank) <= 1e-8);
      CHECK(a.rank == b.rank);
    }
  }
}

TEST_CASE("bounds: 0 <= S <= log rank") {
  for (std::size_t cols : {3, 20, 80}) {
    const auto s = von_neumann_entropy(testing::gaussian_cloud(60, cols, cols));
    CHECK(s.entropy >= 0.0);
    CHECK(s.entropy <= std::log(static_cast<double>(s.rank)) + 1e-12);
    CHECK(s.rank == std::min<std::size_t>(59, cols));  // centering costs one dimension
    CHECK(s.effective_rank >= 1.0);
    CHECK(s.effective_rank <= static_cast<double>(s.rank) + 1e-9);
  }
}

TEST_CASE("orthonormal rows have maximal entropy") {
  const Matrix q = random_orthogonal(64, 1);
  for (Eigen::Index n : {1, 7, 40, 64}) {
    const auto s = von_neumann_entropy(PointCloud(Matrix(q.topRows(n))), false);
    CHECK(std::abs(s.entropy - std::log(static_cast<double>(n))) <= 1e-9);
    CHECK(s.effective_rank == doctest::Approx(static_cast<double>(n)).epsilon(1e-9));
  }
}

TEST_CASE("invariances") {
  const PointCloud z = testing::gaussian_cloud(80, 30, 3);
  const auto base = von_neumann_entropy(z);

  const PointCloud rotated(Matrix(z.data() * random_orthogonal(30, 4)));
  CHECK(std::abs(von_neumann_entropy(rotated).entropy - base.entropy) <= 1e-6);
  CHECK(std::abs(von_neumann_entropy(rotated).effective_rank - base.effective_rank) <= 1e-6);

  for (double c : {1e-3, -2.0, 1e4}) {
    CHECK(std::abs(von_neumann_entropy(PointCloud(Matrix(z.data() * c))).entropy - base.entropy) <= 1e-9);
  }

  Matrix shuffled = z.data();
  std::mt19937_64 g(5);
  for (Eigen::Index i = shuffled.rows() - 1; i > 0; --i) {
    std::uniform_int_distribution<Eigen::Index> pick(0, i);
    shuffled.row(i).swap(shuffled.row(pick(g)));
  }
  CHECK(std::abs(von_neumann_entropy(PointCloud(shuffled)).entropy - base.entropy) <= 1e-9);

  // Centering removes any common translation.
  Matrix moved = z.data();
  moved.rowwise() += Eigen::RowVectorXd::Constant(30, 7.0);
  CHECK(std::abs(von_neumann_entropy(PointCloud(moved)).entropy - base.entropy) <= 1e-9);
}

TEST_CASE("degenerate data") {
  const auto zero = von_neumann_entropy(PointCloud(Matrix::Ones(10, 4)));
  CHECK(zero.all_zero);
  CHECK(zero.entropy == 0.0);
  CHECK(zero.rank == 0);

  Matrix line(10, 3);
  for (Eigen::Index i = 0; i < 10; ++i) line.row(i) << i, 2.0 * i, -1.0 * i;
  const auto one = von_neumann_entropy(PointCloud(line));
  CHECK(one.rank == 1);
  CHECK(one.entropy == 0.0);
  CHECK(one.effective_rank == 1.0);
}

TEST_CASE("spectrum is the descending, cut-off list of Gram eigenvalues") {
  Matrix z = Matrix::Zero(3, 3);
  z.diagonal() << 1.0, 3.0, 1e-9;
  const Eigen::VectorXd lambda = gram_spectrum(PointCloud(z), false);
  REQUIRE(lambda.size() == 2);  // 1e-18 falls below 1e-12 * 9
  CHECK(lambda[0] == doctest::Approx(9.0));
  CHECK(lambda[1] == doctest::Approx(1.0));
}
