#include <catch2/catch.hpp>

#include <cmath>

#include "spenc/scaling.hpp"
#include "spenc/synthetic.hpp"

using spenc::CountMatrix;

namespace {

CountMatrix from_dense(std::initializer_list<std::initializer_list<long>> rows) {
  const long R = static_cast<long>(rows.size());
  const long C = static_cast<long>(rows.begin()->size());
  CountMatrix m(R, C);
  long r = 0;
  for (const auto& row : rows) {
    long c = 0;
    for (long v : row) m.add(r, c++, v);
    ++r;
  }
  m.compress();
  return m;
}

}  // namespace

TEST_CASE("item means are clamped column means") {
  const auto m = from_dense({{0, 2}, {2, 4}});
  const auto eta = spenc::compute_item_means(m);
  CHECK(eta.eta[0] == Approx(1.0));
  CHECK(eta.eta[1] == Approx(3.0));

  const auto zero_col = from_dense({{0, 1}, {0, 1}});
  const auto eta2 = spenc::compute_item_means(zero_col);
  CHECK(eta2.eta[0] == spenc::kEtaFloor);

  const auto single = from_dense({{5}});
  CHECK(spenc::compute_item_means(single).eta[0] == Approx(5.0));
}

TEST_CASE("user scales") {
  const auto m = from_dense({{1, 1}, {3, 3}});
  const auto unit = spenc::compute_user_scales(m, spenc::XiMode::unit);
  CHECK(unit.xi[0] == 1.0);
  CHECK(unit.xi[1] == 1.0);

  const auto od = spenc::compute_user_scales(m, spenc::XiMode::overdispersed);
  CHECK(od.xi[0] == Approx(0.5));
  CHECK(od.xi[1] == Approx(1.5));
  CHECK(od.xi.mean() == Approx(1.0));

  CountMatrix zeros(3, 2);
  zeros.compress();
  CHECK_THROWS_AS(
      spenc::compute_user_scales(zeros, spenc::XiMode::overdispersed),
      spenc::ValidationError);
}

TEST_CASE("poisson noise generator") {
  const auto data = spenc::gen_poisson_noise(200, 30, 1.0, 7);
  CHECK(data.counts.rows() == 200);
  CHECK(data.counts.cols() == 30);
  CHECK(data.truth.structured_items.empty());

  // Vanishing rate: zero matrix with overwhelming probability.
  const auto tiny = spenc::gen_poisson_noise(100, 100, 1e-9, 3);
  CHECK(tiny.counts.total_sum() == 0);

  // CLT bound on the grand mean at rate 1.
  const long U = 5000, I = 30;
  const auto big = spenc::gen_poisson_noise(U, I, 1.0, 11);
  const double mean = static_cast<double>(big.counts.total_sum()) /
                      static_cast<double>(U * I);
  CHECK(std::abs(mean - 1.0) <
        3.0 / std::sqrt(static_cast<double>(U * I)));

  // Column means concentrate too.
  const auto eta = spenc::compute_item_means(big.counts);
  for (long i = 0; i < I; ++i) {
    CHECK(std::abs(eta.eta[i] - 1.0) <
          5.0 / std::sqrt(static_cast<double>(U)));
  }
}

TEST_CASE("generators are deterministic given seed") {
  const auto a = spenc::gen_poisson_noise(64, 9, 1.0, 5);
  const auto b = spenc::gen_poisson_noise(64, 9, 1.0, 5);
  CHECK(a.counts == b.counts);
  const auto c = spenc::gen_linear_factor(64, 9, 5);
  const auto d = spenc::gen_linear_factor(64, 9, 5);
  CHECK(c.counts == d.counts);
  CHECK((c.truth.true_decoder - d.truth.true_decoder).norm() == 0.0);
  const auto e = spenc::gen_nonlinear_factor(64, 9, 5);
  const auto f = spenc::gen_nonlinear_factor(64, 9, 5);
  CHECK(e.counts == f.counts);
  const auto g = spenc::gen_poisson_noise(64, 9, 1.0, 6);
  CHECK_FALSE(a.counts == g.counts);
}

TEST_CASE("structured generators mark every third item") {
  const auto data = spenc::gen_linear_factor(50, 30, 1);
  REQUIRE(data.truth.structured_items.size() == 10);
  CHECK(data.truth.structured_items.front() == 2);
  CHECK(data.truth.structured_items.back() == 29);
  for (std::size_t j = 1; j < data.truth.structured_items.size(); ++j) {
    CHECK(data.truth.structured_items[j] -
              data.truth.structured_items[j - 1] ==
          3);
  }
  CHECK(data.truth.true_decoder.rows() == 10);
  CHECK(data.truth.true_decoder.cols() == 30);
  CHECK(data.truth.true_representations.rows() == 50);
  CHECK((data.truth.true_decoder.array() >= 0.0).all());

  const auto small = spenc::gen_linear_factor(10, 3, 1);
  CHECK(small.truth.structured_items ==
        std::vector<long>{2});

  CHECK_THROWS_AS(spenc::gen_linear_factor(10, 2, 1),
                  spenc::ValidationError);
}

TEST_CASE("noise columns of the linear mixture stay near rate 1") {
  const long U = 5000;
  const auto data = spenc::gen_linear_factor(U, 30, 9);
  double noise_sum = 0;
  long noise_cols = 0;
  std::vector<char> structured(30, 0);
  for (long i : data.truth.structured_items) structured[i] = 1;
  const auto eta = spenc::compute_item_means(data.counts);
  for (long i = 0; i < 30; ++i) {
    if (!structured[i]) {
      noise_sum += eta.eta[i];
      ++noise_cols;
    }
  }
  CHECK(noise_cols == 20);
  const double grand = noise_sum / static_cast<double>(noise_cols);
  CHECK(std::abs(grand - 1.0) <
        3.0 / std::sqrt(static_cast<double>(U * noise_cols)));
}

TEST_CASE("nonlinear bend rate curve") {
  CHECK(spenc::nonlinear_bend(0.0) == 0.0);
  CHECK(spenc::nonlinear_bend(1.0) == Approx(std::exp(-1.0) + 1.0));
  // monotone increase over a grid
  double prev = 0.0;
  for (double z = 0.1; z < 5.0; z += 0.1) {
    const double v = spenc::nonlinear_bend(z);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("all generated counts are non-negative with the right truth size") {
  for (long I : {3L, 7L, 30L}) {
    const auto lin = spenc::gen_linear_factor(40, I, 2);
    CHECK(static_cast<long>(lin.truth.structured_items.size()) == I / 3);
    const auto non = spenc::gen_nonlinear_factor(40, I, 2);
    CHECK(static_cast<long>(non.truth.structured_items.size()) == I / 3);
  }
}

TEST_CASE("full-scale noise matrix has the requested shape") {
  const auto data = spenc::gen_poisson_noise(50000, 30, 1.0, 1);
  CHECK(data.counts.rows() == 50000);
  CHECK(data.counts.cols() == 30);
  const double mean = static_cast<double>(data.counts.total_sum()) /
                      static_cast<double>(50000 * 30);
  CHECK(std::abs(mean - 1.0) < 3.0 / std::sqrt(50000.0 * 30.0));
}
