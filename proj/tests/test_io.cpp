#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "spenc/io.hpp"
#include "spenc/rng.hpp"

using spenc::CountMatrix;
using spenc::MatrixFormat;

namespace {

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

CountMatrix random_matrix(long rows, long cols, std::uint64_t seed) {
  CountMatrix m(rows, cols);
  spenc::CounterRng rng(seed, 0);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      const long v = rng.poisson(0.8);
      if (v > 0) m.add(r, c, v);
    }
  }
  // Anchor the bounds so triplet round-trips recover the dimensions.
  m.add(rows - 1, cols - 1, 1);
  m.compress();
  return m;
}

}  // namespace

TEST_CASE("dense csv transcription") {
  const auto path = temp_file("spenc_dense.csv");
  write_text(path, "0,2\n2,4\n");
  const CountMatrix m = spenc::load_matrix(path, MatrixFormat::csv_dense);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 2);
  CHECK(m.at(0, 0) == 0);
  CHECK(m.at(0, 1) == 2);
  CHECK(m.at(1, 0) == 2);
  CHECK(m.at(1, 1) == 4);
  CHECK(m.nnz() == 3);
}

TEST_CASE("empty file is a format error") {
  const auto path = temp_file("spenc_empty.csv");
  write_text(path, "");
  CHECK_THROWS_AS(spenc::load_matrix(path, MatrixFormat::csv_dense),
                  spenc::FormatError);
  CHECK_THROWS_AS(spenc::load_matrix(path, MatrixFormat::matrix_market),
                  spenc::FormatError);
  CHECK_THROWS_AS(spenc::load_matrix(path, MatrixFormat::csv_triplet),
                  spenc::FormatError);
}

TEST_CASE("negative and non-integer values are validation errors") {
  const auto path = temp_file("spenc_neg.triplet.csv");
  write_text(path, "row,col,count\n0,1,-1\n");
  CHECK_THROWS_AS(spenc::load_matrix(path, MatrixFormat::csv_triplet),
                  spenc::ValidationError);
  write_text(path, "row,col,count\n0,1,1.5\n");
  CHECK_THROWS_AS(spenc::load_matrix(path, MatrixFormat::csv_triplet),
                  spenc::ValidationError);
  const auto dense = temp_file("spenc_neg.csv");
  write_text(dense, "1,-3\n0,0\n");
  try {
    spenc::load_matrix(dense, MatrixFormat::csv_dense);
    FAIL("expected validation error");
  } catch (const spenc::ValidationError& e) {
    CHECK(std::string(e.what()).find("(0, 1)") != std::string::npos);
  }
}

TEST_CASE("garbage tokens are format errors naming the line") {
  const auto path = temp_file("spenc_bad.csv");
  write_text(path, "1,2\n3,zap\n");
  try {
    spenc::load_matrix(path, MatrixFormat::csv_dense);
    FAIL("expected format error");
  } catch (const spenc::FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("matrix market header is validated") {
  const auto path = temp_file("spenc_bad.mtx");
  write_text(path, "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
  CHECK_THROWS_AS(spenc::load_matrix(path, MatrixFormat::matrix_market),
                  spenc::FormatError);
  write_text(path,
             "%%MatrixMarket matrix coordinate integer general\n% note\n"
             "2 3 2\n1 2 5\n2 3 7\n");
  const CountMatrix m = spenc::load_matrix(path, MatrixFormat::matrix_market);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(0, 1) == 5);
  CHECK(m.at(1, 2) == 7);
}

TEST_CASE("matrix market entry count is checked") {
  const auto path = temp_file("spenc_count.mtx");
  write_text(path,
             "%%MatrixMarket matrix coordinate integer general\n2 2 3\n1 1 1\n");
  CHECK_THROWS_AS(spenc::load_matrix(path, MatrixFormat::matrix_market),
                  spenc::FormatError);
}

TEST_CASE("save/load round-trips each format") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const CountMatrix m = random_matrix(13, 7, seed);
    for (MatrixFormat fmt : {MatrixFormat::matrix_market,
                             MatrixFormat::csv_dense,
                             MatrixFormat::csv_triplet}) {
      const auto path = temp_file("spenc_rt_" + std::to_string(seed) +
                                  std::to_string(static_cast<int>(fmt)));
      spenc::save_matrix(m, path, fmt);
      const CountMatrix back = spenc::load_matrix(path, fmt);
      CHECK(back == m);
    }
  }
}

TEST_CASE("format inference from extension") {
  CHECK(spenc::infer_format("a/b/Y.mtx") == MatrixFormat::matrix_market);
  CHECK(spenc::infer_format("x.triplet.csv") == MatrixFormat::csv_triplet);
  CHECK(spenc::infer_format("x.csv") == MatrixFormat::csv_dense);
  CHECK_THROWS_AS(spenc::infer_format("x.dat"), spenc::FormatError);
}
