#include "doctest.h"
#include "mscnn/tensor.hpp"

using namespace mscnn;

TEST_SUITE("tensor") {
  TEST_CASE("row-major offsets") {
    Tensor<float> t({2, 3, 4, 5});
    CHECK(t.size() == 120);
    CHECK(t.offset(0, 0, 0, 0) == 0);
    CHECK(t.offset(1, 2, 3, 4) == 119);
    CHECK(t.offset(1, 0, 0, 0) == 60);
    CHECK(t.offset(0, 1, 2, 3) == 20 + 10 + 3);
    t(1, 2, 3, 4) = 7.0f;
    CHECK(t[119] == 7.0f);
  }

  TEST_CASE("bounds and arity are checked") {
    Tensor<double> t({2, 2});
    CHECK_THROWS_AS(t(2, 0), ShapeError);
    CHECK_THROWS_AS(t(0, -1), ShapeError);
    CHECK_THROWS_AS(t(0, 0, 0), ShapeError);
    CHECK_THROWS_AS(Tensor<double>(Shape{}), ShapeError);
    CHECK_THROWS_AS(Tensor<double>({1, 2, 3, 4, 5}), ShapeError);
    CHECK_THROWS_AS(Tensor<double>({3, 0}), ShapeError);
    CHECK_THROWS_AS(Tensor<double>({2}, {1.0, 2.0, 3.0}), ShapeError);
  }

  TEST_CASE("reshape keeps data") {
    Tensor<float> t({2, 3}, {1, 2, 3, 4, 5, 6});
    auto r = t.reshaped({3, 2});
    CHECK(r(2, 1) == 6.0f);
    CHECK(r(1, 0) == 3.0f);
    CHECK_THROWS_AS(t.reshape({4, 2}), ShapeError);
  }

  TEST_CASE("elementwise and reductions") {
    Tensor<double> a({2, 2}, {1, 2, 3, 4});
    Tensor<double> b({2, 2}, {4, 3, 2, 1});
    CHECK((a + b) == Tensor<double>({2, 2}, 5.0));
    CHECK((a - b) == Tensor<double>({2, 2}, {-3, -1, 1, 3}));
    CHECK(hadamard(a, b) == Tensor<double>({2, 2}, {4, 6, 6, 4}));
    CHECK(sum(a) == 10.0);
    CHECK(mean(a) == 2.5);
    CHECK(max(b) == 4.0);
    CHECK_THROWS_AS(a + Tensor<double>({4}), ShapeError);
    CHECK_THROWS_AS(sum(Tensor<double>()), ShapeError);
  }

  TEST_CASE("matrix views alias storage") {
    Tensor<float> t({2, 2, 3});
    auto m = t.matrix(2, 3, 6);
    m(1, 2) = 9.0f;
    CHECK(t(1, 1, 2) == 9.0f);
    CHECK_THROWS_AS(t.matrix(2, 4, 6), ShapeError);
  }

  TEST_CASE("cast round trip") {
    Tensor<double> d({3}, {0.5, -1.25, 3.0});
    CHECK(d.cast<float>().cast<double>() == d);
  }
}
