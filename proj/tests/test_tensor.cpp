#include <doctest.h>

#include <limits>

#include "dwsnn/error.hpp"
#include "dwsnn/graph.hpp"
#include "dwsnn/tensor.hpp"

using namespace dwsnn;

TEST_CASE("matmul identity") {
  Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
  Tensor out = matmul(eye, a);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == a[i]);
}

TEST_CASE("matmul hand arithmetic") {
  Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
  Tensor b = Tensor::matrix(2, 1, {5, 6});
  Tensor out = matmul(a, b);
  CHECK(out[0] == doctest::Approx(17));
  CHECK(out[1] == doctest::Approx(39));
}

TEST_CASE("matmul shape mismatch throws") {
  Tensor a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::matrix(2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(matmul(a, b), Error);
}

TEST_CASE("matmul backward with upstream ones gives column sums for grad_B") {
  Graph g;
  NodeId a = g.leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}), true);
  NodeId b = g.leaf(Tensor::matrix(2, 1, {5, 6}), true);
  NodeId c = g.matmul(a, b);
  NodeId loss = g.sum(c);  // upstream gradient of ones
  g.backward(loss);
  Tensor gb = g.grad(b);
  CHECK(gb[0] == doctest::Approx(4));  // column sums of A
  CHECK(gb[1] == doctest::Approx(6));
  Tensor ga = g.grad(a);
  CHECK(ga[0] == doctest::Approx(5));
  CHECK(ga[1] == doctest::Approx(6));
  CHECK(ga[2] == doctest::Approx(5));
  CHECK(ga[3] == doctest::Approx(6));
}

TEST_CASE("tensor finiteness check") {
  Tensor t = Tensor::row({1.0, 2.0});
  CHECK(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(t.all_finite());
}
