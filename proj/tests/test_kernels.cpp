#include <doctest.h>

#include <random>

#include "gradcheck.hpp"
#include "raw/kernels.hpp"

using namespace raw;

TEST_SUITE("kernels") {

TEST_CASE("matmul identity and dot product") {
  const std::vector<float> eye = {1, 0, 0, 1};
  const std::vector<float> b = {3, 4, 5, 6};
  std::vector<float> c(4);
  nn::matmul(eye.data(), b.data(), c.data(), 2, 2, 2);
  CHECK(c == b);

  const std::vector<float> row = {1, 2};
  const std::vector<float> col = {3, 4};
  std::vector<float> dot(1);
  nn::matmul(row.data(), col.data(), dot.data(), 1, 2, 1);
  CHECK(dot[0] == 11.0f);
}

TEST_CASE("parallel drivers are bitwise-equal to the serial reference") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 8; ++trial) {
    std::uniform_int_distribution<int> dim(1, 40);
    const int m = dim(rng), k = dim(rng), n = dim(rng);
    const auto a = gradcheck::random_vec(rng, static_cast<size_t>(m) * k);
    const auto b = gradcheck::random_vec(rng, static_cast<size_t>(k) * n);
    const auto bt = gradcheck::random_vec(rng, static_cast<size_t>(n) * k);
    const auto at = gradcheck::random_vec(rng, static_cast<size_t>(k) * m);

    std::vector<float> c1(static_cast<size_t>(m) * n), c2(c1.size());
    nn::ref::matmul(a.data(), b.data(), c1.data(), m, k, n);
    nn::matmul(a.data(), b.data(), c2.data(), m, k, n);
    CHECK(c1 == c2);

    nn::ref::matmul_nt(a.data(), bt.data(), c1.data(), m, k, n);
    nn::matmul_nt(a.data(), bt.data(), c2.data(), m, k, n);
    CHECK(c1 == c2);

    nn::ref::matmul_tn(at.data(), b.data(), c1.data(), m, k, n);
    nn::matmul_tn(at.data(), b.data(), c2.data(), m, k, n);
    CHECK(c1 == c2);

    std::vector<float> g1(a.size()), g2(a.size());
    nn::ref::gelu(a.data(), g1.data(), static_cast<int64_t>(a.size()));
    nn::gelu_forward(a.data(), g2.data(), static_cast<int64_t>(a.size()));
    CHECK(g1 == g2);

    std::vector<float> s1(static_cast<size_t>(m) * k), s2(s1.size());
    nn::ref::softmax_rows(a.data(), s1.data(), m, k);
    nn::softmax_rows(a.data(), s2.data(), m, k);
    CHECK(s1 == s2);

    const auto gain = gradcheck::random_vec(rng, static_cast<size_t>(k), 0.5f, 1.5f);
    const auto bias = gradcheck::random_vec(rng, static_cast<size_t>(k));
    std::vector<float> l1(a.size()), l2(a.size());
    nn::ref::layer_norm_rows(a.data(), gain.data(), bias.data(), l1.data(), m, k, 1e-5f,
                             static_cast<float*>(nullptr), static_cast<float*>(nullptr));
    nn::layer_norm_rows(a.data(), gain.data(), bias.data(), l2.data(), m, k, 1e-5f, nullptr,
                        nullptr);
    CHECK(l1 == l2);
  }
}

TEST_CASE("accumulate flag adds instead of overwriting") {
  const std::vector<float> a = {1, 2, 3, 4};
  const std::vector<float> b = {1, 0, 0, 1};
  std::vector<float> c = {10, 10, 10, 10};
  nn::matmul(a.data(), b.data(), c.data(), 2, 2, 2, true);
  CHECK(c == std::vector<float>{11, 12, 13, 14});
}

TEST_CASE("float and double references agree to float precision") {
  std::mt19937_64 rng(3);
  const int m = 6, k = 9, n = 5;
  const auto a = gradcheck::random_vec(rng, static_cast<size_t>(m) * k);
  const auto b = gradcheck::random_vec(rng, static_cast<size_t>(k) * n);
  std::vector<float> cf(static_cast<size_t>(m) * n);
  nn::ref::matmul(a.data(), b.data(), cf.data(), m, k, n);
  std::vector<double> ad(a.begin(), a.end()), bd(b.begin(), b.end()), cd(cf.size());
  nn::ref::matmul(ad.data(), bd.data(), cd.data(), m, k, n);
  for (size_t i = 0; i < cf.size(); ++i) {
    CHECK(std::fabs(cf[i] - cd[i]) < 1e-5);
  }
}

}  // TEST_SUITE
