#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "zesrec/encoders.hpp"

using namespace zesrec;

namespace {

GruParams zero_gru(Eigen::Index d) {
  std::mt19937_64 rng(0);
  EncoderConfig c;
  c.dim = static_cast<int>(d);
  auto p = std::get<GruParams>(init_encoder(c, rng));
  return std::get<GruParams>(zeros_like(EncoderParams{p}));
}

EncoderParams random_encoder(EncoderKind kind, Eigen::Index d, std::uint64_t seed, double scale = 0.6) {
  std::mt19937_64 rng(seed);
  EncoderConfig c;
  c.kind = kind;
  c.dim = static_cast<int>(d);
  EncoderParams p = init_encoder(c, rng);
  std::vector<TensorRef> ts;
  append_tensors(p, "enc", ts);
  oracle::randomize(ts, scale, rng);
  return p;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

}  // namespace

TEST_CASE("item UEN examples") {
  ItemUenParams p{Matrix::Identity(3, 3), Vector::Zero(3)};
  Vector e(3);
  e << 1, -2, 0.5;
  CHECK(item_uen_forward(e, p) == e);

  Vector c(2);
  c << 0.25, -4;
  ItemUenParams z{Matrix::Zero(2, 3), c};
  CHECK(item_uen_forward(e, z) == c);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    ItemUenParams r{random_matrix(7, 5, rng), random_matrix(7, 1, rng).col(0)};
    const Vector x = random_matrix(5, 1, rng).col(0);
    const auto want = oracle::matvec(r.weight, x, r.bias);
    const Vector got = item_uen_forward(x, r);
    for (int i = 0; i < 7; ++i) CHECK(got(i) == doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-6));
  }
  CHECK_THROWS_AS(item_uen_forward(Vector::Zero(4), p), ShapeError);
}

TEST_CASE("GRU step hand-evaluated examples") {
  const auto p = zero_gru(2);
  Vector h(2);
  h << 1, -1;
  const Vector out = gru_step(h, Vector::Constant(2, 3.0), p);
  CHECK(out(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out(1) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(gru_step(Vector::Zero(2), Vector::Zero(2), p).isZero(0));
}

TEST_CASE("GRU step agrees with the scalar oracle") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = std::get<GruParams>(random_encoder(EncoderKind::kGru, 6, 100 + trial, 1.0));
    const Vector h = random_matrix(6, 1, rng, 0.5).col(0).array().tanh();
    const Vector v = random_matrix(6, 1, rng).col(0);
    const auto want = oracle::gru_step(std::vector<double>(h.data(), h.data() + 6), std::vector<double>(v.data(), v.data() + 6), p);
    const Vector got = gru_step(h, v, p);
    for (int i = 0; i < 6; ++i) CHECK(got(i) == doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-6));
  }
}

TEST_CASE("user UEN output shape and zero fixed point") {
  const EncoderParams p{zero_gru(3)};
  std::mt19937_64 rng(1);
  CHECK(encode(p, Matrix::Zero(1, 3)).isZero(0));
  const Matrix two = encode(p, random_matrix(2, 3, rng));
  CHECK(two.rows() == 2);
  CHECK(two.isZero(0));
  for (auto kind : {EncoderKind::kGru, EncoderKind::kTcn}) {
    const auto q = random_encoder(kind, 4, 7);
    CHECK(encode(q, random_matrix(9, 4, rng)).rows() == 9);
  }
}

TEST_CASE("GRU states stay within [-1, 1] from a zero start") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_encoder(EncoderKind::kGru, 5, 200 + trial, 3.0);
    const Matrix out = encode(p, random_matrix(40, 5, rng, 10.0));
    CHECK(out.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("causality: later inputs never change earlier outputs") {
  std::mt19937_64 rng(13);
  for (auto kind : {EncoderKind::kGru, EncoderKind::kTcn}) {
    const auto p = random_encoder(kind, 4, 21);
    const Matrix x = random_matrix(12, 4, rng);
    const Matrix base = encode(p, x);
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      Matrix y = x;
      y.row(t) += random_matrix(1, 4, rng, 3.0);
      const Matrix out = encode(p, y);
      CHECK(out.topRows(t) == base.topRows(t));
      if (kind == EncoderKind::kTcn) {
        // Beyond the receptive field the perturbation is invisible too.
        const int rf = std::get<TcnParams>(p).receptive_field();
        for (Eigen::Index tau = t + rf; tau < x.rows(); ++tau) CHECK(out.row(tau) == base.row(tau));
      }
    }
  }
}

TEST_CASE("TCN structure") {
  const auto p = std::get<TcnParams>(random_encoder(EncoderKind::kTcn, 4, 3));
  REQUIRE(p.layers.size() == 2);
  CHECK(p.layers[0].dilation == 1);
  CHECK(p.layers[1].dilation == 2);
  CHECK(p.layers[0].kernel() == 3);
  CHECK(p.receptive_field() == 1 + 2 * 1 + 2 * 2);
}

TEST_CASE("encoder backward matches finite differences") {
  std::mt19937_64 rng(23);
  for (auto kind : {EncoderKind::kGru, EncoderKind::kTcn}) {
    auto p = random_encoder(kind, 5, 31);
    Matrix x = random_matrix(7, 5, rng);
    const Matrix w = random_matrix(7, 5, rng);  // loss = sum(w .* encode(x))
    EncoderTrace trace;
    encode(p, x, &trace);
    EncoderParams grad = zeros_like(p);
    Matrix dx;
    encode_backward(p, trace, w, grad, dx);

    auto loss = [&] { return encode(p, x).cwiseProduct(w).sum(); };
    std::vector<TensorRef> ps, gs;
    append_tensors(p, "enc", ps);
    append_tensors(grad, "enc", gs);
    ps.push_back({"x", x.data(), x.rows(), x.cols()});
    gs.push_back({"dx", dx.data(), dx.rows(), dx.cols()});
    oracle::GradCheck gc;
    oracle::check_entries(ps, gs, loss, 1e-4, gc);
    INFO("worst entry " << gc.worst);
    CHECK(gc.max_rel_err < 1e-4);
  }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  std::mt19937_64 rng(5);
  for (auto kind : {EncoderKind::kGru, EncoderKind::kTcn}) {
    const auto p = random_encoder(kind, 4, 8);
    EncoderTrace trace;
    encode(p, random_matrix(6, 4, rng), &trace);
    EncoderParams grad = zeros_like(p);
    Matrix dx;
    encode_backward(p, trace, Matrix::Zero(6, 4), grad, dx);
    std::vector<TensorRef> gs;
    append_tensors(grad, "g", gs);
    for (const auto& g : gs) {
      for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(g.data[i] == 0.0);
    }
    CHECK(dx.isZero(0));
  }
}

TEST_CASE("item UEN bias gradient is the column sum of upstream gradients") {
  std::mt19937_64 rng(6);
  const Matrix x = random_matrix(9, 4, rng);
  const Matrix d = random_matrix(9, 3, rng);
  ItemUenParams grad{Matrix::Zero(3, 4), Vector::Zero(3)};
  item_uen_backward(x, d, grad);
  for (int i = 0; i < 3; ++i) {
    double s = 0;
    for (int r = 0; r < 9; ++r) s += d(r, i);
    CHECK(grad.bias(i) == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("initialization is bounded and seeded") {
  std::mt19937_64 a(77), b(77);
  EncoderConfig c;
  c.dim = 16;
  const auto pa = std::get<GruParams>(init_encoder(c, a));
  const auto pb = std::get<GruParams>(init_encoder(c, b));
  CHECK(pa.w_z == pb.w_z);
  CHECK(pa.w_z.cwiseAbs().maxCoeff() <= 1.0 / 4.0);
  CHECK(pa.b_h.isZero(0));
}
