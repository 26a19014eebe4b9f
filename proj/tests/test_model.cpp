#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "zesrec/baselines.hpp"
#include "zesrec/checkpoint.hpp"
#include "zesrec/inference.hpp"
#include "zesrec/model.hpp"

using namespace zesrec;

TEST_CASE("softmax examples") {
  const Vector uniform = softmax(Vector::Zero(4));
  for (int j = 0; j < 4; ++j) CHECK(uniform(j) == doctest::Approx(0.25).epsilon(1e-15));

  Vector l(2);
  l << std::log(2.0), 0.0;
  const Vector p = softmax(l);
  CHECK(p(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const Vector shifted = softmax((l.array() + 1234.5).matrix());
  CHECK((shifted - p).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("softmax is a distribution for extreme logits") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 200.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector l(1 + static_cast<Eigen::Index>(rng() % 50));
    for (Eigen::Index i = 0; i < l.size(); ++i) l(i) = g(rng);
    const Vector p = softmax(l);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-6);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() <= 1.0);
  }
}

TEST_CASE("loss of one event over two equal candidates is ln 2") {
  EncoderConfig enc;
  enc.dim = 3;
  ModelParams p = make_zesrec(2, 2, enc, Hyper{0, 0}, 1);
  // A zero adapter makes every user and item vector zero.
  p.item_uen.weight.setZero();
  p.item_uen.bias.setZero();
  const Matrix content = Matrix::Random(2, 2);
  const std::vector<std::vector<ItemIndex>> seqs = {{1}};
  const auto r = loss_and_gradient(p, &content, seqs);
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(r.num_targets == 1);
}

TEST_CASE("item penalty is zero with zero offsets and counts batch items only") {
  auto toy = fixtures::make_toy(EncoderKind::kGru, 5);
  toy.params.item_offsets.setZero();
  CHECK(loss_and_gradient(toy.params, &toy.content, toy.sequences).item_penalty == 0.0);

  toy.params.item_offsets.setConstant(1.0);
  const std::vector<std::vector<ItemIndex>> only_one = {{2}};
  const auto r = loss_and_gradient(toy.params, &toy.content, only_one);
  CHECK(r.item_penalty == doctest::Approx(toy.params.hyper.lambda_v / 2 * toy.params.dim()).epsilon(1e-12));
}

TEST_CASE("empty batch is an error") {
  auto toy = fixtures::make_toy(EncoderKind::kGru, 5);
  CHECK_THROWS_AS(loss_and_gradient(toy.params, &toy.content, std::vector<std::vector<ItemIndex>>{}), Error);
}

TEST_CASE("full gradient check at D = 8, J = 5") {
  for (auto kind : {EncoderKind::kGru, EncoderKind::kTcn}) {
    auto toy = fixtures::make_toy(kind, 19);
    const auto gc = oracle::check_model_gradient(toy.params, &toy.content, toy.sequences, nullptr);
    INFO("worst " << gc.worst);
    CHECK(gc.max_rel_err < 1e-4);
  }
}

TEST_CASE("gradient check with free user offsets") {
  auto toy = fixtures::make_toy(EncoderKind::kGru, 29);
  std::mt19937_64 rng(1);
  std::vector<Matrix> xi;
  for (const auto& s : toy.sequences) {
    xi.push_back(Matrix::Zero(static_cast<Eigen::Index>(s.size()), toy.params.dim()));
    oracle::randomize({{"xi", xi.back().data(), xi.back().rows(), xi.back().cols()}}, 0.3, rng);
  }
  const auto r = loss_and_gradient(toy.params, &toy.content, toy.sequences, &xi);
  CHECK(r.user_penalty > 0);
  const auto gc = oracle::check_model_gradient(toy.params, &toy.content, toy.sequences, &xi);
  INFO("worst " << gc.worst);
  CHECK(gc.max_rel_err < 1e-4);
}

TEST_CASE("gradient check for ID and meta models") {
  const Matrix content = Matrix::Random(5, 6);
  const std::vector<std::vector<ItemIndex>> seqs = {{0, 1, 2}, {3, 1, 4, 0}, {4}};
  std::mt19937_64 rng(2);
  for (bool meta : {false, true}) {
    EncoderConfig enc;
    enc.dim = 8;
    ModelParams p = make_id_model(5, 6, meta, enc, 3);
    oracle::randomize(tensors(p), 0.5, rng);
    const auto gc = oracle::check_model_gradient(p, meta ? &content : nullptr, seqs, nullptr);
    INFO("meta " << meta << " worst " << gc.worst);
    CHECK(gc.max_rel_err < 1e-4);
  }
}

TEST_CASE("loss is nonnegative") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto toy = fixtures::make_toy(s % 2 ? EncoderKind::kTcn : EncoderKind::kGru, s);
    const auto r = loss_and_gradient(toy.params, &toy.content, toy.sequences);
    CHECK(r.loss >= 0.0);
    CHECK(r.nll >= 0.0);
  }
}

namespace {

TrainingData memorization_data(const Matrix& content) {
  TrainingData d;
  d.content = content;
  d.train = training_sequences(fixtures::cyclic_log(20, 10, 8), 50);
  return d;
}

}  // namespace

TEST_CASE("training loss strictly decreases on a memorization corpus") {
  std::mt19937_64 rng(8);
  const Matrix content = Matrix::Random(10, 12);
  EncoderConfig enc;
  enc.dim = 16;
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.optimizer.learning_rate = 0.01;
  const auto res = train(make_zesrec(12, 10, enc, Hyper{}, 1), memorization_data(content), cfg);
  REQUIRE(res.epochs.size() == 5);
  for (std::size_t e = 1; e < 5; ++e) CHECK(res.epochs[e].loss < res.epochs[e - 1].loss);
}

TEST_CASE("same seed gives bit-identical trajectories") {
  const Matrix content = Matrix::Random(10, 12);
  EncoderConfig enc;
  enc.dim = 8;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 3;
  cfg.seed = 99;
  const auto data = memorization_data(content);
  const auto a = train(make_zesrec(12, 10, enc, Hyper{}, 99), data, cfg);
  const auto b = train(make_zesrec(12, 10, enc, Hyper{}, 99), data, cfg);
  for (std::size_t e = 0; e < 3; ++e) CHECK(a.epochs[e].loss == b.epochs[e].loss);
  std::ostringstream ca(std::ios::binary), cb(std::ios::binary);
  write_checkpoint(a.params, ca);
  write_checkpoint(b.params, cb);
  CHECK(ca.str() == cb.str());
}

TEST_CASE("stronger item regularization shrinks the offsets") {
  const Matrix content = Matrix::Random(10, 12);
  EncoderConfig enc;
  enc.dim = 8;
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 4;
  cfg.optimizer.learning_rate = 0.01;
  const auto data = memorization_data(content);
  auto max_offset = [&](double lambda_v) {
    const auto r = train(make_zesrec(12, 10, enc, Hyper{1.0, lambda_v}, 4), data, cfg);
    return r.params.item_offsets.rowwise().norm().maxCoeff();
  };
  CHECK(max_offset(1e4) < max_offset(1e-2));
}

TEST_CASE("ID model memorizes deterministic transitions") {
  const auto log = fixtures::cyclic_log(20, 10, 8);
  const auto table = fixtures::random_table(10, 6, 1);
  EncoderConfig enc;
  enc.dim = 16;
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 4;
  cfg.optimizer.learning_rate = 0.02;
  const auto res = train_id_model(log, InteractionLog{}, table, cfg, enc, false);
  const auto rec = in_domain_recommender(res.params, table, 50);
  // Score every position after the first: the next item is fully determined.
  std::size_t hits = 0, total = 0;
  std::vector<double> scores(10);
  for (const auto& u : log.users) {
    for (std::size_t t = 1; t < u.items.size(); ++t) {
      rec->score(std::span(u.items).first(t), scores);
      hits += top_k_indices(scores, 1).front() == u.items[t];
      ++total;
    }
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(total) > 0.9);
}

TEST_CASE("meta model with an identity adapter keeps content rows as item vectors") {
  EncoderConfig enc;
  enc.dim = 6;
  ModelParams p = make_id_model(4, 6, true, enc, 0);
  p.item_uen.weight = Matrix::Identity(6, 6);
  p.item_uen.bias.setZero();
  const Matrix content = Matrix::Random(4, 6);
  CHECK(item_vectors(p, &content, false) == content);
}

TEST_CASE("checkpoint round trip and corruption") {
  for (auto kind : {EncoderKind::kGru, EncoderKind::kTcn}) {
    auto toy = fixtures::make_toy(kind, 2);
    std::ostringstream out(std::ios::binary);
    write_checkpoint(toy.params, out);
    std::istringstream in(out.str(), std::ios::binary);
    auto back = read_checkpoint(in);
    auto a = tensors(toy.params), b = tensors(back);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].name == b[i].name);
      CHECK(std::equal(a[i].data, a[i].data + a[i].size(), b[i].data));
    }
    CHECK(back.hyper.lambda_v == toy.params.hyper.lambda_v);
    std::istringstream cut(out.str().substr(0, out.str().size() / 2), std::ios::binary);
    CHECK_THROWS_AS(read_checkpoint(cut), CheckpointError);
  }
}
