#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "zesrec/inference.hpp"
#include "zesrec/model.hpp"

using namespace zesrec;

namespace {

EmbeddingTable table_from(const Matrix& content, const std::string& prefix) {
  EmbeddingTable t;
  t.dim = static_cast<std::uint32_t>(content.cols());
  for (Eigen::Index j = 0; j < content.rows(); ++j) t.item_ids.push_back(prefix + std::to_string(j));
  for (Eigen::Index j = 0; j < content.rows(); ++j) {
    for (Eigen::Index k = 0; k < content.cols(); ++k) t.rows.push_back(static_cast<float>(content(j, k)));
  }
  return t;
}

ModelParams identity_model(Eigen::Index d, std::size_t items) {
  EncoderConfig enc;
  enc.dim = static_cast<int>(d);
  ModelParams p = make_zesrec(d, items, enc, Hyper{}, 0);
  p.item_uen.weight = Matrix::Identity(d, d);
  p.item_uen.bias.setZero();
  return p;
}

}  // namespace

TEST_CASE("identity adapter gives raw rows, in catalog order") {
  const auto t = fixtures::random_table(7, 4, 3);
  const auto idx = build_target_index(t, identity_model(4, 2));
  CHECK(idx.latent.vectors.rows() == 7);
  CHECK(idx.catalog.ids() == t.item_ids);
  CHECK(idx.latent.vectors == t.as_matrix());
}

TEST_CASE("dimension mismatch is rejected") {
  const auto t = fixtures::random_table(3, 5, 3);
  CHECK_THROWS_AS(build_target_index(t, identity_model(4, 2)), ShapeError);
}

TEST_CASE("source rows through the deployment path equal training vectors with zero offsets") {
  auto toy = fixtures::make_toy(EncoderKind::kGru, 4);
  toy.params.item_offsets.setZero();
  const Matrix train_vectors = item_vectors(toy.params, &toy.content, true);
  CHECK(build_item_index(toy.params, &toy.content).vectors == train_vectors);
}

TEST_CASE("empty history still gets a ranking") {
  auto toy = fixtures::make_toy(EncoderKind::kGru, 4);
  const auto t = table_from(toy.content, "t");
  const auto idx = build_target_index(t, toy.params);
  const auto list = recommend_top_k({}, idx, toy.params, {3, false, 50});
  CHECK(list.items.size() == 3);
  CHECK(user_embedding(toy.params, idx.latent, {}, 50).allFinite());
}

TEST_CASE("k = J returns a permutation and never a dummy") {
  auto toy = fixtures::make_toy(EncoderKind::kTcn, 6);
  const auto t = table_from(toy.content, "t");
  const auto idx = build_target_index(t, toy.params);
  const auto list = recommend_top_k({"t1", "t3"}, idx, toy.params, {5, false, 50});
  std::set<std::string> seen(list.items.begin(), list.items.end());
  CHECK(seen == std::set<std::string>(t.item_ids.begin(), t.item_ids.end()));
  CHECK(std::is_sorted(list.scores.rbegin(), list.scores.rend()));
  CHECK_THROWS_WITH_AS(recommend_top_k({"nope"}, idx, toy.params), "unknown item id: nope", Error);
}

TEST_CASE("two-item ranking by inner product with index tie break") {
  const std::vector<double> scores = {1.0, 0.5};
  CHECK(top_k_indices(scores, 2) == std::vector<ItemIndex>{0, 1});
  const std::vector<double> tied = {0.5, 1.0, 0.5, 1.0};
  CHECK(top_k_indices(tied, 4) == std::vector<ItemIndex>{1, 3, 0, 2});
  const std::vector<bool> skip = {false, true, false, false};
  CHECK(top_k_indices(tied, 2, &skip) == std::vector<ItemIndex>{3, 0});

  Matrix v(2, 2);
  v << 1, 0, 0, 1;
  Vector u(2);
  u << 1, 0.5;
  const Vector s = inner_products(u, v);
  CHECK(top_k_indices(std::vector<double>(s.data(), s.data() + 2), 2) == std::vector<ItemIndex>{0, 1});
}

TEST_CASE("ranking is invariant to positive rescaling of the user") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> c(1e-3, 1e3);
  const Matrix items = Matrix::Random(50, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector u = Vector::Random(6);
    const Vector s1 = inner_products(u, items);
    const Vector s2 = inner_products(Vector(c(rng) * u), items);
    CHECK(top_k_indices(std::vector<double>(s1.data(), s1.data() + 50), 20) ==
          top_k_indices(std::vector<double>(s2.data(), s2.data() + 50), 20));
  }
}

TEST_CASE("exclude_seen drops history items") {
  auto toy = fixtures::make_toy(EncoderKind::kGru, 8);
  const auto idx = build_target_index(table_from(toy.content, "t"), toy.params);
  const auto list = recommend_top_k({"t0", "t2"}, idx, toy.params, {5, true, 50});
  CHECK(list.items.size() == 3);
  CHECK(std::find(list.items.begin(), list.items.end(), "t0") == list.items.end());
}

TEST_CASE("determinism and JSON line format") {
  auto toy = fixtures::make_toy(EncoderKind::kGru, 9);
  const auto idx = build_target_index(table_from(toy.content, "t"), toy.params);
  const auto a = recommend_top_k({"t4", "t1"}, idx, toy.params, {2, false, 50});
  const auto b = recommend_top_k({"t4", "t1"}, idx, toy.params, {2, false, 50});
  CHECK(a.items == b.items);
  CHECK(a.scores == b.scores);
  const auto line = to_json_line("u\"1", a);
  CHECK(line.find("\"user_id\":\"u\\\"1\"") != std::string::npos);
  CHECK(line.find("\"items\":[") != std::string::npos);
  CHECK(line.find("\"scores\":[") != std::string::npos);
}
