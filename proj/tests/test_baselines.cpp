#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "zesrec/baselines.hpp"
#include "zesrec/inference.hpp"

using namespace zesrec;

TEST_CASE("POP ranks by count with ties by id") {
  const ItemCatalog cat({"c", "a", "b"});
  std::vector<RawEvent> ev;
  for (int i = 0; i < 5; ++i) ev.push_back({"u" + std::to_string(i), 1, i});
  for (int i = 0; i < 2; ++i) ev.push_back({"v" + std::to_string(i), 2, i});
  for (int i = 0; i < 2; ++i) ev.push_back({"w" + std::to_string(i), 0, i});
  const auto model = build_pop_model(make_log(ev), cat);
  CHECK(pop_recommend(model, cat, 3).items == std::vector<std::string>{"a", "b", "c"});
  CHECK(pop_recommend(model, cat, 1).items == std::vector<std::string>{"a"});

  const PopRecommender rec(model);
  const std::vector<std::string> h1 = {"c"}, h2 = {"b", "a"};
  CHECK(recommend_with(rec, cat, h1).items == recommend_with(rec, cat, h2).items);
}

TEST_CASE("KNN user vector is the mean of raw rows") {
  EmbeddingTable t;
  t.dim = 2;
  t.item_ids = {"a", "b", "c"};
  t.rows = {1, 0, 0, 1, 0.6f, 0.8f};
  const KnnRecommender knn(t);
  const std::vector<ItemIndex> ab = {0, 1}, ba = {1, 0};
  const Vector mean = knn.user_vector(ab);
  CHECK(mean(0) == doctest::Approx(0.5));
  CHECK(mean(1) == doctest::Approx(0.5));
  CHECK(knn.user_vector(ba) == mean);
  CHECK(knn.user_vector({}).isZero(0));

  // Unit-norm rows: a single-item history ranks itself first.
  for (const auto& id : t.item_ids) CHECK(knn_recommend({id}, t, 1).items.front() == id);
  CHECK_THROWS(knn_recommend({"zz"}, t, 1));
}

TEST_CASE("random recommendations are distinct and seeded") {
  const ItemCatalog cat({"a", "b", "c", "d", "e"});
  const auto all = random_recommend(cat, 5, 3);
  CHECK(std::set<std::string>(all.items.begin(), all.items.end()).size() == 5);
  CHECK(random_recommend(cat, 5, 3).items == all.items);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto r = random_recommend(cat, 3, s);
    CHECK(std::set<std::string>(r.items.begin(), r.items.end()).size() == 3);
  }
  CHECK_THROWS(random_recommend(cat, 6, 0));
}

TEST_CASE("random permutations are close to uniform") {
  const ItemCatalog cat({"a", "b", "c"});
  std::map<std::string, int> first;
  const int n = 6000;
  for (int s = 0; s < n; ++s) ++first[random_recommend(cat, 3, static_cast<std::uint64_t>(s)).items.front()];
  // Binomial(6000, 1/3): sd ~ 36.5, allow 4 sd.
  for (const auto& [id, c] : first) CHECK(std::abs(c - n / 3) < 146);
}

TEST_CASE("model names") {
  for (const auto* name :
       {"zesrec-g", "zesrec-t", "knn", "pop", "random", "gru4rec", "gru4rec-meta", "tcn", "tcn-meta"}) {
    CHECK(model_kind_name(parse_model_kind(name)) == name);
  }
  CHECK_THROWS(parse_model_kind("hrnn"));
  CHECK(is_in_domain_sequence_model(ModelKind::kTcnMeta));
  CHECK_FALSE(is_in_domain_sequence_model(ModelKind::kPop));
}
