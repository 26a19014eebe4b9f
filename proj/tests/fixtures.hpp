#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "zesrec/data_model.hpp"
#include "zesrec/embedding_io.hpp"
#include "zesrec/model.hpp"

namespace fixtures {

using namespace zesrec;

/// Small ZESRec instance with every tensor (offsets included) randomized.
struct Toy {
  ModelParams params;
  Matrix content;
  std::vector<std::vector<ItemIndex>> sequences;
};

inline Toy make_toy(EncoderKind kind, std::uint64_t seed, Eigen::Index dim = 8, std::size_t items = 5,
                    Eigen::Index content_dim = 6) {
  std::mt19937_64 rng(seed);
  EncoderConfig enc;
  enc.kind = kind;
  enc.dim = static_cast<int>(dim);
  Toy toy;
  toy.params = make_zesrec(content_dim, items, enc, Hyper{0.7, 0.9}, seed);
  oracle::randomize(tensors(toy.params), 0.5, rng);
  toy.content = Matrix::Zero(static_cast<Eigen::Index>(items), content_dim);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < toy.content.size(); ++i) toy.content.data()[i] = g(rng);
  toy.sequences = {{0, 1, 2}, {3, 1, 4, 0, 2}, {4}, {2, 3, 2, 1}};
  return toy;
}

/// Deterministic transitions over `items` items: item j is always followed
/// by item (j + 1) mod items.
inline InteractionLog cyclic_log(std::size_t users, std::size_t items, std::size_t length) {
  std::vector<RawEvent> events;
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t t = 0; t < length; ++t) {
      events.push_back({"u" + std::to_string(u), static_cast<ItemIndex>((u + t) % items),
                        static_cast<std::int64_t>(1000 + 10 * t)});
    }
  }
  return make_log(events);
}

inline EmbeddingTable random_table(std::size_t items, std::uint32_t dim, std::uint64_t seed,
                                   const std::string& prefix = "i") {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  EmbeddingTable t;
  t.dim = dim;
  for (std::size_t j = 0; j < items; ++j) t.item_ids.push_back(prefix + std::to_string(j));
  t.rows.resize(items * dim);
  for (auto& x : t.rows) x = g(rng);
  return t;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("zesrec_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
