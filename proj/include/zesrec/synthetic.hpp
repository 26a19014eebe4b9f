#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zesrec/data_model.hpp"
#include "zesrec/embedding_io.hpp"
#include "zesrec/evaluation.hpp"
#include "zesrec/inference.hpp"

namespace zesrec {

/// Two-domain corpus sampled from a planted sequential model.
///
/// Items in both domains get content vectors drawn around a shared set of
/// cluster centres. Each user walks over clusters: from the cluster of the
/// last item the next cluster is next_cluster[c] with probability
/// `follow_prob`, otherwise uniform; the item is then uniform inside that
/// cluster. The transition lives in content space, so a model trained on
/// the source can carry it to the target catalog.
struct SyntheticConfig {
  std::size_t source_items = 200;
  std::size_t target_items = 200;
  std::size_t source_users = 2000;
  std::size_t target_users = 500;
  std::uint32_t content_dim = 32;
  std::size_t clusters = 10;
  std::size_t min_length = 25;
  std::size_t max_length = 35;
  double follow_prob = 0.8;
  double noise = 0.35;
  std::int64_t base_timestamp = 1600000000;
};

struct SyntheticDomain {
  InteractionLog log;
  EmbeddingTable table;
  Descriptions descriptions;
  std::vector<std::size_t> item_cluster;
};

struct SyntheticPair {
  SyntheticDomain source;
  SyntheticDomain target;
  std::vector<std::size_t> next_cluster;
  double follow_prob = 0;
};

/// Ids are `s_*` in the source and `t_*` in the target.
SyntheticPair generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

/// Writes `<prefix>_interactions.csv`, `<prefix>_embeddings.zesr` and
/// `<prefix>_descriptions.csv` under `dir`.
void write_synthetic_domain(const SyntheticDomain& domain, const std::string& dir, const std::string& prefix);

/// Scores items with the true generating probabilities.
class PlantedRecommender : public Recommender {
 public:
  PlantedRecommender(const SyntheticDomain& domain, const std::vector<std::size_t>& next_cluster, double follow_prob);
  std::size_t catalog_size() const override { return item_cluster_.size(); }
  void score(std::span<const ItemIndex> history, std::span<double> out) const override;

 private:
  std::vector<std::size_t> item_cluster_;
  std::vector<std::size_t> cluster_size_;
  std::vector<std::size_t> next_cluster_;
  double follow_prob_;
};

}  // namespace zesrec
