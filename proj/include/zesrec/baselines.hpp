#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "zesrec/data_model.hpp"
#include "zesrec/embedding_io.hpp"
#include "zesrec/inference.hpp"
#include "zesrec/model.hpp"

namespace zesrec {

enum class ModelKind { kZesrecG, kZesrecT, kKnn, kPop, kRandom, kGru4Rec, kGru4RecMeta, kTcn, kTcnMeta };

ModelKind parse_model_kind(const std::string& name);
std::string model_kind_name(ModelKind kind);
bool is_in_domain_sequence_model(ModelKind kind);

// ---------------------------------------------------------------------------
// POP: global popularity from the target train split.

struct PopModel {
  std::vector<std::size_t> counts;  // per catalog item
  std::vector<ItemIndex> ranking;   // descending count, ties by ascending item id
};

PopModel build_pop_model(const InteractionLog& train, const ItemCatalog& catalog);
RankedList pop_recommend(const PopModel& model, const ItemCatalog& catalog, std::size_t k);

class PopRecommender : public Recommender {
 public:
  explicit PopRecommender(PopModel model);
  std::size_t catalog_size() const override { return scores_.size(); }
  void score(std::span<const ItemIndex> history, std::span<double> out) const override;

 private:
  PopModel model_;
  std::vector<double> scores_;
};

// ---------------------------------------------------------------------------
// EmbeddingKNN: mean of the raw content rows of the history, ranked by inner
// product with raw content rows. No learned parameters.

class KnnRecommender : public Recommender {
 public:
  explicit KnnRecommender(const EmbeddingTable& table);
  std::size_t catalog_size() const override { return static_cast<std::size_t>(content_.rows()); }
  void score(std::span<const ItemIndex> history, std::span<double> out) const override;
  Vector user_vector(std::span<const ItemIndex> history) const;

 private:
  Matrix content_;
};

RankedList knn_recommend(const std::vector<std::string>& history, const EmbeddingTable& table, std::size_t k);

// ---------------------------------------------------------------------------
// Random: uniform permutation of the catalog.

RankedList random_recommend(const ItemCatalog& catalog, std::size_t k, std::uint64_t seed);

/// Each history gets its own seeded permutation, so results do not depend on
/// the order users are evaluated in.
class RandomRecommender : public Recommender {
 public:
  RandomRecommender(std::size_t catalog_size, std::uint64_t seed) : size_(catalog_size), seed_(seed) {}
  std::size_t catalog_size() const override { return size_; }
  void score(std::span<const ItemIndex> history, std::span<double> out) const override;

 private:
  std::size_t size_;
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// In-domain sequence models (GRU4Rec / TCN and their -Meta variants),
// trained directly on target-domain data with the ZESRec objective minus
// item offsets.

TrainResult train_id_model(const InteractionLog& train, const InteractionLog& validation, const EmbeddingTable& table,
                           const TrainConfig& cfg, const EncoderConfig& enc, bool meta);

/// Scores the model's own catalog; `table` supplies content for -Meta models.
std::unique_ptr<SequenceRecommender> in_domain_recommender(const ModelParams& params, const EmbeddingTable& table,
                                                           std::size_t max_history);

}  // namespace zesrec
