#pragma once

#include <span>
#include <string>
#include <vector>

#include "zesrec/common.hpp"
#include "zesrec/data_model.hpp"
#include "zesrec/embedding_io.hpp"
#include "zesrec/model.hpp"

namespace zesrec {

/// Anything that scores a whole catalog given a user's history (catalog
/// indices, oldest first, consecutive repeats already removed).
class Recommender {
 public:
  virtual ~Recommender() = default;
  virtual std::size_t catalog_size() const = 0;
  virtual void score(std::span<const ItemIndex> history, std::span<double> out) const = 0;
};

/// Item latent vectors of one catalog plus the session-start vector.
struct LatentIndex {
  Matrix vectors;  // J x D
  Vector start;    // D
};

/// Deployment-time item vectors: f_e(x_j) for content models (never the
/// source offsets), the ID table for categorical ones.
LatentIndex build_item_index(const ModelParams& p, const Matrix* content);

/// Index over an unseen catalog, built only from its content embeddings
/// and frozen parameters.
struct TargetIndex {
  ItemCatalog catalog;
  LatentIndex latent;
};

TargetIndex build_target_index(const EmbeddingTable& table, const ModelParams& p);

/// User embedding from the start vector followed by the most recent
/// `max_history` history items (0 keeps everything).
Vector user_embedding(const ModelParams& p, const LatentIndex& index, std::span<const ItemIndex> history,
                      std::size_t max_history);

/// Indices of the k best scores; ties go to the lower catalog position.
/// Items with exclude[j] set are skipped.
std::vector<ItemIndex> top_k_indices(std::span<const double> scores, std::size_t k,
                                     const std::vector<bool>* exclude = nullptr);

struct RankedList {
  std::vector<std::string> items;
  std::vector<double> scores;
};

std::string to_json_line(const std::string& user_id, const RankedList& list);

/// Scores an index with the model's user encoder. Used for ZESRec in the
/// target domain and for in-domain models in their own domain.
class SequenceRecommender : public Recommender {
 public:
  SequenceRecommender(LatentIndex index, const ModelParams& params, std::size_t max_history);

  std::size_t catalog_size() const override { return static_cast<std::size_t>(index_.vectors.rows()); }
  void score(std::span<const ItemIndex> history, std::span<double> out) const override;
  Vector user_embedding(std::span<const ItemIndex> history) const;
  const LatentIndex& index() const { return index_; }

 private:
  LatentIndex index_;
  ModelParams params_;
  std::size_t max_history_;
};

struct RecommendOptions {
  std::size_t k = 20;
  bool exclude_seen = false;
  std::size_t max_history = 50;
};

/// Top-k target items for a history of target item ids (possibly empty).
RankedList recommend_top_k(const std::vector<std::string>& history, const TargetIndex& index,
                           const ModelParams& params, const RecommendOptions& opts = {});

/// Ranks with any recommender over a catalog.
RankedList recommend_with(const Recommender& rec, const ItemCatalog& catalog,
                          const std::vector<std::string>& history, const RecommendOptions& opts = {});

}  // namespace zesrec
