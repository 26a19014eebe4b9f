#include "zesrec/inference.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

namespace zesrec {

LatentIndex build_item_index(const ModelParams& p, const Matrix* content) {
  return {item_vectors(p, content, false), start_vector(p)};
}

TargetIndex build_target_index(const EmbeddingTable& table, const ModelParams& p) {
  if (p.indexing != ItemIndexing::kContent) throw ConfigError("zero-shot index needs a content-indexed model");
  if (static_cast<Eigen::Index>(table.dim) != p.item_uen.in_dim()) {
    throw ShapeError("embedding dim " + std::to_string(table.dim) + " does not match model input dim " +
                     std::to_string(p.item_uen.in_dim()));
  }
  const Matrix content = table.as_matrix();
  return {table.catalog(), build_item_index(p, &content)};
}

Vector user_embedding(const ModelParams& p, const LatentIndex& index, std::span<const ItemIndex> history,
                      std::size_t max_history) {
  if (max_history > 0 && history.size() > max_history) history = history.last(max_history);
  const auto L = static_cast<Eigen::Index>(history.size()) + 1;
  Matrix inputs(L, index.vectors.cols());
  inputs.row(0) = index.start.transpose();
  for (Eigen::Index t = 1; t < L; ++t) {
    const ItemIndex j = history[static_cast<std::size_t>(t - 1)];
    if (static_cast<Eigen::Index>(j) >= index.vectors.rows()) throw ShapeError("history item outside catalog");
    inputs.row(t) = index.vectors.row(j);
  }
  const Matrix states = encode(p.encoder, inputs);
  return states.row(L - 1).transpose();
}

std::vector<ItemIndex> top_k_indices(std::span<const double> scores, std::size_t k, const std::vector<bool>* exclude) {
  std::vector<ItemIndex> idx;
  idx.reserve(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (exclude && (*exclude)[j]) continue;
    idx.push_back(static_cast<ItemIndex>(j));
  }
  k = std::min(k, idx.size());
  auto better = [&](ItemIndex a, ItemIndex b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

std::string to_json_line(const std::string& user_id, const RankedList& list) {
  nlohmann::json j;
  j["user_id"] = user_id;
  j["items"] = list.items;
  j["scores"] = list.scores;
  return j.dump();
}

SequenceRecommender::SequenceRecommender(LatentIndex index, const ModelParams& params, std::size_t max_history)
    : index_(std::move(index)), max_history_(max_history) {
  // Only the encoder is needed to embed users; item tables stay out of the copy.
  params_.indexing = params.indexing;
  params_.encoder = params.encoder;
}

Vector SequenceRecommender::user_embedding(std::span<const ItemIndex> history) const {
  return zesrec::user_embedding(params_, index_, history, max_history_);
}

void SequenceRecommender::score(std::span<const ItemIndex> history, std::span<double> out) const {
  const Vector s = inner_products(user_embedding(history), index_.vectors);
  std::copy(s.data(), s.data() + s.size(), out.begin());
}

namespace {

RankedList rank(const ItemCatalog& catalog, std::span<const double> scores, const std::vector<ItemIndex>& history,
                const RecommendOptions& opts) {
  if (opts.k < 1) throw ConfigError("k must be at least 1");
  std::vector<bool> seen;
  if (opts.exclude_seen) {
    seen.assign(catalog.size(), false);
    for (ItemIndex j : history) seen[j] = true;
  }
  RankedList out;
  for (ItemIndex j : top_k_indices(scores, opts.k, opts.exclude_seen ? &seen : nullptr)) {
    out.items.push_back(catalog.id(j));
    out.scores.push_back(scores[j]);
  }
  return out;
}

std::vector<ItemIndex> resolve(const ItemCatalog& catalog, const std::vector<std::string>& history) {
  std::vector<ItemIndex> out;
  out.reserve(history.size());
  for (const auto& id : history) out.push_back(catalog.at(id));
  return dedup_consecutive(out);
}

}  // namespace

RankedList recommend_top_k(const std::vector<std::string>& history, const TargetIndex& index,
                           const ModelParams& params, const RecommendOptions& opts) {
  const auto items = resolve(index.catalog, history);
  const Vector u = user_embedding(params, index.latent, items, opts.max_history);
  const Vector scores = inner_products(u, index.latent.vectors);
  return rank(index.catalog, std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
              items, opts);
}

RankedList recommend_with(const Recommender& rec, const ItemCatalog& catalog, const std::vector<std::string>& history,
                          const RecommendOptions& opts) {
  const auto items = resolve(catalog, history);
  std::vector<double> scores(rec.catalog_size());
  rec.score(items, scores);
  return rank(catalog, scores, items, opts);
}

}  // namespace zesrec
