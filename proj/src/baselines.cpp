#include "zesrec/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace zesrec {

namespace {

const std::vector<std::pair<std::string, ModelKind>>& kind_names() {
  static const std::vector<std::pair<std::string, ModelKind>> names = {
      {"zesrec-g", ModelKind::kZesrecG}, {"zesrec-t", ModelKind::kZesrecT},
      {"knn", ModelKind::kKnn},          {"pop", ModelKind::kPop},
      {"random", ModelKind::kRandom},    {"gru4rec", ModelKind::kGru4Rec},
      {"gru4rec-meta", ModelKind::kGru4RecMeta}, {"tcn", ModelKind::kTcn},
      {"tcn-meta", ModelKind::kTcnMeta}};
  return names;
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  for (const auto& [n, k] : kind_names()) {
    if (n == name) return k;
  }
  throw ConfigError("unknown model '" + name + "'");
}

std::string model_kind_name(ModelKind kind) {
  for (const auto& [n, k] : kind_names()) {
    if (k == kind) return n;
  }
  return "?";
}

bool is_in_domain_sequence_model(ModelKind kind) {
  return kind == ModelKind::kGru4Rec || kind == ModelKind::kGru4RecMeta || kind == ModelKind::kTcn ||
         kind == ModelKind::kTcnMeta;
}

PopModel build_pop_model(const InteractionLog& train, const ItemCatalog& catalog) {
  PopModel m;
  m.counts.assign(catalog.size(), 0);
  for (const auto& u : train.users) {
    for (ItemIndex j : u.items) ++m.counts.at(j);
  }
  m.ranking.resize(catalog.size());
  std::iota(m.ranking.begin(), m.ranking.end(), 0);
  std::sort(m.ranking.begin(), m.ranking.end(), [&](ItemIndex a, ItemIndex b) {
    if (m.counts[a] != m.counts[b]) return m.counts[a] > m.counts[b];
    return catalog.id(a) < catalog.id(b);
  });
  return m;
}

RankedList pop_recommend(const PopModel& model, const ItemCatalog& catalog, std::size_t k) {
  RankedList out;
  for (std::size_t i = 0; i < std::min(k, model.ranking.size()); ++i) {
    out.items.push_back(catalog.id(model.ranking[i]));
    out.scores.push_back(static_cast<double>(model.counts[model.ranking[i]]));
  }
  return out;
}

PopRecommender::PopRecommender(PopModel model) : model_(std::move(model)), scores_(model_.ranking.size()) {
  // Scores encode ranking position so the string-id tie-break survives.
  const auto n = static_cast<double>(model_.ranking.size());
  for (std::size_t i = 0; i < model_.ranking.size(); ++i) scores_[model_.ranking[i]] = n - static_cast<double>(i);
}

void PopRecommender::score(std::span<const ItemIndex>, std::span<double> out) const {
  std::copy(scores_.begin(), scores_.end(), out.begin());
}

KnnRecommender::KnnRecommender(const EmbeddingTable& table) : content_(table.as_matrix()) {}

Vector KnnRecommender::user_vector(std::span<const ItemIndex> history) const {
  Vector u = Vector::Zero(content_.cols());
  if (history.empty()) return u;
  for (ItemIndex j : history) u += content_.row(j).transpose();
  return u / static_cast<double>(history.size());
}

void KnnRecommender::score(std::span<const ItemIndex> history, std::span<double> out) const {
  const Vector s = inner_products(user_vector(history), content_);
  std::copy(s.data(), s.data() + s.size(), out.begin());
}

RankedList knn_recommend(const std::vector<std::string>& history, const EmbeddingTable& table, std::size_t k) {
  const KnnRecommender rec(table);
  const ItemCatalog catalog = table.catalog();
  RecommendOptions opts;
  opts.k = k;
  return recommend_with(rec, catalog, history, opts);
}

RankedList random_recommend(const ItemCatalog& catalog, std::size_t k, std::uint64_t seed) {
  if (k > catalog.size()) throw ConfigError("random: k exceeds catalog size");
  std::vector<ItemIndex> perm(catalog.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, "random"));
  std::shuffle(perm.begin(), perm.end(), rng);
  RankedList out;
  for (std::size_t i = 0; i < k; ++i) {
    out.items.push_back(catalog.id(perm[i]));
    out.scores.push_back(static_cast<double>(k - i));
  }
  return out;
}

void RandomRecommender::score(std::span<const ItemIndex> history, std::span<double> out) const {
  std::uint64_t h = seed_;
  for (ItemIndex j : history) h = derive_seed(h, std::to_string(j));
  std::mt19937_64 rng(derive_seed(h, "random"));
  std::vector<ItemIndex> perm(size_);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t i = 0; i < size_; ++i) out[perm[i]] = static_cast<double>(size_ - i);
}

TrainResult train_id_model(const InteractionLog& train_log, const InteractionLog& validation,
                           const EmbeddingTable& table, const TrainConfig& cfg, const EncoderConfig& enc, bool meta) {
  TrainingData data;
  if (meta) data.content = table.as_matrix();
  data.train = training_sequences(train_log, cfg.max_history);
  data.validation = training_sequences(validation, 0);
  ModelParams init = make_id_model(table.num_items(), static_cast<Eigen::Index>(table.dim), meta, enc, cfg.seed);
  return train(std::move(init), data, cfg);
}

std::unique_ptr<SequenceRecommender> in_domain_recommender(const ModelParams& params, const EmbeddingTable& table,
                                                           std::size_t max_history) {
  if (params.indexing == ItemIndexing::kContent) {
    const Matrix content = table.as_matrix();
    return std::make_unique<SequenceRecommender>(build_item_index(params, &content), params, max_history);
  }
  return std::make_unique<SequenceRecommender>(build_item_index(params, nullptr), params, max_history);
}

}  // namespace zesrec
