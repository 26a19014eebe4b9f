#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zesrec/common.hpp"
#include "zesrec/data_model.hpp"
#include "zesrec/encoders.hpp"

namespace zesrec {

/// How item latent vectors are produced.
enum class ItemIndexing {
  kContent,      // v_j = f_e(x_j) (+ ε_j when offsets are present)
  kCategorical,  // v_j = row j of a per-domain ID embedding table
};

enum class UserOffsetMode {
  kFixedZero,  // u_it = n_it exactly
  kFree,       // u_it = n_it + ξ_it with ξ optimized under an L2 penalty
};

struct Hyper {
  double lambda_u = 1.0;
  double lambda_v = 1.0;
};

/// Trainable state shared by ZESRec and the in-domain sequence models.
///
/// ZESRec: content indexing with an item offset table (J_s x D).
/// Meta variants: content indexing without offsets.
/// ID variants: categorical indexing; `id_embeddings` has J + 1 rows, the
/// last one being the learned session-start vector.
struct ModelParams {
  ItemIndexing indexing = ItemIndexing::kContent;
  ItemUenParams item_uen;
  Matrix item_offsets;
  Matrix id_embeddings;
  EncoderParams encoder;
  Hyper hyper;

  Eigen::Index dim() const { return encoder_dim(encoder); }
  bool has_offsets() const { return item_offsets.size() > 0; }
};

ModelParams make_zesrec(Eigen::Index content_dim, std::size_t num_items, const EncoderConfig& enc,
                        const Hyper& hyper, std::uint64_t seed);
/// In-domain model: categorical IDs, or content through the adapter when
/// `meta` is set. Never has offsets.
ModelParams make_id_model(std::size_t num_items, Eigen::Index content_dim, bool meta, const EncoderConfig& enc,
                          std::uint64_t seed);

ModelParams zeros_like(const ModelParams& p);
std::vector<TensorRef> tensors(ModelParams& p);

/// Latent item vectors for a catalog. `content` is required for content
/// indexing; offsets are added only when `with_offsets` is set.
Matrix item_vectors(const ModelParams& p, const Matrix* content, bool with_offsets);
/// Latent vector of the dummy session-start item: f_e(0) for content
/// indexing, the reserved last ID row otherwise.
Vector start_vector(const ModelParams& p);

/// Inner product of every user row with every item row. A fixed scalar
/// accumulation order makes each entry independent of batch shape.
Matrix inner_products(const Matrix& users, const Matrix& items);
Vector inner_products(const Vector& user, const Matrix& items);

/// Max-subtracted softmax.
Vector softmax(const Vector& logits);

/// Encoder input for scoring every position of `items`: the start vector
/// followed by the vectors of items[0..n-2].
Matrix sequence_inputs(const Matrix& vectors, const Vector& start, std::span<const ItemIndex> items);

/// Logits at every position of a training sequence (row t scores items[t]).
Matrix sequence_logits(const ModelParams& p, const Matrix& vectors, std::span<const ItemIndex> items);

struct LossResult {
  double loss = 0;       // nll + penalties
  double nll = 0;
  double item_penalty = 0;
  double user_penalty = 0;
  std::size_t num_targets = 0;
  ModelParams grad;
  std::vector<Matrix> user_offset_grads;  // free mode only, aligned with sequences
};

/// Negative log-likelihood of every item in every sequence under the full
/// catalog softmax, plus (λ_v/2)·Σ‖ε_j‖² over items occurring in the batch
/// and, in free mode, (λ_u/2)·Σ‖ξ_it‖². `user_offsets`, when given, holds
/// one (len x D) matrix per sequence.
LossResult loss_and_gradient(const ModelParams& p, const Matrix* content,
                             std::span<const std::vector<ItemIndex>> sequences,
                             const std::vector<Matrix>* user_offsets = nullptr);

// ---------------------------------------------------------------------------
// Training.

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}
  void step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads);

 private:
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long step_ = 0;
};

struct TrainConfig {
  AdamConfig optimizer;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;
  UserOffsetMode user_offset_mode = UserOffsetMode::kFixedZero;
  std::size_t max_history = 50;
  int eval_k = 20;
};

struct TrainingData {
  Matrix content;  // catalog content embeddings; empty for categorical models
  std::vector<std::vector<ItemIndex>> train;
  std::vector<std::vector<ItemIndex>> validation;
};

/// Deduplicated sequences truncated to their most recent `max_history` events.
std::vector<std::vector<ItemIndex>> training_sequences(const InteractionLog& log, std::size_t max_history);

struct EpochMetrics {
  int epoch = 0;
  double loss = 0;
  double val_ndcg = 0;
  double val_recall = 0;
};

struct TrainResult {
  ModelParams params;  // best validation NDCG checkpoint
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

/// Minibatch Adam on the objective above. After every epoch the model is
/// scored on the validation sequences through the deployment path (no item
/// offsets) and the best-NDCG@k parameters are kept.
TrainResult train(ModelParams init, const TrainingData& data, const TrainConfig& cfg);

void write_epoch_csv(std::ostream& out, const std::vector<EpochMetrics>& epochs);

}  // namespace zesrec
