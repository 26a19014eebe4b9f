#include "zesrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "zesrec/evaluation.hpp"
#include "zesrec/inference.hpp"

namespace zesrec {

ModelParams make_zesrec(Eigen::Index content_dim, std::size_t num_items, const EncoderConfig& enc,
                        const Hyper& hyper, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "init"));
  ModelParams p;
  p.indexing = ItemIndexing::kContent;
  p.item_uen = init_item_uen(content_dim, enc.dim, rng);
  p.encoder = init_encoder(enc, rng);
  p.item_offsets = Matrix::Zero(static_cast<Eigen::Index>(num_items), enc.dim);
  p.hyper = hyper;
  return p;
}

ModelParams make_id_model(std::size_t num_items, Eigen::Index content_dim, bool meta, const EncoderConfig& enc,
                          std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "init"));
  ModelParams p;
  if (meta) {
    p.indexing = ItemIndexing::kContent;
    p.item_uen = init_item_uen(content_dim, enc.dim, rng);
  } else {
    p.indexing = ItemIndexing::kCategorical;
    p.id_embeddings =
        init_uniform(static_cast<Eigen::Index>(num_items) + 1, enc.dim, 1.0 / std::sqrt(double(enc.dim)), rng);
  }
  p.encoder = init_encoder(enc, rng);
  p.hyper = {0.0, 0.0};
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams g;
  g.indexing = p.indexing;
  g.hyper = p.hyper;
  if (p.item_uen.weight.size() > 0) g.item_uen = zeros_like(p.item_uen);
  g.item_offsets = Matrix::Zero(p.item_offsets.rows(), p.item_offsets.cols());
  g.id_embeddings = Matrix::Zero(p.id_embeddings.rows(), p.id_embeddings.cols());
  g.encoder = zeros_like(p.encoder);
  return g;
}

std::vector<TensorRef> tensors(ModelParams& p) {
  std::vector<TensorRef> out;
  if (p.indexing == ItemIndexing::kContent) append_tensors(p.item_uen, "item_uen.", out);
  if (p.item_offsets.size() > 0) {
    out.push_back({"item_offsets", p.item_offsets.data(), p.item_offsets.rows(), p.item_offsets.cols()});
  }
  if (p.id_embeddings.size() > 0) {
    out.push_back({"id_embeddings", p.id_embeddings.data(), p.id_embeddings.rows(), p.id_embeddings.cols()});
  }
  append_tensors(p.encoder, "encoder.", out);
  return out;
}

Matrix item_vectors(const ModelParams& p, const Matrix* content, bool with_offsets) {
  if (p.indexing == ItemIndexing::kCategorical) {
    return p.id_embeddings.topRows(p.id_embeddings.rows() - 1);
  }
  if (!content) throw ShapeError("content embeddings required for content-indexed model");
  Matrix v = item_uen_forward_batch(*content, p.item_uen);
  if (with_offsets && p.has_offsets()) {
    if (p.item_offsets.rows() != v.rows()) throw ShapeError("item offset table does not match catalog size");
    v += p.item_offsets;
  }
  return v;
}

Vector start_vector(const ModelParams& p) {
  if (p.indexing == ItemIndexing::kCategorical) {
    return p.id_embeddings.row(p.id_embeddings.rows() - 1).transpose();
  }
  return item_uen_forward(Vector::Zero(p.item_uen.in_dim()), p.item_uen);
}

namespace {

double dot(const double* a, const double* b, Eigen::Index n) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Matrix inner_products(const Matrix& users, const Matrix& items) {
  if (users.cols() != items.cols()) throw ShapeError("inner_products: dim mismatch");
  Matrix out(users.rows(), items.rows());
  for (Eigen::Index u = 0; u < users.rows(); ++u) {
    for (Eigen::Index j = 0; j < items.rows(); ++j) {
      out(u, j) = dot(users.row(u).data(), items.row(j).data(), users.cols());
    }
  }
  return out;
}

Vector inner_products(const Vector& user, const Matrix& items) {
  if (user.size() != items.cols()) throw ShapeError("inner_products: dim mismatch");
  Vector out(items.rows());
  for (Eigen::Index j = 0; j < items.rows(); ++j) out[j] = dot(user.data(), items.row(j).data(), user.size());
  return out;
}

Vector softmax(const Vector& logits) {
  Vector p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

Matrix sequence_inputs(const Matrix& vectors, const Vector& start, std::span<const ItemIndex> items) {
  const auto n = static_cast<Eigen::Index>(items.size());
  Matrix inputs(std::max<Eigen::Index>(n, 1), vectors.cols());
  inputs.row(0) = start.transpose();
  for (Eigen::Index t = 1; t < n; ++t) inputs.row(t) = vectors.row(items[t - 1]);
  return inputs;
}

Matrix sequence_logits(const ModelParams& p, const Matrix& vectors, std::span<const ItemIndex> items) {
  const Matrix users = encode(p.encoder, sequence_inputs(vectors, start_vector(p), items));
  return inner_products(users, vectors);
}

LossResult loss_and_gradient(const ModelParams& p, const Matrix* content,
                             std::span<const std::vector<ItemIndex>> sequences,
                             const std::vector<Matrix>* user_offsets) {
  if (sequences.empty()) throw Error("loss: empty batch");
  if (user_offsets && user_offsets->size() != sequences.size()) {
    throw ShapeError("loss: one user offset matrix per sequence required");
  }

  const Matrix vectors = item_vectors(p, content, true);
  const Vector start = start_vector(p);
  const Eigen::Index J = vectors.rows(), D = vectors.cols();

  LossResult result;
  result.grad = zeros_like(p);
  Matrix d_vectors = Matrix::Zero(J, D);
  Vector d_start = Vector::Zero(D);
  std::vector<bool> touched(static_cast<std::size_t>(J), false);
  EncoderTrace trace;
  Matrix d_inputs;

  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& items = sequences[s];
    const auto N = static_cast<Eigen::Index>(items.size());
    if (N == 0) {
      if (user_offsets) result.user_offset_grads.emplace_back();
      continue;
    }
    for (ItemIndex j : items) {
      if (static_cast<Eigen::Index>(j) >= J) throw ShapeError("loss: item index outside catalog");
      touched[j] = true;
    }

    const Matrix inputs = sequence_inputs(vectors, start, items);
    Matrix users = encode(p.encoder, inputs, &trace);
    const Matrix* xi = user_offsets ? &(*user_offsets)[s] : nullptr;
    if (xi) {
      if (xi->rows() != N || xi->cols() != D) throw ShapeError("loss: user offset shape mismatch");
      users += *xi;
    }

    const Matrix logits = inner_products(users, vectors);
    Matrix d_logits(N, J);
    for (Eigen::Index t = 0; t < N; ++t) {
      const Vector row = logits.row(t).transpose();
      const double m = row.maxCoeff();
      const double lse = m + std::log((row.array() - m).exp().sum());
      result.nll += lse - row[items[t]];
      d_logits.row(t) = (row.array() - lse).exp().matrix().transpose();
      d_logits(t, items[t]) -= 1.0;
    }
    result.num_targets += static_cast<std::size_t>(N);

    d_vectors.noalias() += d_logits.transpose() * users;
    const Matrix d_users = d_logits * vectors;
    if (xi) {
      result.user_penalty += 0.5 * p.hyper.lambda_u * xi->squaredNorm();
      result.user_offset_grads.push_back(d_users + p.hyper.lambda_u * *xi);
    }

    encode_backward(p.encoder, trace, d_users, result.grad.encoder, d_inputs);
    d_start += d_inputs.row(0).transpose();
    for (Eigen::Index t = 1; t < N; ++t) d_vectors.row(items[t - 1]) += d_inputs.row(t);
  }
  if (result.num_targets == 0) throw Error("loss: batch has no interactions");

  if (p.has_offsets()) {
    for (Eigen::Index j = 0; j < J; ++j) {
      if (!touched[static_cast<std::size_t>(j)]) continue;
      result.item_penalty += 0.5 * p.hyper.lambda_v * p.item_offsets.row(j).squaredNorm();
      result.grad.item_offsets.row(j) += p.hyper.lambda_v * p.item_offsets.row(j);
    }
  }

  if (p.indexing == ItemIndexing::kContent) {
    if (p.has_offsets()) result.grad.item_offsets += d_vectors;
    item_uen_backward(*content, d_vectors, result.grad.item_uen);
    result.grad.item_uen.bias += d_start;  // start = f_e(0) = bias
  } else {
    result.grad.id_embeddings.topRows(J) += d_vectors;
    result.grad.id_embeddings.row(J) += d_start.transpose();
  }

  result.loss = result.nll + result.item_penalty + result.user_penalty;
  return result;
}

void Adam::step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads) {
  if (params.size() != grads.size()) throw ShapeError("adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& t : params) {
      m_.emplace_back(static_cast<std::size_t>(t.size()), 0.0);
      v_.emplace_back(static_cast<std::size_t>(t.size()), 0.0);
    }
  }
  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size()) throw ShapeError("adam: shape mismatch for " + params[i].name);
    double* w = params[i].data;
    const double* g = grads[i].data;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < m.size(); ++k) {
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
      w[k] -= cfg_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
    }
  }
}

std::vector<std::vector<ItemIndex>> training_sequences(const InteractionLog& log, std::size_t max_history) {
  std::vector<std::vector<ItemIndex>> out;
  out.reserve(log.users.size());
  for (const auto& u : log.users) {
    auto items = dedup_consecutive(u.items);
    if (items.empty()) continue;
    if (max_history > 0 && items.size() > max_history) {
      items.erase(items.begin(), items.end() - static_cast<std::ptrdiff_t>(max_history));
    }
    out.push_back(std::move(items));
  }
  return out;
}

TrainResult train(ModelParams params, const TrainingData& data, const TrainConfig& cfg) {
  if (cfg.optimizer.learning_rate <= 0) throw ConfigError("learning_rate must be positive");
  if (cfg.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (data.train.empty()) throw Error("train: no training sequences");
  const Matrix* content = data.content.size() > 0 ? &data.content : nullptr;

  const bool free_users = cfg.user_offset_mode == UserOffsetMode::kFree;
  std::vector<Matrix> xi;
  std::vector<Adam> xi_opt;
  if (free_users) {
    for (const auto& s : data.train) {
      xi.push_back(Matrix::Zero(static_cast<Eigen::Index>(s.size()), params.dim()));
      xi_opt.emplace_back(cfg.optimizer);
    }
  }

  Adam opt(cfg.optimizer);
  std::mt19937_64 rng(derive_seed(cfg.seed, "sampling"));
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.params = params;
  double best_ndcg = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t targets = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::vector<ItemIndex>> batch;
      std::vector<Matrix> batch_xi;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(data.train[order[i]]);
        if (free_users) batch_xi.push_back(xi[order[i]]);
      }
      LossResult lr = loss_and_gradient(params, content, batch, free_users ? &batch_xi : nullptr);
      if (!std::isfinite(lr.loss)) {
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ", batch starting " +
                               std::to_string(begin) + ": loss is " + std::to_string(lr.loss));
      }
      loss_sum += lr.loss;
      targets += lr.num_targets;
      opt.step(tensors(params), tensors(lr.grad));
      if (free_users) {
        for (std::size_t i = begin; i < end; ++i) {
          Matrix& x = xi[order[i]];
          Matrix& g = lr.user_offset_grads[i - begin];
          xi_opt[order[i]].step({{"xi", x.data(), x.rows(), x.cols()}}, {{"xi", g.data(), g.rows(), g.cols()}});
        }
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.loss = loss_sum / static_cast<double>(targets);
    if (!data.validation.empty()) {
      const SequenceRecommender rec(build_item_index(params, content), params, cfg.max_history);
      const MetricReport report = evaluate_sequences(rec, data.validation, cfg.eval_k);
      m.val_ndcg = report.ndcg;
      m.val_recall = report.recall;
    }
    result.epochs.push_back(m);
    const bool better = data.validation.empty() ? true : m.val_ndcg > best_ndcg;
    if (better) {
      best_ndcg = m.val_ndcg;
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

void write_epoch_csv(std::ostream& out, const std::vector<EpochMetrics>& epochs) {
  out << "epoch,loss,val_ndcg20,val_recall20\n";
  for (const auto& e : epochs) out << e.epoch << ',' << e.loss << ',' << e.val_ndcg << ',' << e.val_recall << '\n';
}

}  // namespace zesrec
