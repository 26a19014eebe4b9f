#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "zesrec/common.hpp"

namespace zesrec {

/// Non-owning view of one named parameter tensor, used by the optimizer,
/// the checkpoint writer and gradient checks.
struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
};

// ---------------------------------------------------------------------------
// Item universal embedding network: affine adapter over frozen content
// embeddings, m = W x + b.

struct ItemUenParams {
  Matrix weight;  // D x dim_in
  Vector bias;    // D

  Eigen::Index out_dim() const { return weight.rows(); }
  Eigen::Index in_dim() const { return weight.cols(); }
};

Vector item_uen_forward(const Vector& content, const ItemUenParams& p);
/// Row j of the result is the adapter applied to row j of `content`.
Matrix item_uen_forward_batch(const Matrix& content, const ItemUenParams& p);
/// Accumulates dW += dMᵀ X and db += Σ_j dM_j.
void item_uen_backward(const Matrix& content, const Matrix& d_out, ItemUenParams& grad);

// ---------------------------------------------------------------------------
// User universal embedding network.

/// z = σ(W_z v + U_z h + b_z), r = σ(W_r v + U_r h + b_r),
/// h̃ = tanh(W_h v + U_h (r ⊙ h) + b_h), h' = (1 − z) ⊙ h + z ⊙ h̃.
struct GruParams {
  Matrix w_z, w_r, w_h;  // input weights, D x D
  Matrix u_z, u_r, u_h;  // recurrent weights, D x D
  Vector b_z, b_r, b_h;

  Eigen::Index dim() const { return w_z.rows(); }
};

Vector gru_step(const Vector& h, const Vector& v, const GruParams& p);

/// Causal dilated convolution with a residual connection:
/// y_t = x_t + tanh(b + Σ_k taps[k] x_{t − k·dilation}), zero left padding.
struct TcnLayer {
  int dilation = 1;
  std::vector<Matrix> taps;  // one D x D matrix per kernel position
  Vector bias;

  int kernel() const { return static_cast<int>(taps.size()); }
};

struct TcnParams {
  std::vector<TcnLayer> layers;

  Eigen::Index dim() const { return layers.front().bias.size(); }
  /// 1 + Σ (k − 1)·d over layers.
  int receptive_field() const;
};

using EncoderParams = std::variant<GruParams, TcnParams>;

enum class EncoderKind { kGru, kTcn };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::kGru;
  int dim = 64;
  int tcn_layers = 2;
  int tcn_kernel = 3;
};

Eigen::Index encoder_dim(const EncoderParams& p);
EncoderKind encoder_kind(const EncoderParams& p);

/// Activations cached by encode() for the backward pass.
struct EncoderTrace {
  Matrix inputs;
  // GRU: states has L+1 rows (row 0 is the zero initial state).
  Matrix states, z, r, candidate;
  // TCN: layer_inputs[l] feeds layer l, activations[l] is its tanh output.
  std::vector<Matrix> layer_inputs, activations;
};

/// Runs the encoder over an L x D input sequence. Row t of the result is
/// the user embedding after consuming inputs 0..t.
Matrix encode(const EncoderParams& p, const Matrix& inputs, EncoderTrace* trace = nullptr);

/// Accumulates parameter gradients into `grad` and writes the gradient
/// with respect to the inputs into `d_inputs` (L x D).
void encode_backward(const EncoderParams& p, const EncoderTrace& trace, const Matrix& d_outputs,
                     EncoderParams& grad, Matrix& d_inputs);

// ---------------------------------------------------------------------------
// Construction and traversal.

/// Uniform(−1/√D, 1/√D) for matrices, zero biases.
ItemUenParams init_item_uen(Eigen::Index dim_in, Eigen::Index dim, std::mt19937_64& rng);
EncoderParams init_encoder(const EncoderConfig& cfg, std::mt19937_64& rng);
Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, double scale, std::mt19937_64& rng);

ItemUenParams zeros_like(const ItemUenParams& p);
EncoderParams zeros_like(const EncoderParams& p);

void append_tensors(ItemUenParams& p, const std::string& prefix, std::vector<TensorRef>& out);
void append_tensors(EncoderParams& p, const std::string& prefix, std::vector<TensorRef>& out);

}  // namespace zesrec
