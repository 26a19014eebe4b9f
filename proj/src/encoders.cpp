#include "zesrec/encoders.hpp"

#include <cmath>

namespace zesrec {

namespace {

Vector sigmoid(const Vector& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

void check_cols(const Matrix& m, Eigen::Index cols, const char* what) {
  if (m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(cols) + " columns, got " +
                     std::to_string(m.cols()));
  }
}

// Forward passes use one matrix-vector product per step so that the output
// at step t is bit-identical however long the sequence is.
Matrix encode_gru(const GruParams& p, const Matrix& inputs, EncoderTrace* trace) {
  const Eigen::Index L = inputs.rows(), D = p.dim();
  check_cols(inputs, D, "gru input");
  Matrix states(L + 1, D);
  states.row(0).setZero();
  Matrix z(L, D), r(L, D), cand(L, D);
  Vector h = Vector::Zero(D);
  Vector x(D);
  for (Eigen::Index t = 0; t < L; ++t) {
    x = inputs.row(t).transpose();
    const Vector zt = sigmoid(p.w_z * x + p.u_z * h + p.b_z);
    const Vector rt = sigmoid(p.w_r * x + p.u_r * h + p.b_r);
    const Vector ct = (p.w_h * x + p.u_h * rt.cwiseProduct(h) + p.b_h).array().tanh().matrix();
    h = (1.0 - zt.array()).matrix().cwiseProduct(h) + zt.cwiseProduct(ct);
    states.row(t + 1) = h.transpose();
    z.row(t) = zt.transpose();
    r.row(t) = rt.transpose();
    cand.row(t) = ct.transpose();
  }
  if (trace) {
    trace->inputs = inputs;
    trace->states = states;
    trace->z = std::move(z);
    trace->r = std::move(r);
    trace->candidate = std::move(cand);
  }
  return states.bottomRows(L);
}

void backward_gru(const GruParams& p, const EncoderTrace& tr, const Matrix& d_out, GruParams& g,
                  Matrix& d_inputs) {
  const Eigen::Index L = tr.inputs.rows(), D = p.dim();
  d_inputs.setZero(L, D);
  Vector dh_next = Vector::Zero(D);
  for (Eigen::Index t = L - 1; t >= 0; --t) {
    const Vector dh = d_out.row(t).transpose() + dh_next;
    const Vector h_prev = tr.states.row(t).transpose();
    const Vector x = tr.inputs.row(t).transpose();
    const Vector z = tr.z.row(t).transpose();
    const Vector r = tr.r.row(t).transpose();
    const Vector c = tr.candidate.row(t).transpose();

    const Vector dc = dh.cwiseProduct(z);
    const Vector dz = dh.cwiseProduct(c - h_prev);
    Vector dh_prev = dh.cwiseProduct((1.0 - z.array()).matrix());

    const Vector da_h = dc.cwiseProduct((1.0 - c.array().square()).matrix());
    const Vector rh = r.cwiseProduct(h_prev);
    g.w_h.noalias() += da_h * x.transpose();
    g.u_h.noalias() += da_h * rh.transpose();
    g.b_h += da_h;
    const Vector d_rh = p.u_h.transpose() * da_h;
    const Vector dr = d_rh.cwiseProduct(h_prev);
    dh_prev += d_rh.cwiseProduct(r);

    const Vector da_z = dz.cwiseProduct((z.array() * (1.0 - z.array())).matrix());
    g.w_z.noalias() += da_z * x.transpose();
    g.u_z.noalias() += da_z * h_prev.transpose();
    g.b_z += da_z;
    dh_prev.noalias() += p.u_z.transpose() * da_z;

    const Vector da_r = dr.cwiseProduct((r.array() * (1.0 - r.array())).matrix());
    g.w_r.noalias() += da_r * x.transpose();
    g.u_r.noalias() += da_r * h_prev.transpose();
    g.b_r += da_r;
    dh_prev.noalias() += p.u_r.transpose() * da_r;

    d_inputs.row(t) =
        (p.w_z.transpose() * da_z + p.w_r.transpose() * da_r + p.w_h.transpose() * da_h).transpose();
    dh_next = dh_prev;
  }
}

Matrix encode_tcn(const TcnParams& p, const Matrix& inputs, EncoderTrace* trace) {
  const Eigen::Index L = inputs.rows(), D = p.dim();
  check_cols(inputs, D, "tcn input");
  if (trace) {
    trace->inputs = inputs;
    trace->layer_inputs.clear();
    trace->activations.clear();
  }
  Matrix x = inputs;
  Vector pre(D), tap_in(D);
  for (const auto& layer : p.layers) {
    Matrix act(L, D);
    for (Eigen::Index t = 0; t < L; ++t) {
      pre = layer.bias;
      for (int k = 0; k < layer.kernel(); ++k) {
        const Eigen::Index src = t - static_cast<Eigen::Index>(k) * layer.dilation;
        if (src < 0) break;
        tap_in = x.row(src).transpose();
        pre.noalias() += layer.taps[k] * tap_in;
      }
      act.row(t) = pre.array().tanh().matrix().transpose();
    }
    Matrix out = x + act;
    if (trace) {
      trace->layer_inputs.push_back(std::move(x));
      trace->activations.push_back(std::move(act));
    }
    x = std::move(out);
  }
  return x;
}

void backward_tcn(const TcnParams& p, const EncoderTrace& tr, const Matrix& d_out, TcnParams& g,
                  Matrix& d_inputs) {
  Matrix dx = d_out;
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    const auto& layer = p.layers[l];
    auto& gl = g.layers[l];
    const Matrix& x = tr.layer_inputs[l];
    const Matrix& act = tr.activations[l];
    const Eigen::Index L = x.rows();
    const Matrix d_pre = dx.cwiseProduct((1.0 - act.array().square()).matrix());
    gl.bias += d_pre.colwise().sum().transpose();
    Matrix d_layer_in = dx;  // residual path
    for (int k = 0; k < layer.kernel(); ++k) {
      const Eigen::Index shift = static_cast<Eigen::Index>(k) * layer.dilation;
      if (shift >= L) break;
      gl.taps[k].noalias() += d_pre.bottomRows(L - shift).transpose() * x.topRows(L - shift);
      d_layer_in.topRows(L - shift).noalias() += d_pre.bottomRows(L - shift) * layer.taps[k];
    }
    dx = std::move(d_layer_in);
  }
  d_inputs = std::move(dx);
}

}  // namespace

Vector item_uen_forward(const Vector& content, const ItemUenParams& p) {
  if (content.size() != p.in_dim()) throw ShapeError("item_uen_forward: input dim mismatch");
  return p.weight * content + p.bias;
}

Matrix item_uen_forward_batch(const Matrix& content, const ItemUenParams& p) {
  check_cols(content, p.in_dim(), "item_uen_forward_batch");
  Matrix out = content * p.weight.transpose();
  out.rowwise() += p.bias.transpose();
  return out;
}

void item_uen_backward(const Matrix& content, const Matrix& d_out, ItemUenParams& grad) {
  grad.weight.noalias() += d_out.transpose() * content;
  grad.bias += d_out.colwise().sum().transpose();
}

Vector gru_step(const Vector& h, const Vector& v, const GruParams& p) {
  const Eigen::Index D = p.dim();
  if (h.size() != D || v.size() != D) throw ShapeError("gru_step: state/input dim mismatch");
  const Vector z = sigmoid(p.w_z * v + p.u_z * h + p.b_z);
  const Vector r = sigmoid(p.w_r * v + p.u_r * h + p.b_r);
  const Vector c = (p.w_h * v + p.u_h * r.cwiseProduct(h) + p.b_h).array().tanh().matrix();
  return (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(c);
}

int TcnParams::receptive_field() const {
  int field = 1;
  for (const auto& l : layers) field += (l.kernel() - 1) * l.dilation;
  return field;
}

Eigen::Index encoder_dim(const EncoderParams& p) {
  return std::visit([](const auto& e) { return e.dim(); }, p);
}

EncoderKind encoder_kind(const EncoderParams& p) {
  return std::holds_alternative<GruParams>(p) ? EncoderKind::kGru : EncoderKind::kTcn;
}

Matrix encode(const EncoderParams& p, const Matrix& inputs, EncoderTrace* trace) {
  if (inputs.rows() == 0) throw ShapeError("encode: empty input sequence");
  if (const auto* gru = std::get_if<GruParams>(&p)) return encode_gru(*gru, inputs, trace);
  return encode_tcn(std::get<TcnParams>(p), inputs, trace);
}

void encode_backward(const EncoderParams& p, const EncoderTrace& trace, const Matrix& d_outputs,
                     EncoderParams& grad, Matrix& d_inputs) {
  if (const auto* gru = std::get_if<GruParams>(&p)) {
    backward_gru(*gru, trace, d_outputs, std::get<GruParams>(grad), d_inputs);
  } else {
    backward_tcn(std::get<TcnParams>(p), trace, d_outputs, std::get<TcnParams>(grad), d_inputs);
  }
}

Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

ItemUenParams init_item_uen(Eigen::Index dim_in, Eigen::Index dim, std::mt19937_64& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  return {init_uniform(dim, dim_in, scale, rng), Vector::Zero(dim)};
}

EncoderParams init_encoder(const EncoderConfig& cfg, std::mt19937_64& rng) {
  if (cfg.dim < 1) throw ConfigError("encoder dim must be positive");
  const Eigen::Index D = cfg.dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(D));
  if (cfg.kind == EncoderKind::kGru) {
    GruParams p;
    for (Matrix* m : {&p.w_z, &p.w_r, &p.w_h, &p.u_z, &p.u_r, &p.u_h}) *m = init_uniform(D, D, scale, rng);
    for (Vector* b : {&p.b_z, &p.b_r, &p.b_h}) *b = Vector::Zero(D);
    return p;
  }
  if (cfg.tcn_layers < 1 || cfg.tcn_kernel < 1) throw ConfigError("tcn needs at least one layer and kernel >= 1");
  TcnParams p;
  for (int l = 0; l < cfg.tcn_layers; ++l) {
    TcnLayer layer;
    layer.dilation = 1 << l;
    for (int k = 0; k < cfg.tcn_kernel; ++k) layer.taps.push_back(init_uniform(D, D, scale, rng));
    layer.bias = Vector::Zero(D);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

ItemUenParams zeros_like(const ItemUenParams& p) {
  return {Matrix::Zero(p.weight.rows(), p.weight.cols()), Vector::Zero(p.bias.size())};
}

EncoderParams zeros_like(const EncoderParams& p) {
  EncoderParams out = p;
  std::vector<TensorRef> refs;
  append_tensors(out, "", refs);
  for (auto& t : refs) std::fill(t.data, t.data + t.size(), 0.0);
  return out;
}

namespace {

void push(std::vector<TensorRef>& out, const std::string& name, Matrix& m) {
  out.push_back({name, m.data(), m.rows(), m.cols()});
}

void push(std::vector<TensorRef>& out, const std::string& name, Vector& v) {
  out.push_back({name, v.data(), v.size(), 1});
}

}  // namespace

void append_tensors(ItemUenParams& p, const std::string& prefix, std::vector<TensorRef>& out) {
  push(out, prefix + "weight", p.weight);
  push(out, prefix + "bias", p.bias);
}

void append_tensors(EncoderParams& p, const std::string& prefix, std::vector<TensorRef>& out) {
  if (auto* g = std::get_if<GruParams>(&p)) {
    push(out, prefix + "gru.w_z", g->w_z);
    push(out, prefix + "gru.w_r", g->w_r);
    push(out, prefix + "gru.w_h", g->w_h);
    push(out, prefix + "gru.u_z", g->u_z);
    push(out, prefix + "gru.u_r", g->u_r);
    push(out, prefix + "gru.u_h", g->u_h);
    push(out, prefix + "gru.b_z", g->b_z);
    push(out, prefix + "gru.b_r", g->b_r);
    push(out, prefix + "gru.b_h", g->b_h);
    return;
  }
  auto& tcn = std::get<TcnParams>(p);
  for (std::size_t l = 0; l < tcn.layers.size(); ++l) {
    const std::string base = prefix + "tcn." + std::to_string(l) + ".";
    for (std::size_t k = 0; k < tcn.layers[l].taps.size(); ++k) {
      push(out, base + "tap" + std::to_string(k), tcn.layers[l].taps[k]);
    }
    push(out, base + "bias", tcn.layers[l].bias);
  }
}

}  // namespace zesrec
