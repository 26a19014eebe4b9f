#include "zesrec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "binary_io.hpp"

namespace zesrec {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::map<std::string, std::string> metadata(const ModelParams& p) {
  std::map<std::string, std::string> meta;
  meta["indexing"] = p.indexing == ItemIndexing::kContent ? "content" : "categorical";
  meta["dim"] = std::to_string(p.dim());
  meta["lambda_u"] = format_double(p.hyper.lambda_u);
  meta["lambda_v"] = format_double(p.hyper.lambda_v);
  if (const auto* tcn = std::get_if<TcnParams>(&p.encoder)) {
    meta["encoder"] = "tcn";
    meta["tcn_kernel"] = std::to_string(tcn->layers.front().kernel());
    std::string dil;
    for (const auto& l : tcn->layers) dil += (dil.empty() ? "" : ",") + std::to_string(l.dilation);
    meta["tcn_dilations"] = dil;
  } else {
    meta["encoder"] = "gru";
  }
  return meta;
}

const std::string& require(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw CheckpointError("checkpoint missing metadata '" + key + "'");
  return it->second;
}

}  // namespace

void write_checkpoint(const ModelParams& params, std::ostream& out) {
  ModelParams& p = const_cast<ModelParams&>(params);  // tensors() hands out mutable views; nothing is written
  out.write(kCheckpointMagic, 4);
  binio::put<std::uint32_t>(out, kCheckpointVersion);
  const auto meta = metadata(p);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    binio::put_string(out, k);
    binio::put_string(out, v);
  }
  const auto refs = tensors(p);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(refs.size()));
  for (const auto& t : refs) {
    binio::put_string(out, t.name);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows));
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols));
    out.write(reinterpret_cast<const char*>(t.data), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
}

void write_checkpoint(const ModelParams& params, const std::string& path) {
  atomic_write(path, [&](std::ostream& out) { write_checkpoint(params, out); }, true);
}

ModelParams read_checkpoint(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  std::uint32_t version = 0, n_meta = 0, n_tensors = 0;
  if (!binio::get(in, version) || version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version");
  if (!binio::get(in, n_meta)) throw CheckpointError("truncated checkpoint");
  std::map<std::string, std::string> meta;
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k, v;
    if (!binio::get_string(in, k) || !binio::get_string(in, v)) throw CheckpointError("truncated checkpoint metadata");
    meta[k] = v;
  }

  struct Raw {
    Eigen::Index rows, cols;
    std::vector<double> data;
  };
  std::map<std::string, Raw> raw;
  if (!binio::get(in, n_tensors)) throw CheckpointError("truncated checkpoint");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name;
    std::uint32_t rows = 0, cols = 0;
    if (!binio::get_string(in, name) || !binio::get(in, rows) || !binio::get(in, cols)) {
      throw CheckpointError("truncated tensor header");
    }
    Raw r{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols)};
    if (!in.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(r.data.size() * sizeof(double)))) {
      throw CheckpointError("truncated tensor " + name);
    }
    raw[name] = std::move(r);
  }

  // Rebuild the parameter skeleton, then fill every tensor by name.
  ModelParams p;
  p.indexing = require(meta, "indexing") == "content" ? ItemIndexing::kContent : ItemIndexing::kCategorical;
  p.hyper.lambda_u = std::stod(require(meta, "lambda_u"));
  p.hyper.lambda_v = std::stod(require(meta, "lambda_v"));
  const Eigen::Index D = std::stol(require(meta, "dim"));
  if (require(meta, "encoder") == "gru") {
    GruParams g;
    for (Matrix* m : {&g.w_z, &g.w_r, &g.w_h, &g.u_z, &g.u_r, &g.u_h}) m->setZero(D, D);
    for (Vector* b : {&g.b_z, &g.b_r, &g.b_h}) b->setZero(D);
    p.encoder = std::move(g);
  } else {
    TcnParams t;
    const int kernel = std::stoi(require(meta, "tcn_kernel"));
    std::stringstream dil(require(meta, "tcn_dilations"));
    for (std::string d; std::getline(dil, d, ',');) {
      TcnLayer layer;
      layer.dilation = std::stoi(d);
      layer.taps.assign(static_cast<std::size_t>(kernel), Matrix::Zero(D, D));
      layer.bias = Vector::Zero(D);
      t.layers.push_back(std::move(layer));
    }
    p.encoder = std::move(t);
  }
  auto shape_from = [&](const std::string& name, Matrix& m) {
    auto it = raw.find(name);
    if (it != raw.end()) m.setZero(it->second.rows, it->second.cols);
  };
  if (p.indexing == ItemIndexing::kContent) {
    shape_from("item_uen.weight", p.item_uen.weight);
    p.item_uen.bias = Vector::Zero(D);
    shape_from("item_offsets", p.item_offsets);
  } else {
    shape_from("id_embeddings", p.id_embeddings);
  }

  const auto refs = tensors(p);
  if (refs.size() != raw.size()) throw CheckpointError("checkpoint tensor set does not match its metadata");
  for (const auto& t : refs) {
    auto it = raw.find(t.name);
    if (it == raw.end()) throw CheckpointError("checkpoint missing tensor " + t.name);
    if (it->second.rows != t.rows || it->second.cols != t.cols) throw CheckpointError("shape mismatch for " + t.name);
    std::copy(it->second.data.begin(), it->second.data.end(), t.data);
  }
  return p;
}

ModelParams read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace zesrec
