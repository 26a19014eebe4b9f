#include "zesrec/embedding_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "binary_io.hpp"

namespace zesrec {

using Kind = EmbeddingFormatError::Kind;

Matrix EmbeddingTable::as_matrix() const {
  Matrix m(static_cast<Eigen::Index>(num_items()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) m.data()[i] = static_cast<double>(rows[i]);
  return m;
}

void EmbeddingTable::validate() const {
  if (dim == 0) throw EmbeddingFormatError(Kind::kInvalidTable, "embedding dim must be positive");
  if (rows.size() != item_ids.size() * static_cast<std::size_t>(dim)) {
    throw EmbeddingFormatError(Kind::kInvalidTable, "row payload does not match num_items x dim");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : item_ids) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw EmbeddingFormatError(Kind::kInvalidTable, "item id longer than 65535 bytes");
    }
    if (!seen.insert(id).second) throw EmbeddingFormatError(Kind::kDuplicateId, "duplicate item id: " + id);
  }
  for (float v : rows) {
    if (!std::isfinite(v)) throw EmbeddingFormatError(Kind::kInvalidTable, "non-finite embedding value");
  }
}

void write_table(const EmbeddingTable& table, std::ostream& out) {
  table.validate();
  out.write(kEmbeddingMagic, 4);
  binio::put<std::uint32_t>(out, kEmbeddingVersion);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(table.num_items()));
  binio::put<std::uint32_t>(out, table.dim);
  for (const auto& id : table.item_ids) binio::put_string(out, id);
  out.write(reinterpret_cast<const char*>(table.rows.data()),
            static_cast<std::streamsize>(table.rows.size() * sizeof(float)));
}

void write_table(const EmbeddingTable& table, const std::string& path) {
  atomic_write(path, [&](std::ostream& out) { write_table(table, out); }, true);
}

EmbeddingTable read_table(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, 4)) throw EmbeddingFormatError(Kind::kTruncated, "truncated header");
  if (std::memcmp(magic, kEmbeddingMagic, 4) != 0) {
    throw EmbeddingFormatError(Kind::kMagicMismatch, "bad magic, expected ZESR");
  }
  std::uint32_t version = 0, num_items = 0, dim = 0;
  if (!binio::get(in, version) || !binio::get(in, num_items) || !binio::get(in, dim)) {
    throw EmbeddingFormatError(Kind::kTruncated, "truncated header");
  }
  if (version != kEmbeddingVersion) {
    throw EmbeddingFormatError(Kind::kVersionMismatch, "unsupported version " + std::to_string(version));
  }

  EmbeddingTable table;
  table.dim = dim;
  table.item_ids.resize(num_items);
  std::unordered_set<std::string> seen;
  for (auto& id : table.item_ids) {
    if (!binio::get_string(in, id)) throw EmbeddingFormatError(Kind::kTruncated, "truncated id index");
    if (!seen.insert(id).second) throw EmbeddingFormatError(Kind::kDuplicateId, "duplicate item id: " + id);
  }

  const std::size_t count = static_cast<std::size_t>(num_items) * dim;
  table.rows.resize(count);
  in.read(reinterpret_cast<char*>(table.rows.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
    throw EmbeddingFormatError(Kind::kTruncated, "payload shorter than num_items x dim");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw EmbeddingFormatError(Kind::kTruncated, "trailing bytes after payload");
  }
  table.validate();
  return table;
}

EmbeddingTable read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_table(in);
}

std::size_t serialized_size(const std::vector<std::string>& ids, std::uint32_t dim) {
  std::size_t n = 4 + 3 * sizeof(std::uint32_t);
  for (const auto& id : ids) n += sizeof(std::uint16_t) + id.size();
  return n + ids.size() * static_cast<std::size_t>(dim) * sizeof(float);
}

std::vector<float> dummy_embedding(std::uint32_t dim) { return std::vector<float>(dim, 0.0f); }

}  // namespace zesrec
