#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "zesrec/common.hpp"
#include "zesrec/data_model.hpp"

namespace zesrec {

/// Content embeddings of a catalog: row j is the frozen text-encoder output
/// for item j's description.
struct EmbeddingTable {
  std::uint32_t dim = 0;
  std::vector<std::string> item_ids;
  std::vector<float> rows;  // item_ids.size() x dim, row-major

  std::size_t num_items() const { return item_ids.size(); }
  const float* row(std::size_t j) const { return rows.data() + j * dim; }

  ItemCatalog catalog() const { return ItemCatalog(item_ids); }
  /// Rows widened to double for model arithmetic.
  Matrix as_matrix() const;
  /// Throws EmbeddingFormatError if ids repeat, shapes disagree or a value is not finite.
  void validate() const;
};

class EmbeddingFormatError : public Error {
 public:
  enum class Kind { kMagicMismatch, kVersionMismatch, kTruncated, kDuplicateId, kInvalidTable };
  EmbeddingFormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr char kEmbeddingMagic[4] = {'Z', 'E', 'S', 'R'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// Little-endian layout: "ZESR", u32 version, u32 num_items, u32 dim,
/// num_items x (u16 length + UTF-8 id), num_items*dim f32 row-major.
void write_table(const EmbeddingTable& table, std::ostream& out);
void write_table(const EmbeddingTable& table, const std::string& path);
EmbeddingTable read_table(std::istream& in);
EmbeddingTable read_table(const std::string& path);

/// Serialized size in bytes for the given ids and dimension.
std::size_t serialized_size(const std::vector<std::string>& ids, std::uint32_t dim);

/// Content embedding of the session-start item. It is never a candidate.
std::vector<float> dummy_embedding(std::uint32_t dim);

}  // namespace zesrec
