#pragma once

#include <iosfwd>
#include <string>

#include "zesrec/model.hpp"

namespace zesrec {

// Layout (little-endian):
//   "ZSCK" | u32 version = 1
//   u32 n_meta,    n_meta x (u16 len + key bytes, u16 len + value bytes)
//   u32 n_tensors, n_tensors x (u16 len + name bytes, u32 rows, u32 cols,
//                               rows*cols f64 row-major)
// Meta keys: indexing, encoder, dim, tcn_kernel, tcn_dilations, lambda_u,
// lambda_v. Tensor names follow tensors(ModelParams&).

inline constexpr char kCheckpointMagic[4] = {'Z', 'S', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  using Error::Error;
};

void write_checkpoint(const ModelParams& params, std::ostream& out);
void write_checkpoint(const ModelParams& params, const std::string& path);
ModelParams read_checkpoint(std::istream& in);
ModelParams read_checkpoint(const std::string& path);

}  // namespace zesrec
