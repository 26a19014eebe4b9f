#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "fixtures.hpp"
#include "zesrec/embedding_io.hpp"

using namespace zesrec;

namespace {

std::string bytes_of(const EmbeddingTable& t) {
  std::ostringstream out(std::ios::binary);
  write_table(t, out);
  return out.str();
}

EmbeddingTable parse(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_table(in);
}

EmbeddingFormatError::Kind kind_of(const std::string& bytes) {
  try {
    parse(bytes);
  } catch (const EmbeddingFormatError& e) {
    return e.kind();
  }
  FAIL("expected a format error");
  return EmbeddingFormatError::Kind::kInvalidTable;
}

}  // namespace

TEST_CASE("small table round trips to identical bytes") {
  EmbeddingTable t;
  t.dim = 4;
  t.item_ids = {"a", "b"};
  t.rows = {1, 2, 3, 4, -0.5f, 0, 1e-30f, 7};
  const auto b1 = bytes_of(t);
  const auto back = parse(b1);
  CHECK(back.item_ids == t.item_ids);
  CHECK(back.dim == 4);
  CHECK(std::memcmp(back.rows.data(), t.rows.data(), t.rows.size() * sizeof(float)) == 0);
  CHECK(bytes_of(back) == b1);
}

TEST_CASE("header layout") {
  EmbeddingTable t;
  t.dim = 1;
  t.item_ids = {"xy"};
  t.rows = {1.0f};
  const auto b = bytes_of(t);
  // magic, version, count, dim, u16 length + 2 bytes, one float
  CHECK(b.size() == 4 + 4 + 4 + 4 + 2 + 2 + 4);
  CHECK(b.substr(0, 4) == "ZESR");
  CHECK(static_cast<unsigned char>(b[4]) == 1);
  CHECK(static_cast<unsigned char>(b[16]) == 2);
  CHECK(b.substr(18, 2) == "xy");
}

TEST_CASE("serialized size of a 10K x 768 table") {
  std::vector<std::string> ids;
  std::size_t id_bytes = 0;
  for (int j = 0; j < 10000; ++j) {
    ids.push_back("item" + std::to_string(j));
    id_bytes += 2 + ids.back().size();
  }
  const std::size_t payload = 10000ull * 768 * 4;
  CHECK(payload == 30'720'000);
  CHECK(serialized_size(ids, 768) == 16 + id_bytes + payload);
}

TEST_CASE("round trip over random tables") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    const auto dim = static_cast<std::uint32_t>(1 + rng() % 12);
    const auto t = fixtures::random_table(n, dim, rng(), "id-\xC3\xA9-");
    const auto b = bytes_of(t);
    CHECK(b.size() == serialized_size(t.item_ids, dim));
    const auto back = parse(b);
    CHECK(back.item_ids == t.item_ids);
    CHECK(std::memcmp(back.rows.data(), t.rows.data(), t.rows.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("format errors are distinguished") {
  const auto good = bytes_of(fixtures::random_table(3, 2, 1));
  auto bad_magic = good;
  bad_magic.replace(0, 4, "XXXX");
  CHECK(kind_of(bad_magic) == EmbeddingFormatError::Kind::kMagicMismatch);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK(kind_of(bad_version) == EmbeddingFormatError::Kind::kVersionMismatch);

  CHECK(kind_of(good.substr(0, good.size() - 1)) == EmbeddingFormatError::Kind::kTruncated);
  CHECK(kind_of(good + "x") == EmbeddingFormatError::Kind::kTruncated);
  CHECK(kind_of(good.substr(0, 10)) == EmbeddingFormatError::Kind::kTruncated);

  EmbeddingTable dup = fixtures::random_table(2, 2, 1);
  dup.item_ids[1] = dup.item_ids[0];
  // Writing refuses invalid tables; hand-build the duplicate file instead.
  CHECK_THROWS_AS(bytes_of(dup), EmbeddingFormatError);
  auto dup_bytes = good;
  // ids are "i0","i1","i2": make the second equal the first.
  const auto pos = dup_bytes.find("i1");
  dup_bytes[pos + 1] = '0';
  CHECK(kind_of(dup_bytes) == EmbeddingFormatError::Kind::kDuplicateId);
}

TEST_CASE("non-finite values are rejected") {
  auto t = fixtures::random_table(2, 2, 3);
  t.rows[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(t.validate(), EmbeddingFormatError);
  t.rows[1] = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(bytes_of(t), EmbeddingFormatError);
}

TEST_CASE("dummy embedding is zero") {
  CHECK(dummy_embedding(3) == std::vector<float>{0, 0, 0});
}

TEST_CASE("file round trip") {
  const auto dir = fixtures::temp_dir("embio");
  const auto t = fixtures::random_table(5, 3, 8);
  const auto path = (dir / "t.zesr").string();
  write_table(t, path);
  const auto back = read_table(path);
  CHECK(back.item_ids == t.item_ids);
  CHECK(back.rows == t.rows);
  CHECK_THROWS(read_table((dir / "missing.zesr").string()));
}
