#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "zesrec/common.hpp"

namespace zesrec {

/// Ordered list of item ids; an item's position is its ItemIndex.
class ItemCatalog {
 public:
  ItemCatalog() = default;
  explicit ItemCatalog(std::vector<std::string> ids);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(ItemIndex index) const { return ids_.at(index); }
  std::optional<ItemIndex> find(const std::string& id) const;
  /// Like find() but throws naming the missing id.
  ItemIndex at(const std::string& id) const;

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, ItemIndex> lookup_;
};

/// One user's events, non-decreasing in timestamp.
struct UserSequence {
  std::string user;
  std::vector<ItemIndex> items;
  std::vector<std::int64_t> timestamps;

  std::size_t size() const { return items.size(); }
};

/// Per-user, time-ordered implicit feedback. Users are kept sorted by id.
struct InteractionLog {
  std::vector<UserSequence> users;

  std::size_t num_events() const;
  std::size_t num_users() const { return users.size(); }
  const UserSequence* find_user(const std::string& user) const;
  std::optional<std::int64_t> min_timestamp() const;
  std::optional<std::int64_t> max_timestamp() const;
};

enum class UnknownItemPolicy { kStrict, kLenient };

struct IngestResult {
  InteractionLog log;
  std::size_t dropped_events = 0;  // unknown item ids (lenient mode)
  std::size_t dropped_users = 0;   // users left without any resolvable event
};

/// Reads the `user_id,item_id,timestamp` CSV. Sequences are sorted by
/// timestamp with ties kept in file order.
IngestResult ingest_interactions(std::istream& in, const ItemCatalog& catalog,
                                 UnknownItemPolicy policy = UnknownItemPolicy::kStrict,
                                 const std::string& source_name = "<stream>");
IngestResult ingest_interactions(const std::string& path, const ItemCatalog& catalog,
                                 UnknownItemPolicy policy = UnknownItemPolicy::kStrict);

void write_interactions(std::ostream& out, const InteractionLog& log, const ItemCatalog& catalog);

/// Groups raw (user, item, timestamp) events into a log, stable-sorting by time.
struct RawEvent {
  std::string user;
  ItemIndex item;
  std::int64_t timestamp;
};
InteractionLog make_log(const std::vector<RawEvent>& events);

enum class SplitMode { kRatio80_20, kTemporalWeek };

struct SplitSet {
  InteractionLog train;
  InteractionLog validation;
  InteractionLog test;
  SplitMode mode = SplitMode::kRatio80_20;
  std::string source_tag;
  std::string target_tag;
  /// Start of the held-out week (temporal mode only).
  std::optional<std::int64_t> test_window_start;
};

constexpr std::int64_t kSecondsPerDay = 86400;
constexpr std::int64_t kSecondsPerWeek = 7 * kSecondsPerDay;

/// Ratio mode: per user, the first 80% of events (by time) train and the
/// rest test; users with fewer than two events are train-only. Temporal
/// mode: the last week (counted from the log's first timestamp) is test.
/// In both modes 10% of train users then move wholesale to validation.
SplitSet build_splits(const InteractionLog& log, SplitMode mode, std::uint64_t seed);

/// Drops test events after the first day of the held-out week.
SplitSet keep_first_test_day(SplitSet splits);

/// Number of test events for a user with `n` events under the ratio split.
std::size_t ratio_test_count(std::size_t n);

struct DomainData {
  InteractionLog log;
  ItemCatalog catalog;
};

struct ZeroShotPair {
  DomainData source;
  DomainData target;
};

struct PairReport {
  std::vector<std::string> overlap_users;
  std::vector<std::string> overlap_items;
  std::optional<std::int64_t> max_source_timestamp;
  std::optional<std::int64_t> min_target_timestamp;
  bool pass = false;

  std::string to_json() const;
};

class ZeroShotViolation : public Error {
 public:
  using Error::Error;
};

/// Checks that source and target share no users and no items. In strict
/// mode a failing pair raises ZeroShotViolation naming the offending ids.
/// `target_test` narrows the informational leakage check to test events.
PairReport validate_zero_shot_pair(const ZeroShotPair& pair, bool strict = false,
                                   const InteractionLog* target_test = nullptr);

/// Removes elements equal to their immediate predecessor.
template <typename T>
std::vector<T> dedup_consecutive(const std::vector<T>& sequence) {
  std::vector<T> out;
  out.reserve(sequence.size());
  for (const auto& x : sequence) {
    if (out.empty() || !(out.back() == x)) out.push_back(x);
  }
  return out;
}

/// Same rule applied to a user sequence, keeping the first event of a run.
UserSequence dedup_consecutive(const UserSequence& sequence);

/// Concatenates two time-disjoint logs user by user (first then second).
InteractionLog merge_logs(const InteractionLog& first, const InteractionLog& second);

}  // namespace zesrec
