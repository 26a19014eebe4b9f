#include "zesrec/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "csv.hpp"

namespace zesrec {

ItemCatalog::ItemCatalog(std::vector<std::string> ids) : ids_(std::move(ids)) {
  lookup_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!lookup_.emplace(ids_[i], static_cast<ItemIndex>(i)).second) {
      throw Error("duplicate item id in catalog: " + ids_[i]);
    }
  }
}

std::optional<ItemIndex> ItemCatalog::find(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

ItemIndex ItemCatalog::at(const std::string& id) const {
  auto found = find(id);
  if (!found) throw Error("unknown item id: " + id);
  return *found;
}

std::size_t InteractionLog::num_events() const {
  std::size_t n = 0;
  for (const auto& u : users) n += u.size();
  return n;
}

const UserSequence* InteractionLog::find_user(const std::string& user) const {
  auto it = std::lower_bound(users.begin(), users.end(), user,
                             [](const UserSequence& s, const std::string& id) { return s.user < id; });
  if (it == users.end() || it->user != user) return nullptr;
  return &*it;
}

std::optional<std::int64_t> InteractionLog::min_timestamp() const {
  std::optional<std::int64_t> out;
  for (const auto& u : users) {
    if (!u.timestamps.empty()) out = std::min(out.value_or(u.timestamps.front()), u.timestamps.front());
  }
  return out;
}

std::optional<std::int64_t> InteractionLog::max_timestamp() const {
  std::optional<std::int64_t> out;
  for (const auto& u : users) {
    if (!u.timestamps.empty()) out = std::max(out.value_or(u.timestamps.back()), u.timestamps.back());
  }
  return out;
}

InteractionLog make_log(const std::vector<RawEvent>& events) {
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < events.size(); ++i) by_user[events[i].user].push_back(i);

  InteractionLog log;
  log.users.reserve(by_user.size());
  for (auto& [user, rows] : by_user) {
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return events[a].timestamp < events[b].timestamp;
    });
    UserSequence seq;
    seq.user = user;
    for (std::size_t r : rows) {
      seq.items.push_back(events[r].item);
      seq.timestamps.push_back(events[r].timestamp);
    }
    log.users.push_back(std::move(seq));
  }
  return log;
}

IngestResult ingest_interactions(std::istream& in, const ItemCatalog& catalog, UnknownItemPolicy policy,
                                 const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(source_name, 1, "missing header");
  ++line_no;
  csv::strip_cr(line);
  if (line != "user_id,item_id,timestamp") {
    throw ParseError(source_name, line_no, "expected header user_id,item_id,timestamp");
  }

  std::vector<RawEvent> events;
  std::set<std::string> seen_users;
  IngestResult result;
  while (std::getline(in, line)) {
    ++line_no;
    csv::strip_cr(line);
    if (line.empty()) continue;
    auto fields = csv::split(line);
    if (!fields || fields->size() != 3) throw ParseError(source_name, line_no, "expected 3 fields");
    const auto& [user, item, ts_text] = std::tie((*fields)[0], (*fields)[1], (*fields)[2]);
    if (user.empty()) throw ParseError(source_name, line_no, "empty user_id");
    std::int64_t ts = 0;
    auto [ptr, ec] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ts);
    if (ec != std::errc() || ptr != ts_text.data() + ts_text.size()) {
      throw ParseError(source_name, line_no, "bad timestamp '" + ts_text + "'");
    }
    seen_users.insert(user);
    auto index = catalog.find(item);
    if (!index) {
      if (policy == UnknownItemPolicy::kStrict) {
        throw ParseError(source_name, line_no, "unknown item id '" + item + "'");
      }
      ++result.dropped_events;
      continue;
    }
    events.push_back({user, *index, ts});
  }
  result.log = make_log(events);
  result.dropped_users = seen_users.size() - result.log.num_users();
  return result;
}

IngestResult ingest_interactions(const std::string& path, const ItemCatalog& catalog, UnknownItemPolicy policy) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return ingest_interactions(in, catalog, policy, path);
}

void write_interactions(std::ostream& out, const InteractionLog& log, const ItemCatalog& catalog) {
  out << "user_id,item_id,timestamp\n";
  for (const auto& u : log.users) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      out << csv::quote(u.user) << ',' << csv::quote(catalog.id(u.items[i])) << ',' << u.timestamps[i] << '\n';
    }
  }
}

std::size_t ratio_test_count(std::size_t n) {
  if (n < 2) return 0;
  const auto rounded = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  return std::clamp<std::size_t>(rounded, 1, n - 1);
}

namespace {

UserSequence slice(const UserSequence& s, std::size_t begin, std::size_t end) {
  UserSequence out;
  out.user = s.user;
  out.items.assign(s.items.begin() + begin, s.items.begin() + end);
  out.timestamps.assign(s.timestamps.begin() + begin, s.timestamps.begin() + end);
  return out;
}

void move_validation_users(SplitSet& splits, std::uint64_t seed) {
  std::vector<std::size_t> order(splits.train.users.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(derive_seed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(order.size())));

  std::vector<bool> is_val(order.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;

  InteractionLog train;
  for (std::size_t i = 0; i < splits.train.users.size(); ++i) {
    auto& seq = splits.train.users[i];
    (is_val[i] ? splits.validation : train).users.push_back(std::move(seq));
  }
  splits.train = std::move(train);
}

}  // namespace

SplitSet build_splits(const InteractionLog& log, SplitMode mode, std::uint64_t seed) {
  SplitSet splits;
  splits.mode = mode;

  if (mode == SplitMode::kRatio80_20) {
    for (const auto& u : log.users) {
      const std::size_t n_test = ratio_test_count(u.size());
      const std::size_t n_train = u.size() - n_test;
      if (n_train > 0) splits.train.users.push_back(slice(u, 0, n_train));
      if (n_test > 0) splits.test.users.push_back(slice(u, n_train, u.size()));
    }
  } else {
    const auto t_min = log.min_timestamp();
    if (!t_min) throw Error("cannot split an empty log");
    std::set<std::int64_t> weeks;
    for (const auto& u : log.users) {
      for (auto ts : u.timestamps) weeks.insert((ts - *t_min) / kSecondsPerWeek);
    }
    if (weeks.size() < 5) {
      throw Error("temporal_week split needs timestamps spanning at least 5 weeks, got " +
                  std::to_string(weeks.size()));
    }
    const std::int64_t last_week = *weeks.rbegin();
    const std::int64_t cut = *t_min + last_week * kSecondsPerWeek;
    splits.test_window_start = cut;
    for (const auto& u : log.users) {
      const auto first_test =
          static_cast<std::size_t>(std::lower_bound(u.timestamps.begin(), u.timestamps.end(), cut) -
                                   u.timestamps.begin());
      if (first_test > 0) splits.train.users.push_back(slice(u, 0, first_test));
      if (first_test < u.size()) splits.test.users.push_back(slice(u, first_test, u.size()));
    }
  }

  if (splits.test.num_events() == 0) throw Error("split produced an empty test set");
  move_validation_users(splits, seed);
  return splits;
}

SplitSet keep_first_test_day(SplitSet splits) {
  if (!splits.test_window_start) throw ConfigError("first-day filter requires a temporal_week split");
  const std::int64_t end = *splits.test_window_start + kSecondsPerDay;
  InteractionLog kept;
  for (const auto& u : splits.test.users) {
    const auto n =
        static_cast<std::size_t>(std::lower_bound(u.timestamps.begin(), u.timestamps.end(), end) -
                                 u.timestamps.begin());
    if (n > 0) kept.users.push_back(slice(u, 0, n));
  }
  if (kept.num_events() == 0) throw Error("first-day filter left no test events");
  splits.test = std::move(kept);
  return splits;
}

PairReport validate_zero_shot_pair(const ZeroShotPair& pair, bool strict, const InteractionLog* target_test) {
  PairReport report;

  std::set<std::string> source_users;
  for (const auto& u : pair.source.log.users) source_users.insert(u.user);
  for (const auto& u : pair.target.log.users) {
    if (source_users.count(u.user)) report.overlap_users.push_back(u.user);
  }
  const std::set<std::string> source_items(pair.source.catalog.ids().begin(), pair.source.catalog.ids().end());
  for (const auto& id : pair.target.catalog.ids()) {
    if (source_items.count(id)) report.overlap_items.push_back(id);
  }
  std::sort(report.overlap_users.begin(), report.overlap_users.end());
  std::sort(report.overlap_items.begin(), report.overlap_items.end());

  report.max_source_timestamp = pair.source.log.max_timestamp();
  report.min_target_timestamp = (target_test ? *target_test : pair.target.log).min_timestamp();
  report.pass = report.overlap_users.empty() && report.overlap_items.empty();

  if (strict && !report.pass) {
    std::string msg = "source and target overlap;";
    if (!report.overlap_users.empty()) {
      msg += " users:";
      for (const auto& u : report.overlap_users) msg += " " + u;
    }
    if (!report.overlap_items.empty()) {
      msg += " items:";
      for (const auto& i : report.overlap_items) msg += " " + i;
    }
    throw ZeroShotViolation(msg);
  }
  return report;
}

std::string PairReport::to_json() const {
  nlohmann::json j;
  j["overlap_users"] = overlap_users;
  j["overlap_items"] = overlap_items;
  j["pass"] = pass;
  j["max_source_timestamp"] = max_source_timestamp ? nlohmann::json(*max_source_timestamp) : nlohmann::json();
  j["min_target_timestamp"] = min_target_timestamp ? nlohmann::json(*min_target_timestamp) : nlohmann::json();
  if (max_source_timestamp && min_target_timestamp) {
    j["source_precedes_target"] = *max_source_timestamp < *min_target_timestamp;
  }
  return j.dump();
}

UserSequence dedup_consecutive(const UserSequence& sequence) {
  UserSequence out;
  out.user = sequence.user;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (!out.items.empty() && out.items.back() == sequence.items[i]) continue;
    out.items.push_back(sequence.items[i]);
    out.timestamps.push_back(sequence.timestamps[i]);
  }
  return out;
}

InteractionLog merge_logs(const InteractionLog& first, const InteractionLog& second) {
  std::map<std::string, UserSequence> merged;
  for (const auto* log : {&first, &second}) {
    for (const auto& u : log->users) {
      auto& dst = merged[u.user];
      dst.user = u.user;
      dst.items.insert(dst.items.end(), u.items.begin(), u.items.end());
      dst.timestamps.insert(dst.timestamps.end(), u.timestamps.begin(), u.timestamps.end());
    }
  }
  InteractionLog out;
  for (auto& [_, seq] : merged) out.users.push_back(std::move(seq));
  return out;
}

}  // namespace zesrec
