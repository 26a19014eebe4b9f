#include "zesrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "csv.hpp"

namespace zesrec {

namespace {

std::string padded(std::size_t n, std::size_t width) {
  std::string s = std::to_string(n);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

SyntheticDomain make_domain(const SyntheticConfig& cfg, const std::string& tag, std::size_t num_items,
                            std::size_t num_users, const std::vector<std::vector<double>>& centres,
                            const std::vector<std::size_t>& next_cluster, std::mt19937_64& rng) {
  const std::size_t C = centres.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.content_dim));
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticDomain d;
  d.table.dim = cfg.content_dim;
  std::vector<std::vector<ItemIndex>> members(C);
  for (std::size_t j = 0; j < num_items; ++j) {
    const std::size_t c = j % C;
    d.item_cluster.push_back(c);
    members[c].push_back(static_cast<ItemIndex>(j));
    const std::string id = tag + "_i" + padded(j, 4);
    d.table.item_ids.push_back(id);
    for (std::uint32_t k = 0; k < cfg.content_dim; ++k) {
      d.table.rows.push_back(static_cast<float>(centres[c][k] + cfg.noise * scale * gauss(rng)));
    }
    d.descriptions[id] = "cluster " + std::to_string(c) + " item " + std::to_string(j);
  }

  std::uniform_int_distribution<std::size_t> pick_cluster(0, C - 1);
  std::uniform_int_distribution<std::size_t> pick_len(cfg.min_length, cfg.max_length);
  std::uniform_int_distribution<std::int64_t> start_offset(0, 21 * kSecondsPerDay);
  std::uniform_int_distribution<std::int64_t> gap(600, 36000);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<RawEvent> events;
  for (std::size_t u = 0; u < num_users; ++u) {
    const std::string user = tag + "_u" + padded(u, 5);
    const std::size_t len = pick_len(rng);
    std::int64_t ts = cfg.base_timestamp + start_offset(rng);
    std::size_t cluster = pick_cluster(rng);
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0) cluster = coin(rng) < cfg.follow_prob ? next_cluster[cluster] : pick_cluster(rng);
      const auto& pool = members[cluster];
      std::uniform_int_distribution<std::size_t> pick_item(0, pool.size() - 1);
      events.push_back({user, pool[pick_item(rng)], ts});
      ts += gap(rng);
    }
  }
  d.log = make_log(events);
  return d;
}

}  // namespace

SyntheticPair generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.source_items < 2 || cfg.target_items < 2) throw ConfigError("synthetic: need at least 2 items per domain");
  if (cfg.clusters < 2 || cfg.clusters > std::min(cfg.source_items, cfg.target_items)) {
    throw ConfigError("synthetic: clusters must be in [2, min(items)]");
  }
  if (cfg.min_length < 1 || cfg.max_length < cfg.min_length) throw ConfigError("synthetic: bad sequence lengths");
  if (cfg.content_dim < 1) throw ConfigError("synthetic: content_dim must be positive");

  std::mt19937_64 rng(derive_seed(seed, "synthetic"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.content_dim));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> centres(cfg.clusters, std::vector<double>(cfg.content_dim));
  for (auto& c : centres) {
    for (auto& x : c) x = scale * gauss(rng);
  }

  // A random cyclic order over clusters; no cluster maps to itself.
  std::vector<std::size_t> cycle(cfg.clusters);
  std::iota(cycle.begin(), cycle.end(), 0);
  std::shuffle(cycle.begin(), cycle.end(), rng);
  std::vector<std::size_t> next(cfg.clusters);
  for (std::size_t i = 0; i < cycle.size(); ++i) next[cycle[i]] = cycle[(i + 1) % cycle.size()];

  SyntheticPair pair;
  pair.next_cluster = next;
  pair.follow_prob = cfg.follow_prob;
  pair.source = make_domain(cfg, "s", cfg.source_items, cfg.source_users, centres, next, rng);
  pair.target = make_domain(cfg, "t", cfg.target_items, cfg.target_users, centres, next, rng);
  return pair;
}

void write_synthetic_domain(const SyntheticDomain& domain, const std::string& dir, const std::string& prefix) {
  std::filesystem::create_directories(dir);
  const std::string base = (std::filesystem::path(dir) / prefix).string();
  const ItemCatalog catalog = domain.table.catalog();
  atomic_write(base + "_interactions.csv", [&](std::ostream& out) { write_interactions(out, domain.log, catalog); });
  write_table(domain.table, base + "_embeddings.zesr");
  atomic_write(base + "_descriptions.csv", [&](std::ostream& out) {
    out << "item_id,description\n";
    for (const auto& id : domain.table.item_ids) {
      out << csv::quote(id) << ',' << csv::quote(domain.descriptions.at(id)) << '\n';
    }
  });
}

PlantedRecommender::PlantedRecommender(const SyntheticDomain& domain, const std::vector<std::size_t>& next_cluster,
                                       double follow_prob)
    : item_cluster_(domain.item_cluster),
      cluster_size_(next_cluster.size(), 0),
      next_cluster_(next_cluster),
      follow_prob_(follow_prob) {
  for (std::size_t c : item_cluster_) ++cluster_size_[c];
}

void PlantedRecommender::score(std::span<const ItemIndex> history, std::span<double> out) const {
  const auto C = static_cast<double>(next_cluster_.size());
  for (std::size_t j = 0; j < item_cluster_.size(); ++j) {
    const std::size_t c = item_cluster_[j];
    double p = 1.0 / C;
    if (!history.empty()) {
      const std::size_t expected = next_cluster_[item_cluster_[history.back()]];
      p = (1.0 - follow_prob_) / C + (c == expected ? follow_prob_ : 0.0);
    }
    out[j] = p / static_cast<double>(cluster_size_[c]);
  }
}

}  // namespace zesrec
