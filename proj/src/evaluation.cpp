#include "zesrec/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "csv.hpp"

namespace zesrec {

std::size_t rank_of(std::span<const double> scores, ItemIndex truth) {
  const double s = scores[truth];
  std::size_t ahead = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > s || (scores[j] == s && j < truth)) ++ahead;
  }
  return ahead + 1;
}

std::string MetricReport::to_json(const std::string& model, const std::string& dataset) const {
  nlohmann::json j;
  j["model"] = model;
  j["dataset"] = dataset;
  j["k"] = k;
  j["ndcg"] = ndcg;
  j["recall"] = recall;
  j["n_events"] = n_events;
  return j.dump();
}

std::string MetricReport::csv_row(const std::string& model, const std::string& dataset) const {
  std::ostringstream os;
  os << std::setprecision(17) << csv::quote(model) << ',' << csv::quote(dataset) << ',' << ndcg << ',' << recall << ','
     << n_events;
  return os.str();
}

std::vector<EvalSequence> build_eval_sequences(const InteractionLog& history, const InteractionLog& test) {
  std::vector<EvalSequence> out;
  out.reserve(test.users.size());
  for (const auto& t : test.users) {
    EvalSequence seq;
    seq.user = t.user;
    auto add = [&](ItemIndex item, std::int64_t ts, bool target) {
      if (!seq.items.empty() && seq.items.back() == item) return;
      seq.items.push_back(item);
      seq.timestamps.push_back(ts);
      seq.is_target.push_back(target);
    };
    if (const auto* h = history.find_user(t.user)) {
      for (std::size_t i = 0; i < h->size(); ++i) add(h->items[i], h->timestamps[i], false);
    }
    for (std::size_t i = 0; i < t.size(); ++i) add(t.items[i], t.timestamps[i], true);
    out.push_back(std::move(seq));
  }
  return out;
}

namespace {

void finish(MetricReport& report) {
  if (report.n_events == 0) throw Error("evaluation: no events to score");
  double ndcg = 0, recall = 0;
  for (const auto& e : report.events) {
    ndcg += ndcg_from_rank(e.rank, report.k);
    recall += recall_from_rank(e.rank, report.k);
  }
  report.ndcg = ndcg / static_cast<double>(report.n_events);
  report.recall = recall / static_cast<double>(report.n_events);
}

}  // namespace

MetricReport evaluate_next_item(const Recommender& rec, const std::vector<EvalSequence>& sequences, std::size_t k) {
  MetricReport report;
  report.k = k;
  std::vector<double> scores(rec.catalog_size());
  for (const auto& seq : sequences) {
    for (std::size_t t = 0; t < seq.items.size(); ++t) {
      if (!seq.is_target[t]) continue;
      if (t > 0 && seq.timestamps[t - 1] > seq.timestamps[t]) {
        throw Error("evaluation: context of user " + seq.user + " is not time-ordered");
      }
      rec.score(std::span<const ItemIndex>(seq.items.data(), t), scores);
      report.events.push_back({seq.user, t, rank_of(scores, seq.items[t])});
      ++report.n_events;
    }
  }
  finish(report);
  return report;
}

MetricReport evaluate_sequences(const Recommender& rec, const std::vector<std::vector<ItemIndex>>& sequences,
                                std::size_t k) {
  MetricReport report;
  report.k = k;
  std::vector<double> scores(rec.catalog_size());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& items = sequences[s];
    for (std::size_t t = 0; t < items.size(); ++t) {
      rec.score(std::span<const ItemIndex>(items.data(), t), scores);
      report.events.push_back({std::to_string(s), t, rank_of(scores, items[t])});
      ++report.n_events;
    }
  }
  finish(report);
  return report;
}

std::vector<InteractionLog> build_incremental_subsets(const InteractionLog& train,
                                                      const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw ConfigError("incremental sizes must be ascending");
  std::vector<std::size_t> order(train.users.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, "incremental"));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<InteractionLog> subsets;
  std::size_t taken = 0, interactions = 0;
  for (std::size_t budget : sizes) {
    while (interactions < budget && taken < order.size()) {
      interactions += train.users[order[taken]].size();
      ++taken;
    }
    if (interactions < budget) {
      throw Error("incremental: train split has only " + std::to_string(interactions) +
                  " interactions, need " + std::to_string(budget));
    }
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(taken));
    std::sort(chosen.begin(), chosen.end());  // keep users sorted by id
    InteractionLog subset;
    for (std::size_t i : chosen) subset.users.push_back(train.users[i]);
    subsets.push_back(std::move(subset));
  }
  return subsets;
}

void IncrementalCurve::write_csv(std::ostream& out) const {
  out << "size,model,ndcg20,recall20\n" << std::setprecision(17);
  for (const auto& p : points) {
    out << p.train_interactions << ',' << p.model << ',' << p.report.ndcg << ',' << p.report.recall << '\n';
  }
}

IncrementalCurve run_incremental(const IncrementalSetup& setup) {
  if (!setup.target_table || !setup.target_splits || !setup.zero_shot) {
    throw ConfigError("incremental: target data and zero-shot model are required");
  }
  const SplitSet& splits = *setup.target_splits;
  const auto eval = build_eval_sequences(merge_logs(splits.train, splits.validation), splits.test);
  const auto subsets = build_incremental_subsets(splits.train, setup.sizes, setup.seed);
  const MetricReport zero_shot = evaluate_next_item(*setup.zero_shot, eval, setup.k);

  IncrementalCurve curve;
  for (std::size_t s = 0; s < setup.sizes.size(); ++s) {
    curve.points.push_back({setup.sizes[s], setup.zero_shot_tag, zero_shot});
    for (const auto& tag : setup.in_domain_models) {
      const ModelKind kind = parse_model_kind(tag);
      if (!is_in_domain_sequence_model(kind)) throw ConfigError("incremental: '" + tag + "' is not trainable in-domain");
      EncoderConfig enc = setup.encoder;
      enc.kind = (kind == ModelKind::kTcn || kind == ModelKind::kTcnMeta) ? EncoderKind::kTcn : EncoderKind::kGru;
      const bool meta = kind == ModelKind::kGru4RecMeta || kind == ModelKind::kTcnMeta;
      const TrainResult trained =
          train_id_model(subsets[s], splits.validation, *setup.target_table, setup.train, enc, meta);
      const auto rec = in_domain_recommender(trained.params, *setup.target_table, setup.train.max_history);
      curve.points.push_back({setup.sizes[s], tag, evaluate_next_item(*rec, eval, setup.k)});
    }
  }
  return curve;
}

Descriptions read_descriptions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  Descriptions out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    csv::strip_cr(line);
    if (line_no == 1 || line.empty()) continue;
    auto fields = csv::split(line);
    if (!fields || fields->size() != 2) throw ParseError(path, line_no, "expected item_id,description");
    out[(*fields)[0]] = (*fields)[1];
  }
  return out;
}

namespace {

CaseUser case_user(const std::string& user, std::span<const ItemIndex> items, const ItemCatalog& catalog,
                   const Descriptions* text) {
  CaseUser out;
  out.user = user;
  for (ItemIndex j : items) {
    out.items.push_back(catalog.id(j));
    std::string d;
    if (text) {
      auto it = text->find(catalog.id(j));
      if (it != text->end()) d = it->second;
    }
    out.descriptions.push_back(std::move(d));
  }
  return out;
}

double cosine(const Vector& a, const Vector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace

std::vector<CasePair> find_case_pairs(const InteractionLog& target_users, const TargetIndex& target_index,
                                      const InteractionLog& source_users, const TargetIndex& source_index,
                                      const ModelParams& params, const CaseStudyOptions& opts,
                                      const Descriptions* source_text, const Descriptions* target_text) {
  const std::size_t ctx = opts.context;
  const std::size_t cutoff = opts.filter == CaseFilter::kTop1 ? 1 : opts.k;

  struct SourceEmbedding {
    const UserSequence* seq;
    std::vector<ItemIndex> items;
    Vector u;
  };
  std::vector<SourceEmbedding> pool;
  for (const auto& s : source_users.users) {
    auto items = dedup_consecutive(s.items);
    if (items.size() < ctx) continue;
    items.resize(ctx);
    Vector u = user_embedding(params, source_index.latent, items, 0);
    pool.push_back({&s, std::move(items), std::move(u)});
  }

  std::vector<CasePair> out;
  for (const auto& t : target_users.users) {
    const auto items = dedup_consecutive(t.items);
    if (items.size() < ctx + 1) continue;
    const std::span<const ItemIndex> first(items.data(), ctx);
    const Vector u = user_embedding(params, target_index.latent, first, 0);
    const Vector scores = inner_products(u, target_index.latent.vectors);
    const std::size_t rank =
        rank_of(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), items[ctx]);
    if (rank > cutoff) continue;

    CasePair pair;
    pair.target = case_user(t.user, std::span<const ItemIndex>(items.data(), ctx + 1), target_index.catalog, target_text);
    pair.next_item_rank = rank;
    std::vector<std::pair<double, std::size_t>> sims;
    for (std::size_t i = 0; i < pool.size(); ++i) sims.emplace_back(cosine(u, pool[i].u), i);
    const std::size_t n = std::min(opts.k_query, sims.size());
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(n), sims.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t i = 0; i < n; ++i) {
      const auto& src = pool[sims[i].second];
      const auto full = dedup_consecutive(src.seq->items);
      pair.neighbors.push_back(
          {case_user(src.seq->user, std::span<const ItemIndex>(full.data(), std::min(full.size(), ctx + 1)),
                     source_index.catalog, source_text),
           sims[i].first});
    }
    out.push_back(std::move(pair));
  }
  return out;
}

std::string to_json(const std::vector<CasePair>& pairs) {
  auto user_json = [](const CaseUser& u) {
    nlohmann::json j;
    j["user_id"] = u.user;
    j["items"] = u.items;
    j["descriptions"] = u.descriptions;
    return j;
  };
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : pairs) {
    nlohmann::json j;
    j["target"] = user_json(p.target);
    j["next_item_rank"] = p.next_item_rank;
    j["neighbors"] = nlohmann::json::array();
    for (const auto& n : p.neighbors) {
      auto nj = user_json(n.user);
      nj["similarity"] = n.similarity;
      j["neighbors"].push_back(nj);
    }
    arr.push_back(j);
  }
  return arr.dump(2);
}

}  // namespace zesrec
