#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "zesrec/baselines.hpp"
#include "zesrec/data_model.hpp"
#include "zesrec/embedding_io.hpp"
#include "zesrec/inference.hpp"
#include "zesrec/model.hpp"

namespace zesrec {

// ---------------------------------------------------------------------------
// Single-relevant-item metrics. Ranks are 1-based.

/// 1/log2(1 + rank) when rank <= k, else 0 (the ideal DCG is 1).
inline double ndcg_from_rank(std::size_t rank, std::size_t k) {
  return rank >= 1 && rank <= k ? 1.0 / std::log2(1.0 + static_cast<double>(rank)) : 0.0;
}

inline double recall_from_rank(std::size_t rank, std::size_t k) { return rank >= 1 && rank <= k ? 1.0 : 0.0; }

/// Rank of `truth` in `ranked`, or 0 if absent.
template <typename Id>
std::size_t rank_in(std::span<const Id> ranked, const Id& truth) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i] == truth) return i + 1;
  }
  return 0;
}

template <typename Id>
double ndcg_at_k(std::span<const Id> ranked, const Id& truth, std::size_t k) {
  return ndcg_from_rank(rank_in(ranked, truth), k);
}

template <typename Id>
double recall_at_k(std::span<const Id> ranked, const Id& truth, std::size_t k) {
  return recall_from_rank(rank_in(ranked, truth), k);
}

/// Rank `truth` would get in a full descending sort of `scores` with ties
/// broken by ascending catalog position. O(J), no sort.
std::size_t rank_of(std::span<const double> scores, ItemIndex truth);

// ---------------------------------------------------------------------------
// Next-item protocol.

struct EventRecord {
  std::string user;
  std::size_t position = 0;  // index into the user's deduplicated sequence
  std::size_t rank = 0;      // rank of the true item in the full catalog
};

struct MetricReport {
  std::size_t k = 20;
  double ndcg = 0;
  double recall = 0;
  std::size_t n_events = 0;
  std::vector<EventRecord> events;

  std::string to_json(const std::string& model, const std::string& dataset) const;
  /// `model,dataset,ndcg20,recall20,n_events`
  std::string csv_row(const std::string& model, const std::string& dataset) const;
};

/// A user's full deduplicated sequence with the events to be scored marked.
struct EvalSequence {
  std::string user;
  std::vector<ItemIndex> items;
  std::vector<std::int64_t> timestamps;
  std::vector<bool> is_target;
};

/// Joins each test user's earlier events (from `history`) with their test
/// events, removes consecutive repeats and marks the surviving test events.
std::vector<EvalSequence> build_eval_sequences(const InteractionLog& history, const InteractionLog& test);

/// For every marked event, ranks the catalog given everything before it in
/// the user's sequence and scores the true item.
MetricReport evaluate_next_item(const Recommender& rec, const std::vector<EvalSequence>& sequences,
                                std::size_t k = 20);

/// Scores every position of every sequence (validation use).
MetricReport evaluate_sequences(const Recommender& rec, const std::vector<std::vector<ItemIndex>>& sequences,
                                std::size_t k = 20);

// ---------------------------------------------------------------------------
// Incremental training experiment.

/// Whole-user nested subsets: users are drawn in one seeded random order and
/// added until each interaction budget is met.
std::vector<InteractionLog> build_incremental_subsets(const InteractionLog& train,
                                                      const std::vector<std::size_t>& sizes, std::uint64_t seed);

struct CurvePoint {
  std::size_t train_interactions = 0;
  std::string model;
  MetricReport report;
};

struct IncrementalCurve {
  std::vector<CurvePoint> points;

  /// `size,model,ndcg20,recall20`
  void write_csv(std::ostream& out) const;
};

struct IncrementalSetup {
  const EmbeddingTable* target_table = nullptr;
  const SplitSet* target_splits = nullptr;
  /// Zero-shot model evaluated once, unchanged, at every size.
  const Recommender* zero_shot = nullptr;
  std::string zero_shot_tag = "zesrec-g";
  std::vector<std::string> in_domain_models = {"gru4rec"};
  std::vector<std::size_t> sizes = {2500, 5000, 10000};
  TrainConfig train;
  EncoderConfig encoder;
  std::size_t k = 20;
  std::uint64_t seed = 0;
};

IncrementalCurve run_incremental(const IncrementalSetup& setup);

// ---------------------------------------------------------------------------
// Case study.

using Descriptions = std::map<std::string, std::string>;

/// Reads `item_id,description` CSV.
Descriptions read_descriptions(const std::string& path);

enum class CaseFilter { kTop1, kTopK };

struct CaseUser {
  std::string user;
  std::vector<std::string> items;
  std::vector<std::string> descriptions;
};

struct CaseNeighbor {
  CaseUser user;
  double similarity = 0;
};

struct CasePair {
  CaseUser target;
  std::size_t next_item_rank = 0;
  std::vector<CaseNeighbor> neighbors;
};

struct CaseStudyOptions {
  std::size_t context = 5;
  std::size_t k_query = 3;
  CaseFilter filter = CaseFilter::kTopK;
  std::size_t k = 20;
};

/// Keeps target users whose (context+1)-th item ranks within the filter
/// given the first `context` items, then finds the source users whose
/// first-`context` embeddings are most similar (cosine).
std::vector<CasePair> find_case_pairs(const InteractionLog& target_users, const TargetIndex& target_index,
                                      const InteractionLog& source_users, const TargetIndex& source_index,
                                      const ModelParams& params, const CaseStudyOptions& opts,
                                      const Descriptions* source_text = nullptr,
                                      const Descriptions* target_text = nullptr);

std::string to_json(const std::vector<CasePair>& pairs);

}  // namespace zesrec
