#include "zesrec/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "zesrec/baselines.hpp"
#include "zesrec/checkpoint.hpp"
#include "zesrec/config.hpp"
#include "zesrec/data_model.hpp"
#include "zesrec/embedding_io.hpp"
#include "zesrec/evaluation.hpp"
#include "zesrec/inference.hpp"
#include "zesrec/model.hpp"
#include "zesrec/synthetic.hpp"

namespace zesrec {

namespace fs = std::filesystem;

namespace {

struct LoadedDomain {
  EmbeddingTable table;
  ItemCatalog catalog;
  IngestResult ingest;
};

LoadedDomain load_domain(const RunConfig& cfg, const std::string& which) {
  cfg.require_path(which + "_embeddings");
  cfg.require_path(which + "_interactions");
  LoadedDomain d;
  d.table = read_table(cfg.get(which + "_embeddings"));
  d.catalog = d.table.catalog();
  const auto policy = cfg.get_bool("strict_items") ? UnknownItemPolicy::kStrict : UnknownItemPolicy::kLenient;
  d.ingest = ingest_interactions(cfg.get(which + "_interactions"), d.catalog, policy);
  return d;
}

SplitSet domain_splits(const RunConfig& cfg, const InteractionLog& log, bool allow_first_day) {
  const auto& mode_name = cfg.get("split_mode");
  SplitMode mode;
  if (mode_name == "ratio_80_20") {
    mode = SplitMode::kRatio80_20;
  } else if (mode_name == "temporal_week") {
    mode = SplitMode::kTemporalWeek;
  } else {
    throw ConfigError("split_mode: expected ratio_80_20 or temporal_week");
  }
  SplitSet splits = build_splits(log, mode, cfg.get_u64("seed"));
  if (allow_first_day && cfg.get_bool("first_day")) splits = keep_first_test_day(std::move(splits));
  return splits;
}

std::string dataset_tag(const RunConfig& cfg) {
  std::string tag = fs::path(cfg.get("target_interactions")).stem().string();
  if (cfg.get_bool("first_day")) tag += "@first_day";
  return tag;
}

fs::path out_dir(const RunConfig& cfg) {
  fs::path dir = cfg.get("out");
  fs::create_directories(dir);
  return dir;
}

std::string checkpoint_path(const RunConfig& cfg) {
  const auto& p = cfg.get("checkpoint");
  return p.empty() ? (out_dir(cfg) / "model.ckpt").string() : p;
}

void write_text(const fs::path& path, const std::string& text) {
  atomic_write(path.string(), [&](std::ostream& out) { out << text; });
}

void append_metrics_row(const fs::path& path, const std::string& row) {
  std::string existing;
  if (std::ifstream in(path); in) {
    std::stringstream ss;
    ss << in.rdbuf();
    existing = ss.str();
  }
  if (existing.empty()) existing = "model,dataset,ndcg20,recall20,n_events\n";
  write_text(path, existing + row + "\n");
}

EncoderKind encoder_for(ModelKind kind) {
  return (kind == ModelKind::kZesrecT || kind == ModelKind::kTcn || kind == ModelKind::kTcnMeta) ? EncoderKind::kTcn
                                                                                                  : EncoderKind::kGru;
}

bool is_zesrec(ModelKind kind) { return kind == ModelKind::kZesrecG || kind == ModelKind::kZesrecT; }

ModelParams load_zesrec(const RunConfig& cfg) {
  const std::string path = checkpoint_path(cfg);
  if (!fs::exists(path)) throw ConfigError("checkpoint not found: " + path + " (run `train` first)");
  ModelParams p = read_checkpoint(path);
  if (p.indexing != ItemIndexing::kContent) throw ConfigError("checkpoint is not a content-indexed model");
  return p;
}

std::vector<EvalSequence> target_eval_sequences(const SplitSet& splits) {
  return build_eval_sequences(merge_logs(splits.train, splits.validation), splits.test);
}

void write_recommendations(const fs::path& path, const Recommender& rec, const LoadedDomain& target,
                           const SplitSet& splits, const RunConfig& cfg) {
  RecommendOptions opts;
  opts.k = static_cast<std::size_t>(cfg.get_int("k"));
  opts.exclude_seen = cfg.get_bool("exclude_seen");
  const InteractionLog full = merge_logs(merge_logs(splits.train, splits.validation), splits.test);
  atomic_write(path.string(), [&](std::ostream& out) {
    for (const auto& t : splits.test.users) {
      const auto* u = full.find_user(t.user);
      std::vector<std::string> history;
      for (ItemIndex j : u->items) history.push_back(target.catalog.id(j));
      out << to_json_line(t.user, recommend_with(rec, target.catalog, history, opts)) << '\n';
    }
  });
}

int report_metrics(const RunConfig& cfg, const std::string& model, const MetricReport& report, std::ostream& out) {
  const fs::path dir = out_dir(cfg);
  const std::string tag = dataset_tag(cfg);
  write_text(dir / "metrics.json", report.to_json(model, tag) + "\n");
  append_metrics_row(dir / "metrics.csv", report.csv_row(model, tag));
  out << report.csv_row(model, tag) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg, const std::string& domain, std::ostream& out) {
  if (domain != "source" && domain != "target") throw ConfigError("--domain must be source or target");
  const LoadedDomain d = load_domain(cfg, domain);
  nlohmann::json j;
  j["domain"] = domain;
  j["users"] = d.ingest.log.num_users();
  j["items"] = d.catalog.size();
  j["interactions"] = d.ingest.log.num_events();
  j["dropped_events"] = d.ingest.dropped_events;
  j["dropped_users"] = d.ingest.dropped_users;
  const fs::path dir = out_dir(cfg);
  write_text(dir / (domain + "_ingest.json"), j.dump() + "\n");
  atomic_write((dir / (domain + "_clean.csv")).string(),
               [&](std::ostream& o) { write_interactions(o, d.ingest.log, d.catalog); });
  out << j.dump() << '\n';
  return 0;
}

int cmd_validate_pair(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const LoadedDomain s = load_domain(cfg, "source");
  const LoadedDomain t = load_domain(cfg, "target");
  const ZeroShotPair pair{{s.ingest.log, s.catalog}, {t.ingest.log, t.catalog}};
  const PairReport report = validate_zero_shot_pair(pair);
  write_text(out_dir(cfg) / "pair_report.json", report.to_json() + "\n");
  out << report.to_json() << '\n';
  if (!report.pass) {
    err << "error: source and target overlap (" << report.overlap_users.size() << " users, "
        << report.overlap_items.size() << " items)\n";
    return 1;
  }
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const ModelKind kind = parse_model_kind(cfg.get("model"));
  const TrainConfig tc = cfg.train_config();
  const EncoderConfig enc = cfg.encoder_config(encoder_for(kind));
  TrainResult result;
  if (is_zesrec(kind)) {
    const LoadedDomain src = load_domain(cfg, "source");
    const SplitSet splits = domain_splits(cfg, src.ingest.log, false);
    TrainingData data;
    data.content = src.table.as_matrix();
    data.train = training_sequences(splits.train, tc.max_history);
    data.validation = training_sequences(splits.validation, 0);
    ModelParams init = make_zesrec(static_cast<Eigen::Index>(src.table.dim), src.table.num_items(), enc, cfg.hyper(), tc.seed);
    result = train(std::move(init), data, tc);
  } else if (is_in_domain_sequence_model(kind)) {
    const LoadedDomain tgt = load_domain(cfg, "target");
    const SplitSet splits = domain_splits(cfg, tgt.ingest.log, false);
    const bool meta = kind == ModelKind::kGru4RecMeta || kind == ModelKind::kTcnMeta;
    result = train_id_model(splits.train, splits.validation, tgt.table, tc, enc, meta);
  } else {
    throw ConfigError("model '" + cfg.get("model") + "' has nothing to train");
  }
  const std::string ckpt = checkpoint_path(cfg);
  write_checkpoint(result.params, ckpt);
  atomic_write((out_dir(cfg) / "epochs.csv").string(), [&](std::ostream& o) { write_epoch_csv(o, result.epochs); });
  nlohmann::json j;
  j["checkpoint"] = ckpt;
  j["best_epoch"] = result.best_epoch;
  j["epochs"] = result.epochs.size();
  j["final_loss"] = result.epochs.back().loss;
  out << j.dump() << '\n';
  return 0;
}

int cmd_eval_zeroshot(const RunConfig& cfg, std::ostream& out) {
  const ModelKind kind = parse_model_kind(cfg.get("model"));
  const LoadedDomain tgt = load_domain(cfg, "target");
  const SplitSet splits = domain_splits(cfg, tgt.ingest.log, true);
  const std::size_t k = static_cast<std::size_t>(cfg.get_int("k"));
  const std::size_t max_history = static_cast<std::size_t>(cfg.get_int("max_history"));

  std::unique_ptr<Recommender> rec;
  if (is_zesrec(kind)) {
    const ModelParams params = load_zesrec(cfg);
    rec = std::make_unique<SequenceRecommender>(build_target_index(tgt.table, params).latent, params, max_history);
  } else if (kind == ModelKind::kKnn) {
    rec = std::make_unique<KnnRecommender>(tgt.table);
  } else if (kind == ModelKind::kRandom) {
    rec = std::make_unique<RandomRecommender>(tgt.catalog.size(), derive_seed(cfg.get_u64("seed"), "random"));
  } else {
    throw ConfigError("model '" + cfg.get("model") + "' is trained in-domain; use eval-indomain");
  }
  const MetricReport report = evaluate_next_item(*rec, target_eval_sequences(splits), k);
  write_recommendations(out_dir(cfg) / "recommendations.jsonl", *rec, tgt, splits, cfg);
  return report_metrics(cfg, cfg.get("model"), report, out);
}

int cmd_eval_indomain(const RunConfig& cfg, std::ostream& out) {
  const ModelKind kind = parse_model_kind(cfg.get("model"));
  const LoadedDomain tgt = load_domain(cfg, "target");
  const SplitSet splits = domain_splits(cfg, tgt.ingest.log, true);
  const std::size_t k = static_cast<std::size_t>(cfg.get_int("k"));
  const TrainConfig tc = cfg.train_config();

  std::unique_ptr<Recommender> rec;
  if (kind == ModelKind::kPop) {
    rec = std::make_unique<PopRecommender>(build_pop_model(splits.train, tgt.catalog));
  } else if (is_in_domain_sequence_model(kind)) {
    ModelParams params;
    const std::string ckpt = cfg.get("checkpoint");
    if (!ckpt.empty() && fs::exists(ckpt)) {
      params = read_checkpoint(ckpt);
    } else {
      const bool meta = kind == ModelKind::kGru4RecMeta || kind == ModelKind::kTcnMeta;
      params = train_id_model(splits.train, splits.validation, tgt.table, tc, cfg.encoder_config(encoder_for(kind)), meta)
                   .params;
    }
    rec = in_domain_recommender(params, tgt.table, tc.max_history);
  } else {
    throw ConfigError("model '" + cfg.get("model") + "' is not an in-domain model; use eval-zeroshot");
  }
  const MetricReport report = evaluate_next_item(*rec, target_eval_sequences(splits), k);
  write_recommendations(out_dir(cfg) / "recommendations.jsonl", *rec, tgt, splits, cfg);
  return report_metrics(cfg, cfg.get("model"), report, out);
}

int cmd_incremental(const RunConfig& cfg, std::ostream& out) {
  const LoadedDomain tgt = load_domain(cfg, "target");
  const SplitSet splits = domain_splits(cfg, tgt.ingest.log, true);
  const ModelParams params = load_zesrec(cfg);
  const std::size_t max_history = static_cast<std::size_t>(cfg.get_int("max_history"));
  const SequenceRecommender zero_shot(build_target_index(tgt.table, params).latent, params, max_history);

  IncrementalSetup setup;
  setup.target_table = &tgt.table;
  setup.target_splits = &splits;
  setup.zero_shot = &zero_shot;
  setup.zero_shot_tag = encoder_kind(params.encoder) == EncoderKind::kGru ? "zesrec-g" : "zesrec-t";
  setup.in_domain_models = cfg.get_list("incremental_models");
  setup.sizes = cfg.get_sizes("incremental_sizes");
  setup.train = cfg.train_config();
  setup.encoder = cfg.encoder_config(EncoderKind::kGru);
  setup.k = static_cast<std::size_t>(cfg.get_int("k"));
  setup.seed = cfg.get_u64("seed");
  const IncrementalCurve curve = run_incremental(setup);

  std::ostringstream csv;
  curve.write_csv(csv);
  write_text(out_dir(cfg) / "incremental.csv", csv.str());
  out << csv.str();
  return 0;
}

int cmd_case_study(const RunConfig& cfg, std::ostream& out) {
  const LoadedDomain src = load_domain(cfg, "source");
  const LoadedDomain tgt = load_domain(cfg, "target");
  const ModelParams params = load_zesrec(cfg);
  const SplitSet src_splits = domain_splits(cfg, src.ingest.log, false);
  const SplitSet tgt_splits = domain_splits(cfg, tgt.ingest.log, false);

  // Target queries are test-split users, seen from the start of their history.
  InteractionLog queries;
  for (const auto& u : tgt_splits.test.users) queries.users.push_back(*tgt.ingest.log.find_user(u.user));

  Descriptions src_text, tgt_text;
  if (!cfg.get("source_descriptions").empty()) src_text = read_descriptions(cfg.get("source_descriptions"));
  if (!cfg.get("target_descriptions").empty()) tgt_text = read_descriptions(cfg.get("target_descriptions"));

  CaseStudyOptions opts;
  opts.context = static_cast<std::size_t>(cfg.get_int("case_context"));
  opts.k_query = static_cast<std::size_t>(cfg.get_int("case_k_query"));
  opts.k = static_cast<std::size_t>(cfg.get_int("k"));
  const auto& filter = cfg.get("case_filter");
  if (filter == "top1") {
    opts.filter = CaseFilter::kTop1;
  } else if (filter == "topk") {
    opts.filter = CaseFilter::kTopK;
  } else {
    throw ConfigError("case_filter: expected top1 or topk");
  }
  const auto pairs = find_case_pairs(queries, build_target_index(tgt.table, params), src_splits.train,
                                     build_target_index(src.table, params), params, opts, &src_text, &tgt_text);
  write_text(out_dir(cfg) / "case_study.json", to_json(pairs) + "\n");
  out << "{\"pairs\":" << pairs.size() << "}\n";
  return 0;
}

int cmd_gen_synthetic(const RunConfig& cfg, std::ostream& out) {
  const SyntheticPair pair = generate_synthetic(cfg.synthetic_config(), cfg.get_u64("seed"));
  const fs::path dir = fs::absolute(out_dir(cfg));
  write_synthetic_domain(pair.source, dir.string(), "source");
  write_synthetic_domain(pair.target, dir.string(), "target");
  std::ostringstream conf;
  for (const std::string side : {"source", "target"}) {
    conf << side << "_interactions = " << (dir / (side + "_interactions.csv")).string() << '\n'
         << side << "_embeddings = " << (dir / (side + "_embeddings.zesr")).string() << '\n'
         << side << "_descriptions = " << (dir / (side + "_descriptions.csv")).string() << '\n';
  }
  conf << "dim = 32\n";
  write_text(dir / "synthetic.conf", conf.str());
  nlohmann::json j;
  j["source_interactions"] = pair.source.log.num_events();
  j["target_interactions"] = pair.target.log.num_events();
  j["config"] = (dir / "synthetic.conf").string();
  out << j.dump() << '\n';
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-shot sequential recommender"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, model, out_path, domain = "source";
  std::uint64_t seed = 0;
  int k = 0;
  bool exclude_seen = false, first_day = false;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--seed", seed, "master random seed");
  app.add_option("--model", model,
                 "zesrec-g|zesrec-t|knn|pop|random|gru4rec|gru4rec-meta|tcn|tcn-meta");
  app.add_option("--k", k, "cutoff for ranking metrics (default 20)");
  app.add_flag("--exclude-seen", exclude_seen, "drop history items from recommendations");
  app.add_flag("--first-day", first_day, "score only the first day of the held-out week");
  app.add_option("--out", out_path, "output directory");
  app.add_option("--set", overrides, "override a config key (key=value)");

  auto* ingest = app.add_subcommand("ingest", "parse and summarize an interaction file");
  ingest->add_option("--domain", domain, "source or target");
  app.add_subcommand("validate-pair", "check that source and target share no users or items");
  app.add_subcommand("train", "train ZESRec on the source (or an in-domain model on the target)");
  app.add_subcommand("eval-zeroshot", "evaluate a zero-shot model on the target test split");
  app.add_subcommand("eval-indomain", "evaluate an in-domain model on the target test split");
  app.add_subcommand("incremental", "in-domain models on growing target subsets vs. zero-shot");
  app.add_subcommand("case-study", "pair target users with similar source users");
  app.add_subcommand("gen-synthetic", "write a planted two-domain corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (app.count("--seed")) cfg.set("seed", std::to_string(seed));
    if (!model.empty()) cfg.set("model", model);
    if (app.count("--k")) cfg.set("k", std::to_string(k));
    if (exclude_seen) cfg.set("exclude_seen", "true");
    if (first_day) cfg.set("first_day", "true");
    if (!out_path.empty()) cfg.set("out", out_path);

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "ingest") return cmd_ingest(cfg, domain, out);
    if (cmd == "validate-pair") return cmd_validate_pair(cfg, out, err);
    if (cmd == "train") return cmd_train(cfg, out);
    if (cmd == "eval-zeroshot") return cmd_eval_zeroshot(cfg, out);
    if (cmd == "eval-indomain") return cmd_eval_indomain(cfg, out);
    if (cmd == "incremental") return cmd_incremental(cfg, out);
    if (cmd == "case-study") return cmd_case_study(cfg, out);
    if (cmd == "gen-synthetic") return cmd_gen_synthetic(cfg, out);
    throw ConfigError("unknown subcommand " + cmd);
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return 1;
  }
}

}  // namespace zesrec
