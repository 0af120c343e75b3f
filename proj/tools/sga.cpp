// Command-line front end for the subjective-ground attention pipeline:
// synth | ingest | cluster | build-sg | train | predict | explain | eval |
// consistency | sweep. Every artifact-producing command writes a manifest
// with content digests next to its outputs.

#include <algorithm>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sga/error.hpp"
#include "sga/pipeline.hpp"
#include "sga/rng.hpp"

namespace {

using namespace sga;

constexpr const char* kEmbedderSeedName = "static-embedder-v1";

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct CorpusBundle {
  Corpus d;
  Corpus dplus;
  Roster roster;
};

CorpusBundle load_corpus_dir(const std::string& dir) {
  require_artifact(dir + "/d_situations.jsonl", "ingest");
  check_manifest_outputs(dir, "ingest");
  CorpusBundle bundle;
  bundle.d = load_corpus(dir, "d", Source::D);
  bundle.dplus = load_corpus(dir, "dplus", Source::DPlus);
  bundle.roster = load_roster(dir);
  return bundle;
}

StaticEmbedder embedder_from_cluster_config(const Json& config) {
  Tokenizer tok;
  tok.vocab = config.value("vocab", 4096);
  tok.max_len = config.value("max_len", 64);
  return StaticEmbedder(tok, config.value("static_dim", 64),
                        config.value("embed_seed", std::string(kEmbedderSeedName)));
}

// gathers config file + CLI overrides shared by train/sweep
struct TrainCli {
  std::string config_path;
  double lr = -1.0;
  long epochs = -1, batch = -1, warmup = -1, patience = -1, hidden = -1, blocks = -1,
       heads = -1, encoder_heads = -1, max_len = -1, vocab = -1;
  double decay_scale = -1.0;
  int freeze_shared = -1;
  std::string norm;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value config file");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--epochs", epochs, "max epochs per stage");
    cmd->add_option("--batch-size", batch, "batch size");
    cmd->add_option("--warmup-steps", warmup, "warmup steps (0 = constant lr)");
    cmd->add_option("--decay-scale", decay_scale, "log-decay scale (0 = warmup steps)");
    cmd->add_option("--patience", patience, "early stopping patience");
    cmd->add_option("--hidden", hidden, "encoder hidden size");
    cmd->add_option("--blocks", blocks, "encoder blocks");
    cmd->add_option("--heads", heads, "attention heads");
    cmd->add_option("--encoder-heads", encoder_heads, "encoder self-attention heads");
    cmd->add_option("--max-len", max_len, "token truncation length");
    cmd->add_option("--vocab", vocab, "hashing vocabulary size");
    cmd->add_option("--norm", norm, "attention score norm: one | sqrt_dk");
    cmd->add_option("--freeze-shared", freeze_shared,
                    "1 = freeze encoder + sg attention in stage 2");
  }

  KvConfig merge() const {
    KvConfig kv = config_path.empty() ? KvConfig() : KvConfig::from_file(config_path);
    auto set_long = [&](const char* key, long v) {
      if (v >= 0) kv.set(key, std::to_string(v));
    };
    if (lr > 0) kv.set("lr", std::to_string(lr));
    if (decay_scale >= 0) kv.set("decay_scale", std::to_string(decay_scale));
    set_long("epochs", epochs);
    set_long("batch_size", batch);
    set_long("warmup_steps", warmup);
    set_long("patience", patience);
    set_long("hidden", hidden);
    set_long("blocks", blocks);
    set_long("heads", heads);
    set_long("encoder_heads", encoder_heads);
    set_long("max_len", max_len);
    set_long("vocab", vocab);
    set_long("freeze_shared", freeze_shared);
    if (!norm.empty()) kv.set("norm", norm);
    return kv;
  }
};

struct LoadedWorld {
  CorpusBundle corpus;
  std::vector<SgBase> bases;
};

LoadedWorld load_world(const std::string& corpus_dir, const std::string& sg_path) {
  LoadedWorld w;
  w.corpus = load_corpus_dir(corpus_dir);
  require_artifact(sg_path, "build-sg");
  w.bases = load_sg_bases(sg_path);
  return w;
}

double train_once(const CorpusBundle& corpus, const SgIndex& sg, PipelineConfig cfg,
                  Variant variant, std::uint64_t seed, const std::string& out_dir,
                  const Json& config_echo, const StaticEmbedder* embedder,
                  const ClusterArtifact* clusters) {
  cfg.train.variant = variant;
  cfg.train.seed = seed;
  cfg.finalize();

  ModelParams params;
  params.cfg = cfg.model;
  params.variant = variant;
  params.init(seed);

  TrainResult result = train_variant(params, corpus.d, corpus.dplus, sg, cfg.train);

  ensure_dir(out_dir);
  std::string model_path = out_dir + "/model.ckpt";
  Json echo = config_echo;
  echo["seed"] = seed;
  save_model(model_path, params, echo);

  std::vector<Json> metrics;
  for (const auto& log : result.log)
    metrics.push_back(Json{{"stage", log.stage},
                           {"epoch", log.epoch},
                           {"train_loss", log.train_loss},
                           {"valid_macro_f1", log.valid_f1},
                           {"is_best", log.is_best}});
  write_jsonl(out_dir + "/metrics.jsonl", metrics);

  double test_f1 = 0.0;
  if (embedder && clusters) {
    EvalReport report = evaluate_split(params, corpus.d, sg, Split::Test, *embedder, *clusters);
    test_f1 = report.macro;
    write_file(out_dir + "/test_report.json", eval_report_json(report).dump(2) + "\n");
  }
  return test_f1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subjective-ground attention pipeline"};
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus with oracle labels");
  std::string out_dir;
  std::uint64_t seed = 1;
  SynthConfig synth_cfg;
  synth_cmd->add_option("--out-dir", out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", seed, "generator seed");
  synth_cmd->add_option("--topics", synth_cfg.topics, "topic count");
  synth_cmd->add_option("--personas", synth_cfg.personas, "persona count");
  synth_cmd->add_option("--d-per-topic", synth_cfg.d_situations_per_topic,
                        "D situations per topic");
  synth_cmd->add_option("--dplus-per-topic", synth_cfg.dplus_situations_per_topic,
                        "DPlus situations per topic");
  synth_cmd->add_option("--comments-per-situation", synth_cfg.comments_per_situation,
                        "annotators sampled per situation");
  synth_cmd->add_option("--noise", synth_cfg.noise, "label flip rate");

  // ---- ingest ----
  auto* ingest_cmd = app.add_subcommand("ingest", "validate, code, and split the two corpora");
  IngestPaths ingest_paths;
  long roster_size = 30;
  long rots_per_situation = 5;
  ingest_cmd->add_option("--d-situations", ingest_paths.d_situations)->required();
  ingest_cmd->add_option("--d-comments", ingest_paths.d_comments)->required();
  ingest_cmd->add_option("--d-rots", ingest_paths.d_rots)->required();
  ingest_cmd->add_option("--dplus-situations", ingest_paths.dplus_situations)->required();
  ingest_cmd->add_option("--dplus-comments", ingest_paths.dplus_comments)->required();
  ingest_cmd->add_option("--judgment-phrases", ingest_paths.judgment_phrases,
                         "phrase pair lexicon (tsv)")->required();
  ingest_cmd->add_option("--out-dir", out_dir)->required();
  ingest_cmd->add_option("--seed", seed, "split seed");
  ingest_cmd->add_option("--roster-size", roster_size, "annotators kept (most active in D)");
  ingest_cmd->add_option("--rots-per-situation", rots_per_situation,
                         "rules-of-thumb per situation after extension");

  // ---- cluster ----
  auto* cluster_cmd = app.add_subcommand("cluster", "fit k-means topic groups on DPlus training situations");
  std::string corpus_dir, sweep_ks;
  long k_clusters = 20, static_dim = 64, cli_vocab = 4096, cli_max_len = 64;
  cluster_cmd->add_option("--corpus-dir", corpus_dir)->required();
  cluster_cmd->add_option("--out-dir", out_dir)->required();
  cluster_cmd->add_option("--seed", seed);
  cluster_cmd->add_option("--k", k_clusters, "cluster count");
  cluster_cmd->add_option("--static-dim", static_dim, "static embedding dimension");
  cluster_cmd->add_option("--vocab", cli_vocab, "hashing vocabulary size");
  cluster_cmd->add_option("--max-len", cli_max_len, "token truncation length");
  cluster_cmd->add_option("--sweep-k", sweep_ks, "comma-separated k values: print inertia per k and exit");

  // ---- build-sg ----
  auto* sg_cmd = app.add_subcommand("build-sg", "build per-annotator subjective ground bases");
  std::string cluster_path, mfd_path;
  long per_cluster = 6;
  sg_cmd->add_option("--corpus-dir", corpus_dir)->required();
  sg_cmd->add_option("--cluster", cluster_path, "cluster checkpoint")->required();
  sg_cmd->add_option("--mfd", mfd_path, "moral foundations lexicon (tsv)")->required();
  sg_cmd->add_option("--out-dir", out_dir)->required();
  sg_cmd->add_option("--per-cluster", per_cluster, "comments kept per cluster");

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train one variant");
  std::string sg_path, variant_name_arg = "sg_attention";
  TrainCli train_cli;
  train_cmd->add_option("--corpus-dir", corpus_dir)->required();
  train_cmd->add_option("--sg", sg_path, "subjective ground bases")->required();
  train_cmd->add_option("--cluster", cluster_path, "cluster checkpoint (test report)");
  train_cmd->add_option("--variant", variant_name_arg, "model variant");
  train_cmd->add_option("--seed", seed);
  train_cmd->add_option("--out-dir", out_dir)->required();
  train_cli.add_options(train_cmd);

  // ---- predict ----
  auto* predict_cmd = app.add_subcommand("predict", "predict judgments for a split or one instance");
  std::string model_path, instance_id, split_name_arg = "test", out_file;
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--corpus-dir", corpus_dir)->required();
  predict_cmd->add_option("--sg", sg_path)->required();
  predict_cmd->add_option("--split", split_name_arg, "train | valid | test");
  predict_cmd->add_option("--instance", instance_id, "single comment id");
  predict_cmd->add_option("--out", out_file, "predictions file (jsonl)");

  // ---- explain ----
  auto* explain_cmd = app.add_subcommand("explain", "export attention traces with rendered text");
  explain_cmd->add_option("--model", model_path)->required();
  explain_cmd->add_option("--corpus-dir", corpus_dir)->required();
  explain_cmd->add_option("--sg", sg_path)->required();
  explain_cmd->add_option("--split", split_name_arg, "train | valid | test");
  explain_cmd->add_option("--instance", instance_id, "single comment id");
  explain_cmd->add_option("--out", out_file, "trace file (jsonl)");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "macro F1 + per-cluster report on a split");
  eval_cmd->add_option("--model", model_path)->required();
  eval_cmd->add_option("--corpus-dir", corpus_dir)->required();
  eval_cmd->add_option("--sg", sg_path)->required();
  eval_cmd->add_option("--cluster", cluster_path)->required();
  eval_cmd->add_option("--split", split_name_arg, "train | valid | test");
  eval_cmd->add_option("--out-dir", out_dir)->required();
  long random_runs = 100;
  eval_cmd->add_option("--random-runs", random_runs, "runs for the random baseline row");

  // ---- consistency ----
  auto* cons_cmd = app.add_subcommand("consistency", "attention-weight consistency tests");
  std::string perturbations_path;
  long top_m = 3;
  bool argmax_harness = false;
  cons_cmd->add_option("--model", model_path)->required();
  cons_cmd->add_option("--corpus-dir", corpus_dir)->required();
  cons_cmd->add_option("--sg", sg_path)->required();
  cons_cmd->add_option("--perturbations", perturbations_path)->required();
  cons_cmd->add_option("--out-dir", out_dir)->required();
  cons_cmd->add_option("--top-m", top_m, "relaxed rank prefix length");
  cons_cmd->add_flag("--predict-from-argmax-rot", argmax_harness,
                     "harness mode: prediction := polarity of the top-weighted candidate");

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "variant x seed matrix with mean/stdev test F1");
  std::string variants_arg = "baseline,sg_attention", seeds_arg = "1,2,3";
  TrainCli sweep_cli;
  sweep_cmd->add_option("--corpus-dir", corpus_dir)->required();
  sweep_cmd->add_option("--sg", sg_path)->required();
  sweep_cmd->add_option("--cluster", cluster_path)->required();
  sweep_cmd->add_option("--variants", variants_arg, "comma-separated variant names (or 'all')");
  sweep_cmd->add_option("--seeds", seeds_arg, "comma-separated seeds");
  sweep_cmd->add_option("--out-dir", out_dir)->required();
  sweep_cmd->add_option("--random-runs", random_runs, "runs for the random baseline row");
  sweep_cli.add_options(sweep_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(synth_cmd)) {
      synth_cfg.seed = seed;
      SynthPaths paths = generate(synth_cfg, out_dir);
      Manifest m;
      m.command = "synth";
      m.seed = seed;
      m.config = Json{{"topics", synth_cfg.topics},
                      {"personas", synth_cfg.personas},
                      {"d_per_topic", synth_cfg.d_situations_per_topic},
                      {"dplus_per_topic", synth_cfg.dplus_situations_per_topic},
                      {"comments_per_situation", synth_cfg.comments_per_situation},
                      {"noise", synth_cfg.noise}};
      for (const auto& p : {paths.d_situations, paths.d_comments, paths.d_rots,
                            paths.dplus_situations, paths.dplus_comments, paths.perturbations,
                            paths.moral_lexicon})
        m.add_output(p);
      m.write(out_dir);
      std::cout << "synthetic corpus written to " << out_dir << "\n";
    } else if (app.got_subcommand(ingest_cmd)) {
      for (const auto& p :
           {ingest_paths.d_situations, ingest_paths.d_comments, ingest_paths.d_rots,
            ingest_paths.dplus_situations, ingest_paths.dplus_comments,
            ingest_paths.judgment_phrases})
        require_artifact(p, "synth (or provide your own corpus files)");
      IngestResult result = ingest(ingest_paths, static_cast<std::size_t>(roster_size),
                                   static_cast<int>(rots_per_situation), seed);
      ensure_dir(out_dir);
      save_corpus(out_dir, result.d, "d");
      save_corpus(out_dir, result.dplus, "dplus");
      save_roster(out_dir, result.roster);

      CorpusStats ds = corpus_stats(result.d);
      CorpusStats ps = corpus_stats(result.dplus);
      auto stats_json = [](const CorpusStats& s) {
        return Json{{"instances", s.instances},
                    {"unique_situations", s.unique_situations},
                    {"max_per_annotator", s.max_per_annotator},
                    {"min_per_annotator", s.min_per_annotator},
                    {"acceptable", s.acceptable},
                    {"unacceptable", s.unacceptable}};
      };
      Json stats{{"d", stats_json(ds)},
                 {"dplus", stats_json(ps)},
                 {"d_discarded_info", result.d.discarded_info},
                 {"d_discarded_uncoded", result.d.discarded_uncoded},
                 {"dplus_discarded_info", result.dplus.discarded_info},
                 {"dplus_discarded_uncoded", result.dplus.discarded_uncoded},
                 {"dplus_dropped_overlap", result.dplus.dropped_overlap}};
      write_file(out_dir + "/stats.json", stats.dump(2) + "\n");

      Manifest m;
      m.command = "ingest";
      m.seed = seed;
      m.config = Json{{"roster_size", roster_size}, {"rots_per_situation", rots_per_situation}};
      for (const auto& p : {ingest_paths.d_situations, ingest_paths.d_comments,
                            ingest_paths.d_rots, ingest_paths.dplus_situations,
                            ingest_paths.dplus_comments, ingest_paths.judgment_phrases})
        m.add_input(p);
      for (const char* stem : {"d_situations", "d_comments", "d_rots", "dplus_situations",
                               "dplus_comments"})
        m.add_output(out_dir + "/" + std::string(stem) + ".jsonl");
      m.add_output(out_dir + "/roster.json");
      m.add_output(out_dir + "/stats.json");
      m.write(out_dir);
      std::cout << stats.dump(2) << "\n";
    } else if (app.got_subcommand(cluster_cmd)) {
      CorpusBundle bundle = load_corpus_dir(corpus_dir);
      Tokenizer tok;
      tok.vocab = static_cast<int>(cli_vocab);
      tok.max_len = static_cast<int>(cli_max_len);
      StaticEmbedder embedder(tok, static_cast<int>(static_dim), kEmbedderSeedName);

      if (!sweep_ks.empty()) {
        std::vector<Point> points;
        std::vector<std::string> ids;
        for (const auto& s : bundle.dplus.situations) {
          if (s.split != Split::Train) continue;
          points.push_back(embedder.embed(s.text));
          ids.push_back(s.id);
        }
        std::vector<int> ks;
        for (const auto& t : split_csv(sweep_ks)) ks.push_back(std::stoi(t));
        for (const auto& [k, in] : kmeans_inertia_sweep(points, ids, ks, seed))
          std::cout << "k=" << k << " inertia=" << in << "\n";
        return 0;
      }

      ClusterArtifact art =
          fit_cluster_artifact(bundle.dplus, embedder, static_cast<int>(k_clusters), seed);
      ensure_dir(out_dir);
      Json echo{{"k", k_clusters},
                {"static_dim", static_dim},
                {"vocab", cli_vocab},
                {"max_len", cli_max_len},
                {"embed_seed", kEmbedderSeedName},
                {"seed", seed}};
      std::string path = out_dir + "/cluster.ckpt";
      save_cluster(path, art, echo);

      std::vector<Json> report;
      for (int c = 0; c < art.model.k; ++c) {
        auto cu = static_cast<std::size_t>(c);
        report.push_back(Json{{"kind", "cluster"},
                              {"cluster", c},
                              {"size", art.model.sizes[cu]},
                              {"silhouette", art.per_cluster_silhouette[cu]},
                              {"representatives", art.representatives[cu]}});
      }
      report.push_back(Json{{"kind", "summary"},
                            {"total_inertia", art.total_inertia},
                            {"mean_silhouette", art.mean_silhouette}});
      write_jsonl(out_dir + "/cluster_report.jsonl", report);

      Manifest m;
      m.command = "cluster";
      m.seed = seed;
      m.config = echo;
      m.add_output(path);
      m.add_output(out_dir + "/cluster_report.jsonl");
      m.write(out_dir);
      std::cout << "k=" << k_clusters << " inertia=" << art.total_inertia
                << " mean silhouette=" << art.mean_silhouette << "\n";
    } else if (app.got_subcommand(sg_cmd)) {
      CorpusBundle bundle = load_corpus_dir(corpus_dir);
      require_artifact(cluster_path, "cluster");
      require_artifact(mfd_path, "synth (or supply a dictionary)");
      Checkpoint cluster_ckpt = load_checkpoint(cluster_path);
      ClusterArtifact art = load_cluster(cluster_path);
      StaticEmbedder embedder = embedder_from_cluster_config(cluster_ckpt.config);
      MoralLexicon lexicon = load_moral_lexicon(mfd_path);

      auto bases = build_all_sg(bundle.roster, bundle.dplus, art.model, embedder, lexicon,
                                static_cast<int>(per_cluster));
      ensure_dir(out_dir);
      std::string path = out_dir + "/sg_bases.jsonl";
      save_sg_bases(path, bases);
      write_file(out_dir + "/sg_dump.txt", render_sg_dump(bases));

      Manifest m;
      m.command = "build-sg";
      m.config = Json{{"per_cluster", per_cluster}};
      m.add_input(cluster_path);
      m.add_input(mfd_path);
      m.add_output(path);
      m.write(out_dir);
      std::size_t filled = 0, total = 0;
      for (const auto& b : bases) {
        filled += b.real_count();
        total += b.mask.size();
      }
      std::cout << bases.size() << " bases, " << filled << "/" << total << " slots filled\n";
    } else if (app.got_subcommand(train_cmd)) {
      auto variant = variant_from_name(variant_name_arg);
      if (!variant) throw config_error("unknown variant: " + variant_name_arg);
      LoadedWorld world = load_world(corpus_dir, sg_path);
      SgIndex sg(world.bases);

      KvConfig kv = train_cli.merge();
      PipelineConfig cfg;
      if (!world.bases.empty()) {
        cfg.clusters = world.bases.front().clusters;
        cfg.per_cluster = world.bases.front().per_cluster;
      }
      kv.apply(cfg);

      std::optional<ClusterArtifact> clusters;
      std::optional<StaticEmbedder> embedder;
      if (!cluster_path.empty()) {
        Checkpoint cluster_ckpt = load_checkpoint(cluster_path);
        clusters = load_cluster(cluster_path);
        embedder = embedder_from_cluster_config(cluster_ckpt.config);
      }

      double test_f1 = train_once(world.corpus, sg, cfg, *variant, seed, out_dir, kv.echo(),
                                  embedder ? &*embedder : nullptr,
                                  clusters ? &*clusters : nullptr);
      Manifest m;
      m.command = "train";
      m.seed = seed;
      m.config = kv.echo();
      m.config["variant"] = variant_name_arg;
      m.add_input(sg_path);
      m.add_output(out_dir + "/model.ckpt");
      m.write(out_dir);
      std::cout << "trained " << variant_name_arg << " seed " << seed;
      if (clusters) std::cout << ", test macro F1 " << test_f1;
      std::cout << "\n";
    } else if (app.got_subcommand(predict_cmd) || app.got_subcommand(explain_cmd)) {
      LoadedWorld world = load_world(corpus_dir, sg_path);
      SgIndex sg(world.bases);
      require_artifact(model_path, "train");
      ModelParams params = load_model(model_path);

      auto split = split_from_name(split_name_arg);
      if (!split) throw config_error("unknown split: " + split_name_arg);
      bool with_rots = params.variant != Variant::Baseline &&
                       params.variant != Variant::BaselineFinetuned &&
                       params.variant != Variant::SgAttentionNoRot;
      auto instances = collect_instances(world.corpus.d, *split, with_rots);
      if (!instance_id.empty()) {
        std::vector<TrainInstance> one;
        for (auto& inst : instances)
          if (inst.comment->id == instance_id) one.push_back(inst);
        if (one.empty())
          throw missing_input("instance " + instance_id + " not found in split " + split_name_arg);
        instances = std::move(one);
      }
      auto preds = predict_all(params, instances, sg);

      if (app.got_subcommand(predict_cmd)) {
        std::vector<Json> recs;
        for (const auto& p : preds)
          recs.push_back(Json{{"instance_id", p.instance_id},
                              {"annotator_id", p.annotator_id},
                              {"prediction", judgment_name(p.predicted)},
                              {"gold", p.gold ? judgment_name(*p.gold) : ""},
                              {"logits", std::vector<double>(p.logits.v.begin(), p.logits.v.end())}});
        if (!out_file.empty()) write_jsonl(out_file, recs);

        // single-instance view: label + strongest evidence
        if (!instance_id.empty()) {
          const auto& p = preds.front();
          const auto& inst = instances.front();
          std::cout << "instance " << p.instance_id << " (" << p.annotator_id << ")\n";
          std::cout << "situation: " << inst.situation->text << "\n";
          std::cout << "prediction: " << judgment_name(p.predicted)
                    << (p.gold ? std::string(" (gold ") + judgment_name(*p.gold) + ")" : "")
                    << "\n";
          const SgBase* base = sg.find(p.annotator_id);
          if (base && !p.trace.sg_weights.empty()) {
            auto rank = rank_permutation(p.trace.sg_weights, base->mask);
            std::cout << "top subjective ground:\n";
            for (std::size_t i = 0; i < std::min<std::size_t>(3, rank.size()); ++i) {
              auto slot = static_cast<std::size_t>(rank[i]);
              std::cout << "  [" << p.trace.sg_weights[slot] << "] " << base->slots[slot].text
                        << "\n";
            }
          }
          if (!p.trace.value_weights.empty() && !inst.rot_texts.empty()) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < p.trace.value_weights.size(); ++i)
              if (p.trace.value_weights[i] > p.trace.value_weights[best]) best = i;
            std::cout << "top rule-of-thumb: [" << p.trace.value_weights[best] << "] "
                      << inst.rot_texts[best] << "\n";
          }
        } else {
          std::cout << preds.size() << " predictions";
          if (!out_file.empty()) std::cout << " -> " << out_file;
          std::cout << "\n";
        }
      } else {
        if (out_file.empty()) out_file = "traces.jsonl";
        save_traces(out_file, traces_from_predictions(preds, params.variant));
        // rendered view for the first few instances
        std::size_t shown = 0;
        for (std::size_t i = 0; i < preds.size() && shown < 3; ++i, ++shown) {
          const auto& p = preds[i];
          const auto& inst = instances[i];
          std::cout << "-- " << p.instance_id << " (" << p.annotator_id
                    << ") -> " << judgment_name(p.predicted) << "\n";
          const SgBase* base = sg.find(p.annotator_id);
          if (base && !p.trace.sg_weights.empty()) {
            auto rank = rank_permutation(p.trace.sg_weights, base->mask);
            for (std::size_t r = 0; r < std::min<std::size_t>(3, rank.size()); ++r) {
              auto slot = static_cast<std::size_t>(rank[r]);
              std::cout << "   sg [" << p.trace.sg_weights[slot] << "] "
                        << base->slots[slot].text << "\n";
            }
          }
          for (std::size_t r = 0; r < p.trace.value_weights.size() && r < inst.rot_texts.size();
               ++r)
            std::cout << "   rot [" << p.trace.value_weights[r] << "] " << inst.rot_texts[r]
                      << "\n";
        }
        std::cout << preds.size() << " traces -> " << out_file << "\n";
      }
    } else if (app.got_subcommand(eval_cmd)) {
      LoadedWorld world = load_world(corpus_dir, sg_path);
      SgIndex sg(world.bases);
      require_artifact(model_path, "train");
      require_artifact(cluster_path, "cluster");
      ModelParams params = load_model(model_path);
      Checkpoint cluster_ckpt = load_checkpoint(cluster_path);
      ClusterArtifact clusters = load_cluster(cluster_path);
      StaticEmbedder embedder = embedder_from_cluster_config(cluster_ckpt.config);

      auto split = split_from_name(split_name_arg);
      if (!split) throw config_error("unknown split: " + split_name_arg);
      std::vector<Prediction> preds;
      EvalReport report = evaluate_split(params, world.corpus.d, sg, *split, embedder, clusters,
                                         &preds);
      ensure_dir(out_dir);
      Json rj = eval_report_json(report);
      std::vector<Judgment> golds;
      for (const auto& p : preds)
        if (p.gold) golds.push_back(*p.gold);
      rj["random_baseline_macro_f1"] =
          random_baseline(golds, seed, static_cast<int>(random_runs));
      write_file(out_dir + "/eval_report.json", rj.dump(2) + "\n");
      save_traces(out_dir + "/traces.jsonl", traces_from_predictions(preds, params.variant));

      Manifest m;
      m.command = "eval";
      m.config = Json{{"split", split_name_arg}};
      m.add_input(model_path);
      m.add_output(out_dir + "/eval_report.json");
      m.add_output(out_dir + "/traces.jsonl");
      m.write(out_dir);
      std::cout << render_eval_report(report);
    } else if (app.got_subcommand(cons_cmd)) {
      LoadedWorld world = load_world(corpus_dir, sg_path);
      SgIndex sg(world.bases);
      require_artifact(model_path, "train");
      require_artifact(perturbations_path, "synth (or author perturbation sets)");
      ModelParams params = load_model(model_path);
      auto perturbations = load_perturbations(perturbations_path);

      ConsistencyReport report = run_consistency(params, world.corpus.d, sg, perturbations,
                                                 static_cast<int>(top_m), argmax_harness);
      ensure_dir(out_dir);
      write_file(out_dir + "/consistency_report.json",
                 consistency_report_json(report).dump(2) + "\n");
      Manifest m;
      m.command = "consistency";
      m.config = Json{{"top_m", top_m}, {"predict_from_argmax_rot", argmax_harness}};
      m.add_input(model_path);
      m.add_input(perturbations_path);
      m.add_output(out_dir + "/consistency_report.json");
      m.write(out_dir);
      std::cout << render_consistency_report(report);
    } else if (app.got_subcommand(sweep_cmd)) {
      LoadedWorld world = load_world(corpus_dir, sg_path);
      SgIndex sg(world.bases);
      require_artifact(cluster_path, "cluster");
      Checkpoint cluster_ckpt = load_checkpoint(cluster_path);
      ClusterArtifact clusters = load_cluster(cluster_path);
      StaticEmbedder embedder = embedder_from_cluster_config(cluster_ckpt.config);

      std::vector<Variant> variants;
      if (variants_arg == "all") {
        for (int v = 0; v < 7; ++v) variants.push_back(static_cast<Variant>(v));
      } else {
        for (const auto& name : split_csv(variants_arg)) {
          auto v = variant_from_name(name);
          if (!v) throw config_error("unknown variant: " + name);
          variants.push_back(*v);
        }
      }
      std::vector<std::uint64_t> seeds;
      for (const auto& s : split_csv(seeds_arg)) seeds.push_back(std::stoull(s));
      if (seeds.empty()) throw config_error("sweep needs at least one seed");

      KvConfig kv = sweep_cli.merge();
      PipelineConfig cfg;
      if (!world.bases.empty()) {
        cfg.clusters = world.bases.front().clusters;
        cfg.per_cluster = world.bases.front().per_cluster;
      }
      kv.apply(cfg);

      ensure_dir(out_dir);
      std::vector<Json> rows;
      std::map<Variant, std::vector<double>> results;
      for (Variant v : variants) {
        for (std::uint64_t s : seeds) {
          std::string run_dir =
              out_dir + "/" + variant_name(v) + "/seed" + std::to_string(s);
          ensure_dir(run_dir);
          double f1 = train_once(world.corpus, sg, cfg, v, s, run_dir, kv.echo(), &embedder,
                                 &clusters);
          results[v].push_back(f1);
        }
        MatrixRow row = summarize_runs(v, results[v]);
        rows.push_back(Json{{"variant", variant_name(v)},
                            {"seed_f1", row.seed_f1},
                            {"mean", row.mean},
                            {"stdev", row.stdev}});
        std::printf("%-22s %6.2f (%.2f)\n", variant_name(v), row.mean, row.stdev);
      }

      // random baseline row over D test golds
      {
        auto test = collect_instances(world.corpus.d, Split::Test, false);
        std::vector<Judgment> golds;
        for (const auto& t : test)
          if (t.comment->label) golds.push_back(*t.comment->label);
        double rb = random_baseline(golds, seeds.front(), static_cast<int>(random_runs));
        rows.push_back(Json{{"variant", "random_prediction"}, {"mean", rb}});
        std::printf("%-22s %6.2f\n", "random_prediction", rb);
      }

      if (results.count(Variant::Baseline) && results.count(Variant::SgAttention) &&
          results[Variant::Baseline].size() >= 2) {
        double p = welch_p_value(results[Variant::SgAttention], results[Variant::Baseline]);
        rows.push_back(Json{{"variant", "t_test_sg_attention_vs_baseline"}, {"p_value", p}});
        std::printf("t-test sg_attention vs baseline: p = %.4g\n", p);
      }
      write_jsonl(out_dir + "/sweep_report.jsonl", rows);

      Manifest m;
      m.command = "sweep";
      m.config = kv.echo();
      m.config["variants"] = variants_arg;
      m.config["seeds"] = seeds_arg;
      m.add_output(out_dir + "/sweep_report.jsonl");
      m.write(out_dir);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
