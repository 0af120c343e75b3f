#include "sga/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sga/error.hpp"
#include "sga/rng.hpp"
#include "sga/text.hpp"

namespace sga {

void PipelineConfig::finalize() {
  model.sg_slots = sg_slots();
  model.rot_count = rots_per_situation;
  train.validate();
}

KvConfig KvConfig::from_file(const std::string& path) {
  KvConfig cfg;
  std::ifstream in(path);
  if (!in) throw missing_input("cannot open config " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw format_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    cfg.values_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return cfg;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (...) {
    throw config_error("config key '" + key + "' is not a number: " + it->second);
  }
}

long KvConfig::get_long(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stol(it->second);
  } catch (...) {
    throw config_error("config key '" + key + "' is not an integer: " + it->second);
  }
}

void KvConfig::apply(PipelineConfig& cfg) const {
  cfg.roster_size = static_cast<std::size_t>(get_long("roster_size", static_cast<long>(cfg.roster_size)));
  cfg.rots_per_situation = static_cast<int>(get_long("rots_per_situation", cfg.rots_per_situation));
  cfg.clusters = static_cast<int>(get_long("clusters", cfg.clusters));
  cfg.per_cluster = static_cast<int>(get_long("per_cluster", cfg.per_cluster));
  cfg.static_dim = static_cast<int>(get_long("static_dim", cfg.static_dim));

  cfg.model.encoder.vocab = static_cast<int>(get_long("vocab", cfg.model.encoder.vocab));
  cfg.model.encoder.max_len = static_cast<int>(get_long("max_len", cfg.model.encoder.max_len));
  cfg.model.encoder.hidden = static_cast<int>(get_long("hidden", cfg.model.encoder.hidden));
  cfg.model.encoder.blocks = static_cast<int>(get_long("blocks", cfg.model.encoder.blocks));
  cfg.model.encoder.heads = static_cast<int>(get_long("encoder_heads", cfg.model.encoder.heads));
  cfg.model.attn_heads = static_cast<int>(get_long("heads", cfg.model.attn_heads));
  std::string norm = get_string("norm", cfg.model.norm == NormMode::One ? "one" : "sqrt_dk");
  if (norm == "one")
    cfg.model.norm = NormMode::One;
  else if (norm == "sqrt_dk")
    cfg.model.norm = NormMode::SqrtDk;
  else
    throw config_error("norm must be 'one' or 'sqrt_dk', got " + norm);

  cfg.train.lr = get_double("lr", cfg.train.lr);
  cfg.train.warmup_steps = static_cast<int>(get_long("warmup_steps", cfg.train.warmup_steps));
  cfg.train.decay_scale = get_double("decay_scale", cfg.train.decay_scale);
  cfg.train.batch_size = static_cast<int>(get_long("batch_size", cfg.train.batch_size));
  cfg.train.epochs = static_cast<int>(get_long("epochs", cfg.train.epochs));
  cfg.train.patience = static_cast<int>(get_long("patience", cfg.train.patience));
  cfg.train.freeze_shared = get_long("freeze_shared", cfg.train.freeze_shared ? 1 : 0) != 0;
  if (has("variant")) {
    auto v = variant_from_name(get_string("variant", ""));
    if (!v) throw config_error("unknown variant: " + get_string("variant", ""));
    cfg.train.variant = *v;
  }
  cfg.finalize();
}

Json KvConfig::echo() const {
  Json j = Json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

// ---- corpus persistence ----

void save_corpus(const std::string& dir, const Corpus& corpus, const std::string& stem) {
  std::vector<Json> situations;
  for (const auto& s : corpus.situations) {
    Json j{{"id", s.id}, {"text", s.text}, {"source", s.source == Source::D ? "D" : "DPlus"}};
    if (s.split) j["split"] = split_name(*s.split);
    situations.push_back(std::move(j));
  }
  write_jsonl(dir + "/" + stem + "_situations.jsonl", situations);

  std::vector<Json> comments;
  for (const auto& c : corpus.comments) {
    Json j{{"id", c.id},
           {"annotator_id", c.annotator_id},
           {"situation_id", c.situation_id},
           {"text", c.text}};
    if (c.code) j["code"] = code_name(*c.code);
    if (c.label) j["label"] = judgment_name(*c.label);
    comments.push_back(std::move(j));
  }
  write_jsonl(dir + "/" + stem + "_comments.jsonl", comments);

  if (!corpus.rots.empty()) {
    std::vector<Json> rots;
    for (const auto& r : corpus.rots) {
      Json j{{"id", r.id}, {"situation_id", r.situation_id}, {"text", r.text}};
      if (r.polarity) j["polarity"] = judgment_name(*r.polarity);
      j["provenance"] = r.provenance == RotProvenance::Original
                            ? "original"
                            : (r.provenance == RotProvenance::Flipped ? "flipped" : "padded");
      rots.push_back(std::move(j));
    }
    write_jsonl(dir + "/" + stem + "_rots.jsonl", rots);
  }
}

Corpus load_corpus(const std::string& dir, const std::string& stem, Source source) {
  Corpus corpus;
  corpus.source = source;
  read_jsonl(dir + "/" + stem + "_situations.jsonl", [&](std::size_t, const Json& j) {
    Situation s;
    s.id = j.at("id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    s.source = source;
    if (j.contains("split")) s.split = split_from_name(j.at("split").get<std::string>());
    corpus.situations.push_back(std::move(s));
  });
  read_jsonl(dir + "/" + stem + "_comments.jsonl", [&](std::size_t, const Json& j) {
    Comment c;
    c.id = j.at("id").get<std::string>();
    c.annotator_id = j.at("annotator_id").get<std::string>();
    c.situation_id = j.at("situation_id").get<std::string>();
    c.text = j.at("text").get<std::string>();
    if (j.contains("code")) c.code = code_from_name(j.at("code").get<std::string>());
    if (j.contains("label")) c.label = judgment_from_name(j.at("label").get<std::string>());
    corpus.comments.push_back(std::move(c));
  });
  std::string rot_path = dir + "/" + stem + "_rots.jsonl";
  if (file_exists(rot_path)) {
    read_jsonl(rot_path, [&](std::size_t, const Json& j) {
      RuleOfThumb r;
      r.id = j.at("id").get<std::string>();
      r.situation_id = j.at("situation_id").get<std::string>();
      r.text = j.at("text").get<std::string>();
      if (j.contains("polarity")) r.polarity = judgment_from_name(j.at("polarity").get<std::string>());
      std::string prov = j.value("provenance", "original");
      r.provenance = prov == "flipped" ? RotProvenance::Flipped
                                       : (prov == "padded" ? RotProvenance::Padded
                                                           : RotProvenance::Original);
      corpus.rots.push_back(std::move(r));
    });
  }
  corpus.reindex();
  return corpus;
}

void save_roster(const std::string& dir, const Roster& roster) {
  Json j;
  j["annotator_ids"] = roster.annotator_ids;
  Json counts = Json::object();
  for (const auto& id : roster.annotator_ids)
    counts[id] = roster.comment_counts.at(id);
  j["comment_counts"] = counts;
  write_file(dir + "/roster.json", j.dump(2) + "\n");
}

Roster load_roster(const std::string& dir) {
  Json j = Json::parse(read_file(dir + "/roster.json"));
  Roster roster;
  for (const auto& id : j.at("annotator_ids")) roster.annotator_ids.push_back(id.get<std::string>());
  for (const auto& [id, n] : j.at("comment_counts").items())
    roster.comment_counts[id] = n.get<std::size_t>();
  return roster;
}

// ---- cluster persistence ----

ClusterArtifact fit_cluster_artifact(const Corpus& dplus, const StaticEmbedder& embedder, int k,
                                     std::uint64_t seed) {
  std::vector<Point> points;
  std::vector<std::string> ids;
  for (const auto& s : dplus.situations) {
    if (s.split != Split::Train) continue;
    points.push_back(embedder.embed(s.text));
    ids.push_back(s.id);
  }
  ClusterArtifact art;
  art.model = kmeans_fit(points, ids, k, seed);
  std::vector<int> assignments(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    assignments[i] = art.model.assignments.at(ids[i]);
  art.total_inertia = inertia(art.model, points, assignments);
  SilhouetteResult sil = silhouette(points, assignments);
  art.per_cluster_silhouette = sil.per_cluster;
  art.mean_silhouette = sil.mean;

  // nearest-to-centroid representatives, three per cluster
  art.representatives.assign(static_cast<std::size_t>(k), {});
  for (int c = 0; c < k; ++c) {
    std::vector<std::pair<double, std::string>> dist;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (assignments[i] != c) continue;
      dist.emplace_back(squared_distance(points[i], art.model.centroids[static_cast<std::size_t>(c)]),
                        ids[i]);
    }
    std::sort(dist.begin(), dist.end());
    for (std::size_t i = 0; i < std::min<std::size_t>(3, dist.size()); ++i)
      art.representatives[static_cast<std::size_t>(c)].push_back(dist[i].second);
  }
  return art;
}

void save_cluster(const std::string& path, const ClusterArtifact& artifact,
                  const Json& config_echo) {
  Checkpoint ckpt;
  ckpt.config = config_echo;
  Tensor centroids(artifact.model.k, artifact.model.dim());
  for (int c = 0; c < artifact.model.k; ++c)
    for (int j = 0; j < artifact.model.dim(); ++j)
      centroids.at(c, j) = artifact.model.centroids[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
  ckpt.add("centroids", centroids);

  Json assignments = Json::object();
  for (const auto& [id, c] : artifact.model.assignments) assignments[id] = c;
  ckpt.extra["assignments"] = assignments;
  ckpt.extra["sizes"] = artifact.model.sizes;
  ckpt.extra["per_cluster_silhouette"] = artifact.per_cluster_silhouette;
  ckpt.extra["total_inertia"] = artifact.total_inertia;
  ckpt.extra["mean_silhouette"] = artifact.mean_silhouette;
  ckpt.extra["representatives"] = artifact.representatives;
  save_checkpoint(path, ckpt);
}

ClusterArtifact load_cluster(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  ClusterArtifact art;
  const Tensor& centroids = ckpt.require("centroids");
  art.model.k = centroids.rows;
  for (int c = 0; c < centroids.rows; ++c) {
    Point p(static_cast<std::size_t>(centroids.cols));
    for (int j = 0; j < centroids.cols; ++j) p[static_cast<std::size_t>(j)] = centroids.at(c, j);
    art.model.centroids.push_back(std::move(p));
  }
  for (const auto& [id, c] : ckpt.extra.at("assignments").items())
    art.model.assignments[id] = c.get<int>();
  art.model.sizes = ckpt.extra.at("sizes").get<std::vector<std::size_t>>();
  art.per_cluster_silhouette = ckpt.extra.at("per_cluster_silhouette").get<std::vector<double>>();
  art.total_inertia = ckpt.extra.at("total_inertia").get<double>();
  art.mean_silhouette = ckpt.extra.at("mean_silhouette").get<double>();
  art.representatives =
      ckpt.extra.at("representatives").get<std::vector<std::vector<std::string>>>();
  return art;
}

// ---- subjective ground persistence ----

void save_sg_bases(const std::string& path, const std::vector<SgBase>& bases) {
  std::vector<Json> recs;
  for (const auto& b : bases) {
    for (std::size_t slot = 0; slot < b.slots.size(); ++slot) {
      Json j{{"annotator_id", b.annotator_id},
             {"slot", slot},
             {"clusters", b.clusters},
             {"per_cluster", b.per_cluster}};
      if (b.slots[slot].comment_id) {
        j["comment_id"] = *b.slots[slot].comment_id;
        j["text"] = b.slots[slot].text;
        j["score"] = b.slots[slot].score;
      } else {
        j["comment_id"] = nullptr;
      }
      recs.push_back(std::move(j));
    }
  }
  write_jsonl(path, recs);
}

std::vector<SgBase> load_sg_bases(const std::string& path) {
  std::map<std::string, SgBase> by_annotator;
  std::vector<std::string> order;
  read_jsonl(path, [&](std::size_t lineno, const Json& j) {
    std::string aid = j.at("annotator_id").get<std::string>();
    if (!by_annotator.count(aid)) {
      order.push_back(aid);
      SgBase b;
      b.annotator_id = aid;
      b.clusters = j.at("clusters").get<int>();
      b.per_cluster = j.at("per_cluster").get<int>();
      b.slots.resize(static_cast<std::size_t>(b.total_slots()));
      b.mask.assign(static_cast<std::size_t>(b.total_slots()), false);
      by_annotator[aid] = std::move(b);
    }
    auto slot = j.at("slot").get<std::size_t>();
    SgBase& b = by_annotator[aid];
    if (slot >= b.slots.size())
      throw format_error(path + ":" + std::to_string(lineno) + ": slot out of range");
    if (!j.at("comment_id").is_null()) {
      b.slots[slot].comment_id = j.at("comment_id").get<std::string>();
      b.slots[slot].text = j.at("text").get<std::string>();
      b.slots[slot].score = j.value("score", 0);
      b.mask[slot] = true;
    }
  });
  std::vector<SgBase> bases;
  for (const auto& aid : order) bases.push_back(std::move(by_annotator[aid]));
  return bases;
}

std::string render_sg_dump(const std::vector<SgBase>& bases) {
  std::ostringstream out;
  for (const auto& b : bases) {
    out << "== " << b.annotator_id << " (" << b.real_count() << "/" << b.total_slots()
        << " slots filled)\n";
    for (int c = 0; c < b.clusters; ++c) {
      bool header = false;
      for (int r = 0; r < b.per_cluster; ++r) {
        auto slot = static_cast<std::size_t>(c * b.per_cluster + r);
        if (!b.mask[slot]) continue;
        if (!header) {
          out << "  cluster " << c << "\n";
          header = true;
        }
        out << "    [" << b.slots[slot].score << "] " << b.slots[slot].text << "\n";
      }
    }
  }
  return out.str();
}

// ---- model persistence ----

void save_model(const std::string& path, const ModelParams& params, const Json& config_echo) {
  Checkpoint ckpt;
  ckpt.config = config_echo;
  ckpt.config["variant"] = variant_name(params.variant);
  ckpt.config["hidden"] = params.cfg.encoder.hidden;
  ckpt.config["vocab"] = params.cfg.encoder.vocab;
  ckpt.config["max_len"] = params.cfg.encoder.max_len;
  ckpt.config["blocks"] = params.cfg.encoder.blocks;
  ckpt.config["encoder_heads"] = params.cfg.encoder.heads;
  ckpt.config["heads"] = params.cfg.attn_heads;
  ckpt.config["norm"] = params.cfg.norm == NormMode::One ? "one" : "sqrt_dk";
  ckpt.config["sg_slots"] = params.cfg.sg_slots;
  ckpt.config["rot_count"] = params.cfg.rot_count;
  params.for_each_tensor(
      [&](const std::string& name, const Tensor& t) { ckpt.add(name, t); });
  save_checkpoint(path, ckpt);
}

ModelParams load_model(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  ModelParams params;
  auto v = variant_from_name(ckpt.config.at("variant").get<std::string>());
  if (!v) throw format_error(path + ": unknown variant in checkpoint");
  params.variant = *v;
  params.cfg.encoder.hidden = ckpt.config.at("hidden").get<int>();
  params.cfg.encoder.vocab = ckpt.config.at("vocab").get<int>();
  params.cfg.encoder.max_len = ckpt.config.at("max_len").get<int>();
  params.cfg.encoder.blocks = ckpt.config.at("blocks").get<int>();
  params.cfg.encoder.heads = ckpt.config.at("encoder_heads").get<int>();
  params.cfg.attn_heads = ckpt.config.at("heads").get<int>();
  params.cfg.norm = ckpt.config.at("norm").get<std::string>() == "one" ? NormMode::One
                                                                       : NormMode::SqrtDk;
  params.cfg.sg_slots = ckpt.config.at("sg_slots").get<int>();
  params.cfg.rot_count = ckpt.config.at("rot_count").get<int>();
  params.init(0);  // allocate shapes; every tensor is overwritten below
  params.for_each_tensor([&](const std::string& name, Tensor& t) {
    const Tensor& loaded = ckpt.require(name);
    if (!loaded.same_shape(t))
      throw format_error(path + ": tensor " + name + " has unexpected shape");
    t = loaded;
  });
  return params;
}

// ---- model application ----

std::vector<TraceRecord> traces_from_predictions(const std::vector<Prediction>& preds,
                                                 Variant variant) {
  std::vector<TraceRecord> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    TraceRecord t;
    t.instance_id = p.instance_id;
    t.annotator_id = p.annotator_id;
    t.variant = variant_name(variant);
    t.sg_weights = p.trace.sg_weights;
    t.value_weights = p.trace.value_weights;
    t.logits.assign(p.logits.v.begin(), p.logits.v.end());
    t.prediction = judgment_name(p.predicted);
    out.push_back(std::move(t));
  }
  return out;
}

void save_traces(const std::string& path, const std::vector<TraceRecord>& traces) {
  std::vector<Json> recs;
  for (const auto& t : traces) {
    recs.push_back(Json{{"instance_id", t.instance_id},
                        {"annotator_id", t.annotator_id},
                        {"variant", t.variant},
                        {"sg_weights", t.sg_weights},
                        {"value_weights", t.value_weights},
                        {"logits", t.logits},
                        {"prediction", t.prediction}});
  }
  write_jsonl(path, recs);
}

EvalReport evaluate_split(const ModelParams& params, const Corpus& d, const SgIndex& sg,
                          Split split, const StaticEmbedder& embedder,
                          const ClusterArtifact& clusters,
                          std::vector<Prediction>* out_preds) {
  bool with_rots = params.variant == Variant::RotSelfAttention ||
                   params.variant == Variant::LatentSg || params.variant == Variant::StaticSg ||
                   params.variant == Variant::SgAttention;
  auto instances = collect_instances(d, split, with_rots);
  if (instances.empty()) throw validation_error("no instances in the requested split");
  auto preds = predict_all(params, instances, sg);

  EvalReport report;
  std::vector<Judgment> p, g;
  std::vector<int> cluster_ids;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!preds[i].gold) continue;
    p.push_back(preds[i].predicted);
    g.push_back(*preds[i].gold);
    const Situation* s = instances[i].situation;
    auto it = clusters.model.assignments.find(s->id);
    cluster_ids.push_back(it != clusters.model.assignments.end()
                              ? it->second
                              : assign(embedder.embed(s->text), clusters.model));
  }
  report.instances = p.size();
  report.macro = macro_f1(p, g);
  report.acceptable = class_prf(p, g, Judgment::Acceptable);
  report.unacceptable = class_prf(p, g, Judgment::Unacceptable);
  report.per_cluster = cluster_accuracy(p, g, cluster_ids, clusters.per_cluster_silhouette);
  std::vector<double> sil, acc;
  for (const auto& row : report.per_cluster) {
    sil.push_back(row.silhouette);
    acc.push_back(row.f1);
  }
  report.silhouette_correlation =
      sil.size() >= 2 ? pearson(sil, acc) : PearsonResult{std::nullopt, "fewer than 2 clusters"};

  if (out_preds) *out_preds = std::move(preds);
  return report;
}

Json eval_report_json(const EvalReport& report) {
  Json j;
  j["macro_f1"] = report.macro;
  j["instances"] = report.instances;
  auto prf = [](const ClassPrf& c) {
    return Json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}};
  };
  j["acceptable"] = prf(report.acceptable);
  j["unacceptable"] = prf(report.unacceptable);
  Json rows = Json::array();
  for (const auto& r : report.per_cluster)
    rows.push_back(Json{{"cluster", r.cluster},
                        {"count", r.count},
                        {"macro_f1", r.f1},
                        {"silhouette", r.silhouette}});
  j["per_cluster"] = rows;
  if (report.silhouette_correlation.r)
    j["silhouette_pearson_r"] = *report.silhouette_correlation.r;
  else
    j["silhouette_pearson_r"] = nullptr;
  j["silhouette_pearson_note"] = report.silhouette_correlation.note;
  return j;
}

std::string render_eval_report(const EvalReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "macro F1: %.2f over %zu instances\n", report.macro,
                report.instances);
  out << buf;
  auto prf = [&](const char* name, const ClassPrf& c) {
    std::snprintf(buf, sizeof buf, "  %-12s P %.4f  R %.4f  F1 %.4f\n", name, c.precision,
                  c.recall, c.f1);
    out << buf;
  };
  prf("acceptable", report.acceptable);
  prf("unacceptable", report.unacceptable);
  out << "per-cluster macro F1 vs silhouette:\n";
  for (const auto& r : report.per_cluster) {
    std::snprintf(buf, sizeof buf, "  cluster %2d  n=%4zu  F1 %6.2f  sil %+.4f\n", r.cluster,
                  r.count, r.f1, r.silhouette);
    out << buf;
  }
  if (report.silhouette_correlation.r)
    std::snprintf(buf, sizeof buf, "Pearson r (silhouette, accuracy): %.4f\n",
                  *report.silhouette_correlation.r);
  else
    std::snprintf(buf, sizeof buf, "Pearson r undefined: %s\n",
                  report.silhouette_correlation.note.c_str());
  out << buf;
  return out.str();
}

// ---- consistency ----

namespace {

bool variant_has_sg_weights(Variant v) {
  return v == Variant::LatentSg || v == Variant::StaticSg || v == Variant::SgAttentionNoRot ||
         v == Variant::SgAttention;
}

bool variant_has_value_weights(Variant v) {
  return v == Variant::RotSelfAttention || v == Variant::LatentSg || v == Variant::StaticSg ||
         v == Variant::SgAttention;
}

}  // namespace

ConsistencyReport run_consistency(const ModelParams& params, const Corpus& d, const SgIndex& sg,
                                  const std::vector<PerturbationSet>& perturbations, int top_m,
                                  bool predict_from_argmax_rot) {
  ConsistencyReport report;
  report.variant = variant_name(params.variant);
  report.sg.m = top_m;
  report.value_applicable = variant_has_value_weights(params.variant);
  report.sg_applicable = variant_has_sg_weights(params.variant);

  // value consistency over the test split
  if (report.value_applicable) {
    auto instances = collect_instances(d, Split::Test, true);
    auto preds = predict_all(params, instances, sg);
    std::vector<ValueConsistencyInput> inputs;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      ValueConsistencyInput in;
      in.value_weights = preds[i].trace.value_weights;
      for (const auto* rot : d.rots_of(instances[i].situation->id))
        in.rot_polarities.push_back(rot->polarity);
      if (predict_from_argmax_rot && !in.value_weights.empty() &&
          in.value_weights.size() == in.rot_polarities.size()) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < in.value_weights.size(); ++k)
          if (in.value_weights[k] > in.value_weights[best]) best = k;
        in.prediction = in.rot_polarities[best] ? *in.rot_polarities[best] : preds[i].predicted;
      } else {
        in.prediction = preds[i].predicted;
      }
      inputs.push_back(std::move(in));
    }
    report.value = value_consistency(inputs);
  }

  // subjective-ground consistency over the perturbation sets
  if (report.sg_applicable && !perturbations.empty()) {
    std::map<std::string, SgConsistencyKindRow> kind_rows;
    for (const char* k : {"original", "gender", "rephrase", "abstract"})
      kind_rows[k].kind = k;
    std::size_t strict_hits = 0, topm_hits = 0, total = 0;

    for (const auto& set : perturbations) {
      const Situation* original = d.find_situation(set.original_id);
      if (!original)
        throw validation_error("perturbation set references unknown situation " + set.original_id);
      std::vector<std::string> rot_texts;
      for (const auto* r : d.rots_of(original->id)) rot_texts.push_back(r->text);
      if (params.variant == Variant::SgAttentionNoRot) rot_texts.clear();

      // annotators with a judged comment on the original
      std::vector<std::pair<std::string, Judgment>> annotators;
      for (const auto& c : d.comments)
        if (c.situation_id == original->id && c.label)
          annotators.emplace_back(c.annotator_id, *c.label);

      for (const auto& [aid, gold] : annotators) {
        const SgBase* base = sg.find(aid);
        if (!base) {
          ++report.sg.skipped;
          continue;
        }
        Tape tape(false);
        GraphBuilder gb(tape, params);
        ModelOutput orig_out = gb.forward(original->text, base, rot_texts);
        if (orig_out.trace.sg_weights.empty()) {
          ++report.sg.skipped;
          continue;
        }
        auto orig_rank = rank_permutation(orig_out.trace.sg_weights, base->mask);
        Judgment orig_pred = predict_from_logits(tape.value(orig_out.logits));
        auto& orig_row = kind_rows["original"];
        ++orig_row.evaluated;
        ++orig_row.consistent;  // identical input, consistent by construction
        orig_row.top_m += 1.0;
        if (orig_pred == gold) orig_row.accuracy += 1.0;

        for (const auto& variant : set.variants) {
          ModelOutput var_out = gb.forward(variant.text, base, rot_texts);
          auto var_rank = rank_permutation(var_out.trace.sg_weights, base->mask);
          bool strict = same_order(orig_rank, var_rank);
          bool topm = same_top_m(orig_rank, var_rank, top_m);
          Judgment var_pred = predict_from_logits(tape.value(var_out.logits));
          ++total;
          if (strict) ++strict_hits;
          if (topm) ++topm_hits;
          auto& row = kind_rows[perturbation_kind_name(variant.kind)];
          ++row.evaluated;
          if (strict) ++row.consistent;
          row.top_m += topm ? 1.0 : 0.0;
          if (var_pred == gold) row.accuracy += 1.0;
        }
      }
    }

    report.sg.evaluated = total;
    report.sg.strict = total > 0 ? 100.0 * static_cast<double>(strict_hits) / total : 0.0;
    report.sg.top_m = total > 0 ? 100.0 * static_cast<double>(topm_hits) / total : 0.0;
    for (const char* k : {"original", "gender", "rephrase", "abstract"}) {
      auto row = kind_rows[k];
      if (row.evaluated > 0) {
        row.consistency = 100.0 * static_cast<double>(row.consistent) / row.evaluated;
        row.top_m = 100.0 * row.top_m / static_cast<double>(row.evaluated);
        row.accuracy = 100.0 * row.accuracy / static_cast<double>(row.evaluated);
      }
      report.sg.per_kind.push_back(row);
    }
  }

  return report;
}

Json consistency_report_json(const ConsistencyReport& report) {
  Json j;
  j["variant"] = report.variant;
  if (report.value_applicable) {
    j["value_consistency"] = Json{{"percent", report.value.percent},
                                  {"evaluated", report.value.evaluated},
                                  {"excluded", report.value.excluded},
                                  {"matched", report.value.matched}};
  } else {
    j["value_consistency"] = nullptr;
  }
  if (report.sg_applicable) {
    Json rows = Json::array();
    for (const auto& r : report.sg.per_kind)
      rows.push_back(Json{{"kind", r.kind},
                          {"evaluated", r.evaluated},
                          {"consistency", r.consistency},
                          {"top_m", r.top_m},
                          {"accuracy", r.accuracy}});
    j["sg_consistency"] = Json{{"strict", report.sg.strict},
                               {"top_m", report.sg.top_m},
                               {"m", report.sg.m},
                               {"evaluated", report.sg.evaluated},
                               {"skipped", report.sg.skipped},
                               {"per_kind", rows}};
  } else {
    j["sg_consistency"] = nullptr;
  }
  return j;
}

std::string render_consistency_report(const ConsistencyReport& report) {
  std::ostringstream out;
  char buf[160];
  out << "variant: " << report.variant << "\n";
  if (report.value_applicable) {
    std::snprintf(buf, sizeof buf,
                  "value consistency: %.2f%% (%zu evaluated, %zu excluded for unclassifiable "
                  "candidates)\n",
                  report.value.percent, report.value.evaluated, report.value.excluded);
    out << buf;
  } else {
    out << "value consistency: n/a for this variant\n";
  }
  if (report.sg_applicable) {
    std::snprintf(buf, sizeof buf,
                  "sg consistency: strict %.2f%%, top-%d %.2f%% over %zu perturbed inputs\n",
                  report.sg.strict, report.sg.m, report.sg.top_m, report.sg.evaluated);
    out << buf;
    for (const auto& r : report.sg.per_kind) {
      std::snprintf(buf, sizeof buf,
                    "  %-9s n=%4zu  consistency %6.2f%%  top-%d %6.2f%%  accuracy %6.2f%%\n",
                    r.kind.c_str(), r.evaluated, r.consistency, report.sg.m, r.top_m, r.accuracy);
      out << buf;
    }
  } else {
    out << "sg consistency: n/a for this variant\n";
  }
  return out.str();
}

}  // namespace sga
