// Copyright (c) 2026 the svkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// svkit: batch speaker-verification experiments.
// Exit codes: 0 ok, 2 usage/config, 3 numeric failure, 4 data failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "svkit/archive.hpp"
#include "svkit/calibration.hpp"
#include "svkit/config.hpp"
#include "svkit/dataset.hpp"
#include "svkit/error.hpp"
#include "svkit/features.hpp"
#include "svkit/metrics.hpp"
#include "svkit/network.hpp"
#include "svkit/scoring.hpp"
#include "svkit/train.hpp"
#include "svkit/wav.hpp"

namespace fs = std::filesystem;
using namespace svkit;

namespace {

struct SpeakerTable {
  std::map<std::string, int64_t> to_id;
  std::vector<std::string> names;
};

SpeakerTable speaker_table(const std::vector<DatasetEntry>& entries) {
  SpeakerTable table;
  std::set<std::string> uniq;
  for (const auto& e : entries) uniq.insert(e.utt.speaker);
  for (const auto& name : uniq) {
    table.to_id[name] = static_cast<int64_t>(table.names.size());
    table.names.push_back(name);
  }
  return table;
}

std::vector<TrainUtterance> load_training_features(const std::vector<DatasetEntry>& entries,
                                                   const SpeakerTable& table, int64_t n_mels,
                                                   const WaveformTransform& augment = {}) {
  LogMelOptions opts;
  opts.n_mels = n_mels;
  std::vector<TrainUtterance> data;
  data.reserve(entries.size());
  for (const auto& e : entries) {
    Waveform w = read_wav(e.path);
    if (augment) w = augment(w);
    TrainUtterance t;
    t.id = e.utt.id;
    t.speaker = table.to_id.at(e.utt.speaker);
    t.domain = e.utt.domain;
    t.features = logmel(w, opts);
    data.push_back(std::move(t));
  }
  return data;
}

void write_metrics_log(const std::string& path, const TrainResult& result) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write metrics log: " + path);
  char buf[128];
  for (const auto& r : result.log) {
    std::snprintf(buf, sizeof(buf), "%lld %.17g %.17g %.6f\n", static_cast<long long>(r.iter),
                  r.loss, r.lr, r.acc);
    os << buf;
  }
}

NamedParams checkpoint_view(Network& net, AamHead& head) {
  NamedParams all;
  for (const auto& [name, t] : net.params()) all.emplace_back("net." + name, t);
  head.collect("head", all);
  return all;
}

NamedBuffers buffer_view(Network& net) {
  NamedBuffers all;
  for (const auto& [name, v] : net.buffers()) all.emplace_back("net." + name, v);
  return all;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::string& stage, std::optional<uint64_t> seed_override) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  if (seed_override) cfg.seed = *seed_override;
  if (stage != "base" && stage != "lmft") throw ConfigError("stage must be base or lmft");
  if (cfg.train_list.empty()) throw ConfigError("config: train_list is required");
  if (stage == "lmft" && !cfg.lmft_enabled)
    throw ConfigError("config: lmft stage requested but lmft_enabled is false");

  fs::create_directories(out_dir);
  const NetworkConfig net_cfg = cfg.network_config();
  const std::vector<DatasetEntry> entries = read_metadata(cfg.train_list);
  if (entries.empty()) throw ConfigError("train: empty training list");
  const SpeakerTable table = speaker_table(entries);
  const std::vector<TrainUtterance> data =
      load_training_features(entries, table, net_cfg.n_mels);

  auto net = build_network(net_cfg, cfg.seed);
  Rng head_rng(cfg.seed + 0x9e3779b9ULL);
  const StageConfig& sc = stage == "base" ? cfg.base : cfg.lmft;
  AamHead head(static_cast<int64_t>(table.names.size()), net_cfg.subcenters, net_cfg.emb_dim,
               sc.margin, sc.aam_scale, head_rng);

  const std::string base_ckpt = (fs::path(out_dir) / "base").string();
  if (stage == "lmft") {
    if (!checkpoint_exists(base_ckpt))
      throw ConfigError("lmft stage requires a base checkpoint at " + base_ckpt + ".manifest");
    NamedParams view = checkpoint_view(*net, head);
    NamedBuffers bufs = buffer_view(*net);
    load_checkpoint(base_ckpt, view, bufs, cfg.hash());
    head.set_margin(sc.margin);
  }

  TrainOptions opts;
  opts.iterations = sc.iterations;
  opts.batch_size = sc.batch_size;
  opts.crop_s = sc.crop_s;
  opts.specaug_f = sc.specaug_f;
  opts.specaug_t = sc.specaug_t;
  opts.schedule = sc.schedule;
  opts.decay = cfg.decay_groups();
  opts.seed = cfg.seed + (stage == "lmft" ? 1 : 0);
  opts.stop_accuracy = sc.stop_accuracy;
  if (stage == "lmft") {
    opts.domain_balanced = true;
    opts.balance_count = sc.balance_count > 0 ? sc.balance_count
                                              : static_cast<int64_t>(table.names.size());
    opts.in_domain = sc.in_domain;
  }

  const std::string stage_ckpt = (fs::path(out_dir) / stage).string();
  auto checkpoint_hook = [&](int64_t iter) {
    NamedParams view = checkpoint_view(*net, head);
    save_checkpoint(stage_ckpt + "_iter" + std::to_string(iter), view, buffer_view(*net),
                    cfg.hash());
  };

  TrainResult result = train_loop(*net, head, data, opts, checkpoint_hook);

  NamedParams view = checkpoint_view(*net, head);
  save_checkpoint(stage_ckpt, view, buffer_view(*net), cfg.hash());
  write_metrics_log((fs::path(out_dir) / ("metrics_" + stage + ".log")).string(), result);
  std::printf("trained %s stage: %lld iterations, final acc %.3f\n", stage.c_str(),
              static_cast<long long>(result.iterations_run),
              result.log.empty() ? 0.0 : result.log.back().acc);
  return 0;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

int cmd_extract(const std::string& config_path, const std::string& checkpoint,
                const std::string& list_path, const std::string& out_base,
                const std::string& layer, bool average_by_speaker) {
  if (layer != "embedding" && layer != "pooling")
    throw ConfigError("--layer must be embedding or pooling");
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  const NetworkConfig net_cfg = cfg.network_config();
  auto net = build_network(net_cfg, cfg.seed);
  NamedParams net_view;
  for (const auto& [name, t] : net->params()) net_view.emplace_back("net." + name, t);
  NamedBuffers bufs = buffer_view(*net);
  load_checkpoint(checkpoint, net_view, bufs, cfg.hash(), /*allow_extra=*/true);

  const std::vector<DatasetEntry> entries = read_metadata(list_path);
  LogMelOptions mel_opts;
  mel_opts.n_mels = net_cfg.n_mels;

  struct Extracted {
    std::string id;
    std::vector<double> vec;
    ArchiveMeta meta;
    std::string speaker;
  };
  std::vector<Extracted> rows;
  std::vector<std::string> failures;
  for (const auto& e : entries) {
    try {
      Waveform w = read_wav(e.path);
      FeatureMatrix f = mean_normalize(logmel(w, mel_opts));
      Network::ForwardOut out = net->forward(f.tensor(), /*training=*/false);
      Extracted row;
      row.id = e.utt.id;
      row.vec = (layer == "embedding" ? out.embedding : out.pooled).values();
      row.meta = {w.duration_s(), e.utt.language, e.utt.gender, e.utt.domain};
      row.speaker = e.utt.speaker;
      rows.push_back(std::move(row));
    } catch (const DataError& err) {
      failures.push_back(e.utt.id + ": " + err.what());
    }
  }

  ArchiveWriter writer(out_base);
  if (average_by_speaker) {
    // one length-normalized mean per speaker (imposter models for s-norm)
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < rows.size(); ++i) groups[rows[i].speaker].push_back(i);
    for (const auto& [speaker, idxs] : groups) {
      std::vector<SpeakerEmbedding> members;
      double dur = 0.0;
      for (size_t i : idxs) {
        members.push_back({rows[i].vec, false});
        dur += rows[i].meta.duration_s;
      }
      const SpeakerEmbedding model = enroll_model(members);
      ArchiveMeta meta = rows[idxs[0]].meta;
      meta.duration_s = dur / static_cast<double>(idxs.size());
      writer.add(speaker, model.v, meta);
    }
  } else {
    for (const auto& row : rows) writer.add(row.id, row.vec, row.meta);
  }
  writer.close();

  for (const auto& f : failures) std::fprintf(stderr, "extract error: %s\n", f.c_str());
  std::printf("extracted %zu %s vectors to %s\n", rows.size(), layer.c_str(), out_base.c_str());
  return failures.empty() ? 0 : 4;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

int cmd_score(const std::string& archive_base, const std::string& trials_path,
              const std::string& out_path, const std::string& enroll_map_path,
              int64_t snorm_k, const std::string& cohort_base) {
  const Archive archive = Archive::load(archive_base);
  const std::vector<Trial> trials = read_trial_list(trials_path);
  std::map<std::string, std::vector<std::string>> enroll_map;
  if (!enroll_map_path.empty()) enroll_map = read_enroll_map(enroll_map_path);

  const bool use_snorm = snorm_k > 0;
  std::vector<SpeakerEmbedding> cohort;
  if (use_snorm) {
    if (cohort_base.empty()) throw ConfigError("--snorm requires --cohort");
    const Archive cohort_archive = Archive::load(cohort_base);
    for (const auto& id : cohort_archive.ids())
      cohort.push_back({cohort_archive.vector(id), false});
    if (cohort.size() < 2) throw ConfigError("--snorm requires a cohort of at least 2 imposters");
    snorm_k = std::clamp<int64_t>(snorm_k, 2, static_cast<int64_t>(cohort.size()));
  }

  auto enroll_embedding = [&](const std::string& id) -> SpeakerEmbedding {
    auto it = enroll_map.find(id);
    if (it == enroll_map.end()) return {archive.vector(id), false};
    std::vector<SpeakerEmbedding> members;
    for (const auto& utt : it->second) members.push_back({archive.vector(utt), false});
    return enroll_model(members);
  };

  std::map<std::string, SpeakerEmbedding> enroll_cache;
  std::map<std::string, CohortStats> stats_cache;
  auto side_stats = [&](const std::string& key, const SpeakerEmbedding& side) {
    auto it = stats_cache.find(key);
    if (it != stats_cache.end()) return it->second;
    CohortStats st = cohort_stats(side, cohort, snorm_k);
    stats_cache[key] = st;
    return st;
  };

  std::vector<ScoreRecord> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    if (!enroll_cache.count(t.enroll_id)) enroll_cache[t.enroll_id] = enroll_embedding(t.enroll_id);
    const SpeakerEmbedding& e = enroll_cache[t.enroll_id];
    const SpeakerEmbedding test{archive.vector(t.test_id), false};
    double s = cosine_score(e, test);
    if (use_snorm)
      s = snorm(s, side_stats("e:" + t.enroll_id, e), side_stats("t:" + t.test_id, test));
    out.push_back({t.enroll_id, t.test_id, s});
  }
  write_score_file(out_path, out);
  std::printf("scored %zu trials to %s\n", out.size(), out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct QmSources {
  std::vector<std::string> names;
  std::optional<Archive> archive;  // test durations
  std::map<std::string, std::vector<std::string>> enroll_map;
  std::optional<GaussianBackend> gb;
  std::optional<Archive> pool_archive;  // test pooling features
};

std::vector<double> qm_vector(const QmSources& q, const Trial& t) {
  std::vector<double> qms;
  for (const auto& name : q.names) {
    if (name == "duration") {
      qms.push_back(qm_duration(q.archive->meta(t.test_id).duration_s));
    } else if (name == "enroll_count") {
      auto it = q.enroll_map.find(t.enroll_id);
      qms.push_back(qm_enroll_count(
          it == q.enroll_map.end() ? 1 : static_cast<int64_t>(it->second.size())));
    } else if (name == "language") {
      qms.push_back(q.gb->llr(q.pool_archive->vector(t.test_id)));
    }
  }
  return qms;
}

QmSources build_qm_sources(const std::vector<std::string>& qms, const std::string& archive_base,
                           const std::string& enroll_map_path, const std::string& pool_base,
                           const std::string& gb_train_base, const std::string& lang_a,
                           const std::string& lang_b) {
  QmSources q;
  q.names = qms;
  for (const auto& name : qms) {
    if (name == "duration") {
      if (archive_base.empty()) throw ConfigError("duration QM requires --archive");
      if (!q.archive) q.archive = Archive::load(archive_base);
    } else if (name == "enroll_count") {
      if (enroll_map_path.empty()) throw ConfigError("enroll_count QM requires --enroll-map");
      q.enroll_map = read_enroll_map(enroll_map_path);
    } else if (name == "language") {
      if (pool_base.empty() || gb_train_base.empty())
        throw ConfigError("language QM requires --pool-archive and --gb-train-archive");
      q.pool_archive = Archive::load(pool_base);
      const Archive train = Archive::load(gb_train_base);
      std::vector<std::vector<double>> a, b;
      for (const auto& id : train.ids()) {
        const std::string& lang = train.meta(id).language;
        if (lang == lang_a) a.push_back(train.vector(id));
        if (lang == lang_b) b.push_back(train.vector(id));
      }
      if (a.size() < 2 || b.size() < 2)
        throw ConfigError("language QM: gb training archive needs >= 2 utterances of " + lang_a +
                          " and " + lang_b);
      q.gb = GaussianBackend::train(a, b);
    } else {
      throw ConfigError("unknown QM: " + name);
    }
  }
  return q;
}

// joins scores with labels; a score row without a label is a usage error
std::vector<std::pair<ScoreRecord, Trial>> join_labeled(const std::vector<ScoreRecord>& scores,
                                                        const std::vector<Trial>& trials) {
  std::map<std::pair<std::string, std::string>, Trial> by_key;
  for (const auto& t : trials) by_key[{t.enroll_id, t.test_id}] = t;
  std::vector<std::pair<ScoreRecord, Trial>> rows;
  for (const auto& s : scores) {
    auto it = by_key.find({s.enroll_id, s.test_id});
    if (it == by_key.end() || it->second.label == TrialLabel::kUnknown)
      throw ConfigError("no label for trial " + s.enroll_id + " " + s.test_id);
    rows.emplace_back(s, it->second);
  }
  return rows;
}

int cmd_calibrate(const std::string& scores_path, const std::string& trials_path,
                  const std::string& out_model, const std::vector<std::string>& qms,
                  const std::string& archive_base, const std::string& enroll_map_path,
                  const std::string& pool_base, const std::string& gb_train_base,
                  const std::string& lang_a, const std::string& lang_b, double prior,
                  const std::string& apply_path) {
  const std::vector<ScoreRecord> scores = read_score_file(scores_path);
  const std::vector<Trial> trials = read_trial_list(trials_path);
  const auto rows = join_labeled(scores, trials);
  QmSources q = build_qm_sources(qms, archive_base, enroll_map_path, pool_base, gb_train_base,
                                 lang_a, lang_b);

  std::vector<CalibrationTrial> cal;
  cal.reserve(rows.size());
  for (const auto& [s, t] : rows)
    cal.push_back({s.score, qm_vector(q, t), t.label == TrialLabel::kTarget});

  CalibrationModel model = calibrate_train(cal, prior, qms);
  save_calibration(out_model, model);
  std::printf("calibration: bias %.6f w_score %.6f", model.bias, model.w_score);
  for (size_t i = 0; i < model.w_qm.size(); ++i)
    std::printf(" %s %.6f", model.qm_names[i].c_str(), model.w_qm[i]);
  std::printf("\n");

  if (!apply_path.empty()) {
    std::vector<ScoreRecord> out;
    for (size_t i = 0; i < rows.size(); ++i)
      out.push_back({rows[i].first.enroll_id, rows[i].first.test_id,
                     calibrate_apply(model, rows[i].first.score, cal[i].qms)});
    write_score_file(apply_path, out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fuse / eval
// ---------------------------------------------------------------------------

int cmd_fuse(const std::vector<std::string>& score_paths, const std::vector<double>& weights,
             const std::string& out_path) {
  if (score_paths.empty()) throw ConfigError("fuse: need at least one score file");
  if (score_paths.size() != weights.size())
    throw ConfigError("fuse: weight count must match score files");
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("fuse: weights must sum to 1");

  std::vector<std::vector<ScoreRecord>> sets;
  for (const auto& p : score_paths) sets.push_back(read_score_file(p));
  for (size_t k = 1; k < sets.size(); ++k) {
    if (sets[k].size() != sets[0].size()) throw DataError("fuse: misaligned trial lists");
    for (size_t i = 0; i < sets[k].size(); ++i)
      if (sets[k][i].enroll_id != sets[0][i].enroll_id || sets[k][i].test_id != sets[0][i].test_id)
        throw DataError("fuse: trial mismatch at line " + std::to_string(i + 1));
  }
  std::vector<std::vector<double>> values(sets.size());
  for (size_t k = 0; k < sets.size(); ++k)
    for (const auto& r : sets[k]) values[k].push_back(r.score);
  const std::vector<double> fused = fuse(values, weights);
  std::vector<ScoreRecord> out;
  for (size_t i = 0; i < fused.size(); ++i)
    out.push_back({sets[0][i].enroll_id, sets[0][i].test_id, fused[i]});
  write_score_file(out_path, out);
  std::printf("fused %zu systems over %zu trials\n", sets.size(), fused.size());
  return 0;
}

int cmd_eval(const std::string& scores_path, const std::string& trials_path,
             const std::string& out_path, double p_target, double c_miss, double c_fa) {
  const std::vector<ScoreRecord> scores = read_score_file(scores_path);
  const std::vector<Trial> trials = read_trial_list(trials_path);
  const auto rows = join_labeled(scores, trials);
  std::vector<ScoredTrial> st;
  st.reserve(rows.size());
  for (const auto& [s, t] : rows) st.push_back({s.score, t.label == TrialLabel::kTarget});
  const EvalReport report = evaluate(st, p_target, c_miss, c_fa);
  const std::string text = format_report(report);
  std::fputs(text.c_str(), stdout);
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw DataError("cannot write report: " + out_path);
    os << text;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// toy-dataset
// ---------------------------------------------------------------------------

int cmd_toy_dataset(const std::string& out_dir, const ToyDatasetOptions& opts,
                    int64_t trials_per_speaker, bool cross_gender) {
  const std::vector<UttRecord> utts = generate_toy_dataset(out_dir, opts);
  std::printf("toy dataset: %zu utterances under %s\n", utts.size(), out_dir.c_str());
  if (trials_per_speaker > 0) {
    Rng rng(opts.seed + 0x5eedULL);
    const TrialSet set = make_calibration_trials(utts, trials_per_speaker, rng, cross_gender);
    write_trial_list((fs::path(out_dir) / "trials.txt").string(), set.trials);
    write_enroll_map((fs::path(out_dir) / "enroll.map").string(), set.enroll_models);
    std::printf("toy dataset: %zu trials, %zu enrollment models\n", set.trials.size(),
                set.enroll_models.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svkit: desk-scale speaker verification toolkit"};
  app.require_subcommand(1);
  std::function<int()> run;

  auto* toy = app.add_subcommand("toy-dataset", "synthesize a labeled toy corpus");
  ToyDatasetOptions toy_opts;
  std::string toy_out;
  int64_t toy_trials = 0;
  bool toy_same_gender = false;
  toy->add_option("--out", toy_out, "output directory")->required();
  toy->add_option("--seed", toy_opts.seed, "rng seed");
  toy->add_option("--speakers", toy_opts.speakers, "speaker count");
  toy->add_option("--utts", toy_opts.utts_per_speaker, "utterances per speaker");
  toy->add_option("--dur-lo", toy_opts.duration_lo_s, "min duration seconds");
  toy->add_option("--dur-hi", toy_opts.duration_hi_s, "max duration seconds");
  toy->add_option("--primary-fraction", toy_opts.primary_fraction,
                  "fraction of utterances in the primary pseudo-language");
  toy->add_option("--domains", toy_opts.domains, "domain count");
  toy->add_option("--trials-per-speaker", toy_trials,
                  "also emit a balanced trial list (multiple of 4)");
  toy->add_flag("--same-gender-imposters", toy_same_gender,
                "allow same-gender nontarget trials");
  toy->callback([&] {
    run = [&] { return cmd_toy_dataset(toy_out, toy_opts, toy_trials, !toy_same_gender); };
  });

  auto* train = app.add_subcommand("train", "train a speaker embedding network");
  std::string train_config, train_out, train_stage = "base";
  std::optional<uint64_t> train_seed;
  train->add_option("--config", train_config, "experiment config json")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--stage", train_stage, "base or lmft");
  train->add_option("--seed", train_seed, "override config seed");
  train->callback([&] {
    run = [&] { return cmd_train(train_config, train_out, train_stage, train_seed); };
  });

  auto* extract = app.add_subcommand("extract", "extract embeddings into an archive");
  std::string ex_config, ex_ckpt, ex_list, ex_out, ex_layer = "embedding";
  bool ex_avg = false;
  extract->add_option("--config", ex_config, "experiment config json")->required();
  extract->add_option("--checkpoint", ex_ckpt, "checkpoint base path")->required();
  extract->add_option("--list", ex_list, "metadata list (id path speaker lang gender domain dur)")
      ->required();
  extract->add_option("--out", ex_out, "archive base path")->required();
  extract->add_option("--layer", ex_layer, "embedding|pooling");
  extract->add_flag("--average-by-speaker", ex_avg,
                    "store one length-normalized mean per speaker");
  extract->callback([&] {
    run = [&] { return cmd_extract(ex_config, ex_ckpt, ex_list, ex_out, ex_layer, ex_avg); };
  });

  auto* score = app.add_subcommand("score", "cosine-score a trial list");
  std::string sc_archive, sc_trials, sc_out, sc_enroll_map, sc_cohort;
  int64_t sc_snorm = 0;
  score->add_option("--archive", sc_archive, "embedding archive base")->required();
  score->add_option("--trials", sc_trials, "trial list")->required();
  score->add_option("--out", sc_out, "score file")->required();
  score->add_option("--enroll-map", sc_enroll_map, "enrollment model map");
  score->add_option("--snorm", sc_snorm, "adaptive s-norm with top-K cohort");
  score->add_option("--cohort", sc_cohort, "imposter model archive base");
  score->callback([&] {
    run = [&] {
      return cmd_score(sc_archive, sc_trials, sc_out, sc_enroll_map, sc_snorm, sc_cohort);
    };
  });

  auto* cal = app.add_subcommand("calibrate", "train quality-aware score calibration");
  std::string ca_scores, ca_trials, ca_out, ca_archive, ca_enroll_map, ca_pool, ca_gb;
  std::string ca_lang_a = "farsi", ca_lang_b = "english", ca_apply;
  std::vector<std::string> ca_qms;
  double ca_prior = 0.01;
  cal->add_option("--scores", ca_scores, "raw score file")->required();
  cal->add_option("--trials", ca_trials, "labeled trial list")->required();
  cal->add_option("--out", ca_out, "model output path")->required();
  cal->add_option("--qm", ca_qms, "quality measures: duration enroll_count language");
  cal->add_option("--archive", ca_archive, "test embedding archive (durations)");
  cal->add_option("--enroll-map", ca_enroll_map, "enrollment model map (counts)");
  cal->add_option("--pool-archive", ca_pool, "pooling-feature archive for test utterances");
  cal->add_option("--gb-train-archive", ca_gb, "pooling-feature archive with language labels");
  cal->add_option("--lang-a", ca_lang_a, "positive-class language tag");
  cal->add_option("--lang-b", ca_lang_b, "negative-class language tag");
  cal->add_option("--prior", ca_prior, "effective target prior");
  cal->add_option("--apply", ca_apply, "also write calibrated llr scores here");
  cal->callback([&] {
    run = [&] {
      return cmd_calibrate(ca_scores, ca_trials, ca_out, ca_qms, ca_archive, ca_enroll_map,
                           ca_pool, ca_gb, ca_lang_a, ca_lang_b, ca_prior, ca_apply);
    };
  });

  auto* fu = app.add_subcommand("fuse", "weighted average of aligned score files");
  std::vector<std::string> fu_scores;
  std::vector<double> fu_weights;
  std::string fu_out;
  fu->add_option("--scores", fu_scores, "score files")->required();
  fu->add_option("--weights", fu_weights, "weights summing to 1")->required();
  fu->add_option("--out", fu_out, "fused score file")->required();
  fu->callback([&] { run = [&] { return cmd_fuse(fu_scores, fu_weights, fu_out); }; });

  auto* ev = app.add_subcommand("eval", "EER / MinDCF report");
  std::string ev_scores, ev_trials, ev_out;
  double ev_pt = 0.01, ev_cm = 10.0, ev_cf = 1.0;
  ev->add_option("--scores", ev_scores, "score file")->required();
  ev->add_option("--trials", ev_trials, "labeled trial list")->required();
  ev->add_option("--out", ev_out, "also write the report here");
  ev->add_option("--ptarget", ev_pt, "target prior");
  ev->add_option("--cmiss", ev_cm, "miss cost");
  ev->add_option("--cfa", ev_cf, "false-alarm cost");
  ev->callback([&] {
    run = [&] { return cmd_eval(ev_scores, ev_trials, ev_out, ev_pt, ev_cm, ev_cf); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return 2;
  }
}
