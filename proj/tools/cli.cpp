#include "cli.hpp"

#include "matn/biasmf.hpp"
#include "matn/checkpoint.hpp"
#include "matn/evaluation.hpp"
#include "matn/interactions.hpp"
#include "matn/model.hpp"
#include "matn/synthetic.hpp"
#include "matn/training.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace matn::cli {

namespace {

using json = nlohmann::json;

#ifndef MATN_BUILD_VERSION
#define MATN_BUILD_VERSION "unknown"
#endif

struct DataFlags {
  std::string data;
  std::string behaviors;
  std::string target;
  std::string keep_behaviors;
  std::string eval_negatives = "any";
  bool full_data = false;
};

struct CommonFlags {
  DataFlags data;
  TrainConfig config;
  std::string train_negatives = "target";
  std::string out;
  std::string checkpoint;
  std::string loss_log;
  std::string metrics_out;
  std::string manifest;
  std::string cutoffs = "1,3,5,7,9,10";
};

void add_data_flags(CLI::App& app, DataFlags& f, bool with_keep = true) {
  app.add_option("--data", f.data, "Interaction TSV (user, item, behavior)")
      ->required();
  app.add_option("--behaviors", f.behaviors,
                 "Comma-separated behavior labels, e.g. view,fav,cart,buy")
      ->required();
  app.add_option("--target", f.target, "Target behavior label")->required();
  if (with_keep) {
    app.add_option("--keep-behaviors", f.keep_behaviors,
                   "Train on this behavior subset (must include the target)");
  }
  app.add_option("--eval-negatives", f.eval_negatives,
                 "Evaluation negatives avoid: any|target interactions");
  app.add_flag("--full-data", f.full_data,
               "Train on all events instead of holding out one per user");
}

void add_hyper_flags(CLI::App& app, CommonFlags& f) {
  auto& c = f.config;
  app.add_option("--seed", c.seed, "Seed for all randomness");
  app.add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--dim", c.dim, "Hidden dimension d");
  app.add_option("--heads", c.heads, "Attention heads H");
  app.add_option("--memories", c.memories, "Memory matrices M");
  app.add_option("--depth", c.depth, "Feature-extraction depth N");
  app.add_option("--samples", c.samples, "Positive/negative pairs per user per step");
  app.add_option("--lr", c.learning_rate, "Adam learning rate");
  app.add_option("--lr-decay", c.lr_decay, "Per-epoch learning-rate decay");
  app.add_option("--reg", c.reg, "L2 regularization weight");
  app.add_option("--batch-size", c.batch_size, "Users per mini-batch");
  app.add_option("--epochs", c.epochs, "Training epochs");
  app.add_option("--train-negatives", f.train_negatives,
                 "Training negatives avoid: target|any interactions");
  app.add_flag("--no-transformer", c.disable_transformer, "MATN-T ablation");
  app.add_flag("--no-memory", c.disable_memory, "MATN-M ablation");
  app.add_flag("--mean-gate", c.mean_pool_gate, "MATN-G ablation");
  app.add_flag("--raw-attn-weights", c.raw_attention_weights,
               "Mix values with unnormalized attention logits");
  app.add_flag("--mean-project", c.mean_project,
               "Average instead of sum item embeddings per behavior");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> parse_cutoffs(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& part : split_csv(s)) {
    std::size_t k = 0;
    try {
      k = std::stoul(part);
    } catch (const std::exception&) {
      throw Error("bad cutoff '" + part + "'");
    }
    if (k == 0) throw Error("cutoffs must be >= 1");
    out.push_back(k);
  }
  if (out.empty()) throw Error("no cutoffs given");
  return out;
}

BehaviorSchema make_schema(const DataFlags& f) {
  return BehaviorSchema(split_csv(f.behaviors), f.target);
}

// The full data, its leave-one-out split, and the tensor models train on.
struct PreparedData {
  InteractionTensor full;
  SplitResult split;
  InteractionTensor train;
  std::string keep_description;
};

PreparedData prepare(const DataFlags& f, std::uint64_t seed,
                     std::ostream& err, bool warn = true) {
  const auto schema = make_schema(f);
  auto full = load_interactions(f.data, schema);
  auto split =
      leave_one_out_split(full, seed, parse_negative_rule(f.eval_negatives));
  if (warn) {
    for (const auto& w : split.split.warnings) err << "warning: " << w << '\n';
  }
  const InteractionTensor& base = f.full_data ? full : split.train;
  std::set<std::size_t> keep;
  if (f.keep_behaviors.empty()) {
    for (std::size_t l = 0; l < schema.size(); ++l) keep.insert(l);
  } else {
    keep = parse_behavior_set(schema, f.keep_behaviors);
  }
  auto train = behavior_subset(base, keep);
  return {std::move(full), std::move(split), std::move(train), f.keep_behaviors};
}

json config_json(const TrainConfig& c) {
  return {{"dim", c.dim},
          {"heads", c.heads},
          {"memories", c.memories},
          {"depth", c.depth},
          {"samples", c.samples},
          {"lr", c.learning_rate},
          {"lr_decay", c.lr_decay},
          {"reg", c.reg},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"activation", "relu"},
          {"seed", c.seed},
          {"workers", c.workers},
          {"train_negatives", std::string(to_string(c.train_negatives))},
          {"no_transformer", c.disable_transformer},
          {"no_memory", c.disable_memory},
          {"mean_gate", c.mean_pool_gate},
          {"raw_attn_weights", c.raw_attention_weights},
          {"mean_project", c.mean_project}};
}

void write_atomically(const std::filesystem::path& path,
                      const std::string& content) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_manifest(const std::string& path, const std::string& command,
                    const CommonFlags& f, const std::vector<EpochLog>& log) {
  json epochs = json::array();
  for (const auto& e : log) epochs.push_back(e.seconds);
  const json manifest = {
      {"command", command},
      {"version", MATN_BUILD_VERSION},
      {"seed", f.config.seed},
      {"data",
       {{"path", f.data.data},
        {"behaviors", f.data.behaviors},
        {"target", f.data.target},
        {"keep_behaviors", f.data.keep_behaviors},
        {"eval_negatives", f.data.eval_negatives},
        {"full_data", f.data.full_data}}},
      {"checkpoint", f.out},
      {"loss_log", f.loss_log},
      {"config", config_json(f.config)},
      {"epoch_seconds", epochs}};
  write_atomically(path, manifest.dump(2) + "\n");
}

void emit_metrics(const RankingMetrics& metrics, const CommonFlags& f,
                  std::ostream& out) {
  if (f.metrics_out.empty()) {
    write_metrics_csv(out, metrics);
  } else {
    std::ostringstream csv;
    write_metrics_csv(csv, metrics);
    write_atomically(f.metrics_out, csv.str());
  }
}

void finalize_config(CommonFlags& f) {
  f.config.train_negatives = parse_negative_rule(f.train_negatives);
  f.config.validate();
}

// Refuses a checkpoint whose dimensions disagree with the data.
void check_compatible(const CheckpointHeader& h, const InteractionTensor& train,
                      std::size_t target_index) {
  auto mismatch = [](const std::string& what, std::size_t ckpt,
                     std::size_t data) {
    throw ConsistencyError("checkpoint/data mismatch in " + what +
                           ": checkpoint has " + std::to_string(ckpt) +
                           ", data has " + std::to_string(data));
  };
  if (h.users != train.num_users()) mismatch("users (I)", h.users, train.num_users());
  if (h.items != train.num_items()) mismatch("items (J)", h.items, train.num_items());
  if (h.model == ModelCode::kMatnRelu && h.behaviors != train.num_behaviors()) {
    mismatch("behaviors (L)", h.behaviors, train.num_behaviors());
  }
  if (h.target_index != target_index) {
    mismatch("target index", h.target_index, target_index);
  }
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_train(CommonFlags& f, std::ostream& out, std::ostream& err) {
  finalize_config(f);
  auto data = prepare(f.data, f.config.seed, err);
  auto result = train(data.train, f.config, [&](const EpochLog& e) {
    err << "epoch " << e.epoch << " loss " << e.mean_pair_loss << " lr "
        << e.lr << " (" << std::fixed << std::setprecision(3) << e.seconds
        << "s)\n"
        << std::defaultfloat;
  });
  save_checkpoint(result.params, f.config, data.train.num_users(),
                  data.train.schema().target_index(), f.out);
  if (!f.loss_log.empty()) write_loss_log(f.loss_log, result.log);
  write_manifest(f.manifest.empty() ? f.out + ".manifest.json" : f.manifest,
                 "train", f, result.log);
  out << "wrote " << f.out << '\n';
  return 0;
}

int cmd_evaluate(CommonFlags& f, std::ostream& out, std::ostream& err) {
  const auto data = prepare(f.data, f.config.seed, err);
  const auto header = read_checkpoint_header(f.checkpoint);
  check_compatible(header, data.train, data.train.schema().target_index());
  const auto cutoffs = parse_cutoffs(f.cutoffs);
  RankingMetrics metrics;
  if (header.model == ModelCode::kBiasMF) {
    const auto params = load_biasmf_checkpoint(f.checkpoint);
    metrics = biasmf_evaluate(params, data.split.split, cutoffs, f.config.workers);
  } else {
    auto model = load_checkpoint(f.checkpoint);
    model.config.workers = f.config.workers;
    metrics = evaluate(data.train, data.split.split, model.params, model.config,
                       cutoffs);
  }
  emit_metrics(metrics, f, out);
  err << "users evaluated: " << metrics.users_evaluated << '\n';
  return 0;
}

int cmd_recommend(CommonFlags& f, const std::string& user_id, std::size_t topk,
                  std::ostream& out, std::ostream& err) {
  const auto data = prepare(f.data, f.config.seed, err, /*warn=*/false);
  const auto model = load_checkpoint(f.checkpoint);
  CheckpointHeader header;
  header.users = static_cast<std::uint32_t>(model.users);
  header.items = static_cast<std::uint32_t>(model.params.shape.items);
  header.behaviors = static_cast<std::uint32_t>(model.params.shape.behaviors);
  header.target_index = static_cast<std::uint32_t>(model.target_index);
  check_compatible(header, data.train, data.train.schema().target_index());

  const auto user = data.train.users().find(user_id);
  if (!user) throw Error("unknown user '" + user_id + "'");
  const auto trace = forward(data.train, *user, model.params, model.config);
  const auto& seen = data.train.target_items(*user);
  std::vector<std::pair<double, Index>> ranked;
  for (Index j = 0; j < data.train.num_items(); ++j) {
    if (std::binary_search(seen.begin(), seen.end(), j)) continue;
    ranked.emplace_back(score(trace.gamma, j, model.params), j);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  if (ranked.size() > topk) ranked.resize(topk);
  out << "item,score\n" << std::setprecision(10);
  for (const auto& [s, j] : ranked) {
    out << data.train.items().external(j) << ',' << s << '\n';
  }
  return 0;
}

int cmd_export_weights(CommonFlags& f, const std::string& users,
                       std::ostream& out, std::ostream& err) {
  const auto data = prepare(f.data, f.config.seed, err, /*warn=*/false);
  const auto model = load_checkpoint(f.checkpoint);
  CheckpointHeader header;
  header.users = static_cast<std::uint32_t>(model.users);
  header.items = static_cast<std::uint32_t>(model.params.shape.items);
  header.behaviors = static_cast<std::uint32_t>(model.params.shape.behaviors);
  header.target_index = static_cast<std::uint32_t>(model.target_index);
  check_compatible(header, data.train, data.train.schema().target_index());

  const auto& schema = data.train.schema();
  std::ostringstream csv;
  csv << "user,block,head,row,col,weight\n" << std::setprecision(17);
  for (const auto& id : split_csv(users)) {
    const auto user = data.train.users().find(id);
    if (!user) {
      err << "warning: unknown user '" << id << "' skipped\n";
      continue;
    }
    const auto trace = forward(data.train, *user, model.params, model.config);
    for (std::size_t h = 0; h < trace.attn_weights.size(); ++h) {
      const auto& a = trace.attn_weights[h];
      for (Eigen::Index l = 0; l < a.rows(); ++l) {
        for (Eigen::Index m = 0; m < a.cols(); ++m) {
          csv << id << ",attention," << h << ',' << schema.name(l) << ','
              << schema.name(m) << ',' << a(l, m) << '\n';
        }
      }
    }
    for (Eigen::Index m = 0; m < trace.mem_weights.rows(); ++m) {
      for (Eigen::Index l = 0; l < trace.mem_weights.cols(); ++l) {
        csv << id << ",memory,," << "m" << m << ',' << schema.name(l) << ','
            << trace.mem_weights(m, l) << '\n';
      }
    }
    for (Eigen::Index l = 0; l < trace.gate_weights.size(); ++l) {
      csv << id << ",gate,," << schema.name(l) << ",," << trace.gate_weights(l)
          << '\n';
    }
  }
  if (f.out.empty()) {
    out << csv.str();
  } else {
    write_atomically(f.out, csv.str());
  }
  return 0;
}

struct Variant {
  std::string name;
  TrainConfig config;
  std::set<std::size_t> keep;
};

Variant parse_variant(const std::string& name, const TrainConfig& base,
                      const BehaviorSchema& schema,
                      const std::set<std::size_t>& all) {
  Variant v{name, base, all};
  if (name == "full") return v;
  if (name == "no-transformer") {
    v.config.disable_transformer = true;
  } else if (name == "no-memory") {
    v.config.disable_memory = true;
  } else if (name == "mean-gate") {
    v.config.mean_pool_gate = true;
  } else if (name == "target-only") {
    v.keep = {schema.target_index()};
  } else if (name.starts_with("without-")) {
    const auto label = name.substr(8);
    const auto l = schema.find(label);
    if (!l) throw InvalidAblationError("unknown behavior '" + label + "'");
    v.keep.erase(*l);
    if (!v.keep.contains(schema.target_index())) {
      throw InvalidAblationError("variant " + name + " drops the target behavior");
    }
  } else if (name.starts_with("keep-")) {
    auto labels = name.substr(5);
    std::replace(labels.begin(), labels.end(), '+', ',');
    v.keep = parse_behavior_set(schema, labels);
    if (!v.keep.contains(schema.target_index())) {
      throw InvalidAblationError("variant " + name + " drops the target behavior");
    }
  } else {
    throw InvalidAblationError(
        "unknown variant '" + name +
        "' (full, no-transformer, no-memory, mean-gate, target-only, "
        "without-<label>, keep-<a>+<b>)");
  }
  return v;
}

int cmd_ablate(CommonFlags& f, const std::string& variants, std::ostream& out,
               std::ostream& err) {
  finalize_config(f);
  auto data = prepare(f.data, f.config.seed, err);
  const auto& schema = data.full.schema();
  const InteractionTensor& base = f.data.full_data ? data.full : data.split.train;
  std::set<std::size_t> all;
  for (std::size_t l = 0; l < schema.size(); ++l) all.insert(l);
  if (!f.data.keep_behaviors.empty()) all = parse_behavior_set(schema, f.data.keep_behaviors);
  const auto cutoffs = parse_cutoffs(f.cutoffs);

  std::vector<Variant> plan;
  for (const auto& name : split_csv(variants)) {
    plan.push_back(parse_variant(name, f.config, schema, all));
  }
  std::ostringstream csv;
  csv << "variant,k,hr,ndcg\n";
  for (const auto& v : plan) {
    err << "variant " << v.name << '\n';
    const auto tensor = behavior_subset(base, v.keep);
    const auto result = train(tensor, v.config);
    const auto metrics =
        evaluate(tensor, data.split.split, result.params, v.config, cutoffs);
    write_metrics_csv(csv, metrics, /*header=*/false, v.name + ",");
  }
  if (f.metrics_out.empty()) {
    out << csv.str();
  } else {
    write_atomically(f.metrics_out, csv.str());
  }
  return 0;
}

int cmd_baseline_biasmf(CommonFlags& f, std::ostream& out, std::ostream& err) {
  finalize_config(f);
  auto data = prepare(f.data, f.config.seed, err);
  const auto result = biasmf_train(data.train, f.config);
  if (!f.out.empty()) {
    save_biasmf_checkpoint(result.params, data.train.schema().target_index(),
                           f.out);
    write_manifest(f.manifest.empty() ? f.out + ".manifest.json" : f.manifest,
                   "baseline-biasmf", f, result.log);
  }
  if (!f.loss_log.empty()) write_loss_log(f.loss_log, result.log);
  const auto metrics = biasmf_evaluate(result.params, data.split.split,
                                       parse_cutoffs(f.cutoffs), f.config.workers);
  emit_metrics(metrics, f, out);
  return 0;
}

struct SynthFlags {
  SynthSpec spec;
  std::string behaviors = "view,fav,cart,buy";
  std::string funnel = "0.5,0.5,0.5";
  std::string out;
};

int cmd_gen_synthetic(SynthFlags& f, std::ostream& out, std::ostream& err) {
  f.spec.behaviors = split_csv(f.behaviors);
  f.spec.funnel_probs.clear();
  for (const auto& p : split_csv(f.funnel)) {
    try {
      f.spec.funnel_probs.push_back(std::stod(p));
    } catch (const std::exception&) {
      throw Error("bad funnel probability '" + p + "'");
    }
  }
  f.spec.validate();
  for (const auto& w : synth_warnings(f.spec)) err << "warning: " << w << '\n';
  const auto tensor = generate(f.spec);
  tensor.save_tsv(f.out);
  const json sidecar = {{"users", f.spec.num_users},
                        {"items", f.spec.num_items},
                        {"behaviors", f.spec.behaviors},
                        {"target", f.spec.behaviors.back()},
                        {"latent_dim", f.spec.latent_dim},
                        {"funnel_probs", f.spec.funnel_probs},
                        {"base_rate", f.spec.base_rate},
                        {"noise_std", f.spec.noise_std},
                        {"seed", f.spec.seed},
                        {"events", tensor.num_events()}};
  write_atomically(f.out + ".json", sidecar.dump(2) + "\n");
  out << "wrote " << f.out << " (" << tensor.num_events() << " events)\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Multi-behavior recommendation with memory-augmented transformers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MATN_BUILD_VERSION);

  CommonFlags train_f, eval_f, rec_f, export_f, ablate_f, biasmf_f;
  std::string user_id, users, variants = "full,no-transformer,no-memory,mean-gate,target-only";
  std::size_t topk = 10;
  SynthFlags synth;

  auto* train_cmd = app.add_subcommand("train", "Train MATN and write a checkpoint");
  add_data_flags(*train_cmd, train_f.data);
  add_hyper_flags(*train_cmd, train_f);
  train_cmd->add_option("--out", train_f.out, "Checkpoint path")->required();
  train_cmd->add_option("--loss-log", train_f.loss_log, "Per-epoch loss CSV");
  train_cmd->add_option("--manifest", train_f.manifest,
                        "Run manifest path (default <out>.manifest.json)");

  auto* eval_cmd = app.add_subcommand("evaluate", "Leave-one-out HR/NDCG for a checkpoint");
  add_data_flags(*eval_cmd, eval_f.data);
  eval_cmd->add_option("--seed", eval_f.config.seed, "Split seed (match training)");
  eval_cmd->add_option("--workers", eval_f.config.workers)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--checkpoint", eval_f.checkpoint)->required();
  eval_cmd->add_option("--cutoffs", eval_f.cutoffs, "Comma-separated k values");
  eval_cmd->add_option("--metrics-out", eval_f.metrics_out, "Write CSV here instead of stdout");

  auto* rec_cmd = app.add_subcommand("recommend", "Top-K items for one user");
  add_data_flags(*rec_cmd, rec_f.data);
  rec_cmd->add_option("--seed", rec_f.config.seed);
  rec_cmd->add_option("--checkpoint", rec_f.checkpoint)->required();
  rec_cmd->add_option("--user", user_id, "External user id")->required();
  rec_cmd->add_option("--topk", topk)->check(CLI::PositiveNumber);

  auto* export_cmd = app.add_subcommand("export-weights",
                                        "Dump attention, memory and gate weights per user");
  add_data_flags(*export_cmd, export_f.data);
  export_cmd->add_option("--seed", export_f.config.seed);
  export_cmd->add_option("--checkpoint", export_f.checkpoint)->required();
  export_cmd->add_option("--users", users, "Comma-separated external user ids")->required();
  export_cmd->add_option("--out", export_f.out, "CSV path (default stdout)");

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate a matrix of variants");
  add_data_flags(*ablate_cmd, ablate_f.data);
  add_hyper_flags(*ablate_cmd, ablate_f);
  ablate_cmd->add_option("--variants", variants,
                         "full,no-transformer,no-memory,mean-gate,target-only,"
                         "without-<label>,keep-<a>+<b>");
  ablate_cmd->add_option("--cutoffs", ablate_f.cutoffs);
  ablate_cmd->add_option("--metrics-out", ablate_f.metrics_out);

  auto* biasmf_cmd = app.add_subcommand("baseline-biasmf",
                                        "Train and evaluate the BiasMF baseline");
  add_data_flags(*biasmf_cmd, biasmf_f.data, /*with_keep=*/false);
  add_hyper_flags(*biasmf_cmd, biasmf_f);
  biasmf_cmd->add_option("--out", biasmf_f.out, "Checkpoint path");
  biasmf_cmd->add_option("--loss-log", biasmf_f.loss_log);
  biasmf_cmd->add_option("--manifest", biasmf_f.manifest);
  biasmf_cmd->add_option("--cutoffs", biasmf_f.cutoffs);
  biasmf_cmd->add_option("--metrics-out", biasmf_f.metrics_out);

  auto* synth_cmd = app.add_subcommand("gen-synthetic", "Generate funnel-structured data");
  synth_cmd->add_option("--users", synth.spec.num_users);
  synth_cmd->add_option("--items", synth.spec.num_items);
  synth_cmd->add_option("--behaviors", synth.behaviors, "Funnel order, target last");
  synth_cmd->add_option("--funnel", synth.funnel, "Conditional probabilities, L-1 values");
  synth_cmd->add_option("--base-rate", synth.spec.base_rate, "Fraction of pairs viewed");
  synth_cmd->add_option("--latent-dim", synth.spec.latent_dim);
  synth_cmd->add_option("--noise", synth.spec.noise_std);
  synth_cmd->add_option("--seed", synth.spec.seed);
  synth_cmd->add_option("--out", synth.out, "TSV path; spec goes to <out>.json")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << MATN_BUILD_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(train_f, out, err);
    if (*eval_cmd) return cmd_evaluate(eval_f, out, err);
    if (*rec_cmd) return cmd_recommend(rec_f, user_id, topk, out, err);
    if (*export_cmd) return cmd_export_weights(export_f, users, out, err);
    if (*ablate_cmd) return cmd_ablate(ablate_f, variants, out, err);
    if (*biasmf_cmd) return cmd_baseline_biasmf(biasmf_f, out, err);
    if (*synth_cmd) return cmd_gen_synthetic(synth, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace matn::cli
