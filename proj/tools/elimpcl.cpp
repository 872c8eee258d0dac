// Experiment front door: dataset generation, pretraining, adaptation,
// evaluation and feature dumps. Exit codes: 0 success, 2 usage/validation,
// 3 numeric failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "elimpcl/adaptation.hpp"
#include "elimpcl/checkpoint.hpp"
#include "elimpcl/curriculum.hpp"
#include "elimpcl/data.hpp"
#include "elimpcl/errors.hpp"
#include "elimpcl/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace elimpcl;

namespace {

constexpr const char* kArtifactVersion = "0.1.0";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::string& path) {
  return fnv1a64_hex(read_file(path));
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << j.dump(2) << "\n";
}

json manifest_base(const std::string& command) {
  json m;
  m["artifact_version"] = kArtifactVersion;
  m["command"] = command;
  m["prng"] = RandomSource::kAlgorithmId;
  m["generated_at"] = iso_timestamp();
  return m;
}

json adaptation_config_to_json(const AdaptationConfig& cfg) {
  json j;
  j["n_epochs"] = cfg.n_epochs;
  j["k_sub"] = cfg.k_sub;
  j["k_mix"] = cfg.k_mix;
  j["gamma"] = cfg.gamma;
  j["mu"] = cfg.mu;
  j["tau_norm"] = cfg.tau_norm;
  j["alpha_intra"] = cfg.alpha_intra;
  j["alpha_inter"] = cfg.alpha_inter;
  j["beta0"] = cfg.beta0;
  j["betaN"] = cfg.betaN;
  j["lr"] = cfg.lr;
  j["batch_size"] = cfg.batch_size;
  j["weight_decay"] = cfg.weight_decay;
  j["momentum"] = cfg.momentum;
  j["seed"] = cfg.seed;
  j["enable_filtering"] = cfg.enable_filtering;
  j["enable_mixup"] = cfg.enable_mixup;
  j["enable_colearning"] = cfg.enable_colearning;
  j["student_classifier_from_latest"] = cfg.student_classifier_from_latest;
  j["inter_labels_refined"] = cfg.inter_labels_refined;
  j["skip_fusion_on_empty_tt"] = cfg.skip_fusion_on_empty_tt;
  return j;
}

AdaptationConfig adaptation_config_from_json(const json& j) {
  AdaptationConfig cfg;
  try {
    cfg.n_epochs = j.value("n_epochs", cfg.n_epochs);
    cfg.k_sub = j.value("k_sub", cfg.k_sub);
    cfg.k_mix = j.value("k_mix", cfg.k_mix);
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.mu = j.value("mu", cfg.mu);
    cfg.tau_norm = j.value("tau_norm", cfg.tau_norm);
    cfg.alpha_intra = j.value("alpha_intra", cfg.alpha_intra);
    cfg.alpha_inter = j.value("alpha_inter", cfg.alpha_inter);
    cfg.beta0 = j.value("beta0", cfg.beta0);
    cfg.betaN = j.value("betaN", cfg.betaN);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.momentum = j.value("momentum", cfg.momentum);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.enable_filtering = j.value("enable_filtering", cfg.enable_filtering);
    cfg.enable_mixup = j.value("enable_mixup", cfg.enable_mixup);
    cfg.enable_colearning = j.value("enable_colearning", cfg.enable_colearning);
    cfg.student_classifier_from_latest =
        j.value("student_classifier_from_latest", cfg.student_classifier_from_latest);
    cfg.inter_labels_refined =
        j.value("inter_labels_refined", cfg.inter_labels_refined);
    cfg.skip_fusion_on_empty_tt =
        j.value("skip_fusion_on_empty_tt", cfg.skip_fusion_on_empty_tt);
  } catch (const json::exception& e) {
    throw ParseError(std::string("adaptation config: ") + e.what());
  }
  return cfg;
}

struct PerClassReport {
  std::vector<double> per_class;
  double overall = 0.0;
  double avg = 0.0;
};

PerClassReport per_class_accuracy(const ModelParams& model, const Dataset& data) {
  const IntVector pred = predict(model, data.inputs);
  PerClassReport rep;
  rep.per_class.assign(static_cast<std::size_t>(data.class_count), 0.0);
  std::vector<Eigen::Index> total(static_cast<std::size_t>(data.class_count), 0);
  std::vector<Eigen::Index> hit(static_cast<std::size_t>(data.class_count), 0);
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const auto c = static_cast<std::size_t>(data.labels(i));
    ++total[c];
    if (pred(i) == data.labels(i)) {
      ++hit[c];
      ++hits;
    }
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < total.size(); ++c) {
    rep.per_class[c] = total[c] > 0
                           ? static_cast<double>(hit[c]) / static_cast<double>(total[c])
                           : 0.0;
    if (total[c] > 0) {
      sum += rep.per_class[c];
      ++present;
    }
  }
  rep.overall = static_cast<double>(hits) / static_cast<double>(data.size());
  rep.avg = present > 0 ? sum / present : 0.0;
  return rep;
}

void print_per_class_table(const PerClassReport& rep) {
  std::printf("class  accuracy\n");
  for (std::size_t c = 0; c < rep.per_class.size(); ++c)
    std::printf("%5zu  %8.4f\n", c, rep.per_class[c]);
  std::printf("  AVG  %8.4f\n", rep.avg);
  std::printf("overall %7.4f\n", rep.overall);
}

// ---------------------------------------------------------------- gen

struct GenOptions {
  std::string config_path;
  std::string out_dir;
  int n_source = 800;
  int n_target = 800;
  int n_universal = 1600;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_gen(const GenOptions& opt) {
  ShiftConfig cfg = ShiftConfig::defaults();
  int n_source = opt.n_source, n_target = opt.n_target, n_universal = opt.n_universal;
  std::uint64_t seed = opt.seed;
  if (!opt.config_path.empty()) {
    const std::string text = read_file(opt.config_path);
    cfg = shift_config_from_json(text);
    json j = json::parse(text);
    n_source = j.value("n_source", n_source);
    n_target = j.value("n_target", n_target);
    n_universal = j.value("n_universal", n_universal);
    if (!opt.seed_set) seed = j.value("seed", seed);
  }
  cfg.validate();
  if (n_source < cfg.class_count || n_target < cfg.class_count ||
      n_universal < cfg.class_count)
    throw UsageError("gen: sample counts must be >= class_count");

  fs::create_directories(opt.out_dir);
  RandomSource rng(seed);
  auto [source, target] = generate_benchmark(cfg, n_source, n_target, rng);
  const Dataset universal = generate_universal(cfg, n_universal, rng);

  const std::string src_path = opt.out_dir + "/source.csv";
  const std::string tgt_path = opt.out_dir + "/target.csv";
  const std::string uni_path = opt.out_dir + "/universal.csv";
  save_dataset(source, src_path);
  save_dataset(target, tgt_path);
  save_dataset(universal, uni_path);

  json manifest = manifest_base("gen");
  manifest["seed"] = seed;
  manifest["config"] = json::parse(shift_config_to_json(cfg));
  manifest["config"]["n_source"] = n_source;
  manifest["config"]["n_target"] = n_target;
  manifest["config"]["n_universal"] = n_universal;
  manifest["outputs"] = {{"source.csv", file_digest(src_path)},
                         {"target.csv", file_digest(tgt_path)},
                         {"universal.csv", file_digest(uni_path)}};
  write_json(manifest, opt.out_dir + "/manifest.json");

  std::printf("wrote %d source, %d target, %d universal samples to %s\n",
              n_source, n_target, n_universal, opt.out_dir.c_str());
  return 0;
}

// ----------------------------------------------------------- pretrain

struct PretrainOptions {
  std::string data_path;
  std::string out_path;
  std::string init_path;  // warm-start extractor checkpoint
  int epochs = 60;
  std::uint64_t seed = 0;
  std::vector<int> hidden{32};
  int feature_dim = 16;
  double lr = 5e-3;
  int batch_size = 64;
  double weight_decay = 1e-4;
  double momentum = 0.9;
};

int cmd_pretrain(const PretrainOptions& opt) {
  const Dataset data = load_dataset(opt.data_path);
  PretrainConfig cfg;
  cfg.hidden_dims = opt.hidden;
  cfg.feature_dim = opt.feature_dim;
  cfg.batch_size = opt.batch_size;
  cfg.sgd = SgdOptions{opt.lr, opt.momentum, opt.weight_decay};

  ModelParams warm;
  const bool has_warm = !opt.init_path.empty();
  if (has_warm) warm = load_checkpoint(opt.init_path);

  RandomSource rng(opt.seed);
  const PretrainResult res =
      pretrain(data, cfg, opt.epochs, rng, has_warm ? &warm : nullptr);
  save_checkpoint(res.params, opt.out_path);

  json manifest = manifest_base("pretrain");
  manifest["seed"] = opt.seed;
  manifest["config"] = {{"epochs", opt.epochs},
                        {"hidden", opt.hidden},
                        {"feature_dim", opt.feature_dim},
                        {"lr", opt.lr},
                        {"batch_size", opt.batch_size},
                        {"weight_decay", opt.weight_decay},
                        {"momentum", opt.momentum}};
  manifest["inputs"] = {{"data", file_digest(opt.data_path)}};
  if (has_warm) manifest["inputs"]["init"] = file_digest(opt.init_path);
  manifest["outputs"] = {{"checkpoint", file_digest(opt.out_path)}};
  manifest["train_accuracy"] = res.train_accuracy;
  write_json(manifest, opt.out_path + ".manifest.json");

  std::printf("train accuracy: %.6f\n", res.train_accuracy);
  if (res.low_accuracy_warning)
    std::fprintf(stderr, "warning: train accuracy below 0.80; model may not have converged\n");
  return 0;
}

// -------------------------------------------------------------- adapt

struct AdaptOptions {
  std::string source_path;
  std::string universal_path;
  std::string target_path;
  std::string out_dir;
  std::string config_path;
  bool baseline = false;
  std::vector<std::string> ablate;
  std::string seeds_spec;  // e.g. "0..4" or "0,1,2"
  bool dump_splits = false;
  AdaptationConfig overrides;  // merged below
  CLI::App* sub = nullptr;     // for flag-presence queries
};

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const auto lo = std::stoull(spec.substr(0, dots));
    const auto hi = std::stoull(spec.substr(dots + 2));
    if (hi < lo) throw UsageError("--seeds: range end below start");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw UsageError("--seeds: empty seed list");
  return seeds;
}

struct SeedRunOutput {
  std::uint64_t seed = 0;
  double final_accuracy = 0.0;
  PerClassReport report;
  std::string dir;
};

void write_split_dump(const EpochView& view, const std::string& dir) {
  char name[64];
  std::snprintf(name, sizeof(name), "%s/split_epoch%03d.csv", dir.c_str(),
                view.epoch);
  std::ofstream out(name);
  if (!out) throw UsageError(std::string("cannot write ") + name);
  out << "index,hard,refined,entropy_norm,subset\n";
  std::vector<char> in_tt(static_cast<std::size_t>(view.pseudo.size()), 0);
  for (int i : view.split.trustworthy) in_tt[static_cast<std::size_t>(i)] = 1;
  for (Eigen::Index i = 0; i < view.pseudo.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", view.pseudo.entropy_norm(i));
    out << i << "," << view.pseudo.hard(i) << "," << view.pseudo.refined(i)
        << "," << buf << ","
        << (in_tt[static_cast<std::size_t>(i)] ? "tt" : "ut") << "\n";
  }
}

SeedRunOutput run_one_seed(const AdaptOptions& opt, AdaptationConfig cfg,
                           std::uint64_t seed, const std::string& dir,
                           const ModelParams& source, const ModelParams& universal,
                           const Dataset& target) {
  cfg.seed = seed;
  fs::create_directories(dir);

  const EpochProbe base_probe = make_ground_truth_probe(target);
  EpochProbe probe = base_probe;
  if (opt.dump_splits) {
    const std::string split_dir = dir + "/splits";
    fs::create_directories(split_dir);
    probe = [base_probe, split_dir](const EpochView& view) {
      write_split_dump(view, split_dir);
      return base_probe(view);
    };
  }

  const TargetView view = TargetView::of(target);
  AdaptationResult result =
      opt.baseline ? adapt_baseline(source, view, cfg, probe)
                   : adapt(source, universal, view, cfg, probe);

  const std::string model_path = dir + "/model.json";
  const std::string metrics_path = dir + "/metrics.csv";
  save_checkpoint(result.model, model_path);
  write_metrics_csv(result.log, metrics_path);

  json manifest = manifest_base(opt.baseline ? "adapt --baseline" : "adapt");
  manifest["seed"] = seed;
  manifest["config"] = adaptation_config_to_json(cfg);
  manifest["inputs"] = {{"source", file_digest(opt.source_path)},
                        {"target", file_digest(opt.target_path)}};
  if (!opt.universal_path.empty())
    manifest["inputs"]["universal"] = file_digest(opt.universal_path);
  manifest["outputs"] = {{"model.json", file_digest(model_path)},
                         {"metrics.csv", file_digest(metrics_path)}};
  write_json(manifest, dir + "/manifest.json");

  SeedRunOutput out;
  out.seed = seed;
  out.report = per_class_accuracy(result.model, target);
  out.final_accuracy = out.report.overall;
  out.dir = dir;
  return out;
}

int cmd_adapt(const AdaptOptions& opt) {
  AdaptationConfig cfg;
  if (!opt.config_path.empty())
    cfg = adaptation_config_from_json(json::parse(read_file(opt.config_path)));

  // CLI flags override the config file.
  const auto* sub = opt.sub;
  auto picked = [&](const std::string& flag) { return sub->count(flag) > 0; };
  if (picked("--epochs")) cfg.n_epochs = opt.overrides.n_epochs;
  if (picked("--k-sub")) cfg.k_sub = opt.overrides.k_sub;
  if (picked("--k-mix")) cfg.k_mix = opt.overrides.k_mix;
  if (picked("--gamma")) cfg.gamma = opt.overrides.gamma;
  if (picked("--mu")) cfg.mu = opt.overrides.mu;
  if (picked("--tau")) cfg.tau_norm = opt.overrides.tau_norm;
  if (picked("--alpha-intra")) cfg.alpha_intra = opt.overrides.alpha_intra;
  if (picked("--alpha-inter")) cfg.alpha_inter = opt.overrides.alpha_inter;
  if (picked("--beta0")) cfg.beta0 = opt.overrides.beta0;
  if (picked("--betaN")) cfg.betaN = opt.overrides.betaN;
  if (picked("--lr")) cfg.lr = opt.overrides.lr;
  if (picked("--batch")) cfg.batch_size = opt.overrides.batch_size;
  if (picked("--weight-decay")) cfg.weight_decay = opt.overrides.weight_decay;
  if (picked("--momentum")) cfg.momentum = opt.overrides.momentum;
  if (picked("--seed")) cfg.seed = opt.overrides.seed;
  if (sub->count("--student-classifier-from-latest"))
    cfg.student_classifier_from_latest = true;
  if (sub->count("--inter-labels-refined")) cfg.inter_labels_refined = true;
  if (sub->count("--skip-fusion-on-empty-tt")) cfg.skip_fusion_on_empty_tt = true;

  for (const auto& a : opt.ablate) {
    if (a == "filtering")
      cfg.enable_filtering = false;
    else if (a == "mixup")
      cfg.enable_mixup = false;
    else if (a == "colearning")
      cfg.enable_colearning = false;
    else
      throw UsageError("--ablate: unknown module '" + a +
                       "' (expected filtering|mixup|colearning)");
  }
  cfg.validate();

  const ModelParams source = load_checkpoint(opt.source_path);
  const Dataset target = load_dataset(opt.target_path, source.class_count());

  ModelParams universal;
  const bool needs_universal = !opt.baseline && cfg.enable_colearning;
  if (needs_universal) {
    if (opt.universal_path.empty())
      throw UsageError("adapt: --universal required unless --baseline or "
                       "--ablate colearning");
    universal = load_checkpoint(opt.universal_path);
    if (universal.input_dim() != source.input_dim() ||
        universal.feature_dim() != source.feature_dim())
      throw UsageError(
          "adapt: checkpoint shapes incompatible: source " +
          std::to_string(source.input_dim()) + "->" +
          std::to_string(source.feature_dim()) + ", universal " +
          std::to_string(universal.input_dim()) + "->" +
          std::to_string(universal.feature_dim()));
  } else {
    universal = source;  // unused by the run
  }

  std::vector<std::uint64_t> seeds{cfg.seed};
  bool multi = false;
  if (!opt.seeds_spec.empty()) {
    seeds = parse_seeds(opt.seeds_spec);
    multi = seeds.size() > 1;
  }

  std::vector<SeedRunOutput> outputs(seeds.size());
  if (multi) {
    std::vector<std::thread> workers;
    workers.reserve(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          const std::string dir =
              opt.out_dir + "/seed" + std::to_string(seeds[i]);
          outputs[i] = run_one_seed(opt, cfg, seeds[i], dir, source, universal,
                                    target);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    outputs[0] =
        run_one_seed(opt, cfg, seeds[0], opt.out_dir, source, universal, target);
  }

  for (const auto& out : outputs) {
    std::printf("seed %llu: final target accuracy %.6f (%s)\n",
                static_cast<unsigned long long>(out.seed), out.final_accuracy,
                out.dir.c_str());
  }
  if (outputs.size() == 1) print_per_class_table(outputs[0].report);
  return 0;
}

// --------------------------------------------------------------- eval

struct EvalOptions {
  std::string ckpt_path;
  std::string data_path;
  std::string json_out;
};

int cmd_eval(const EvalOptions& opt) {
  const ModelParams model = load_checkpoint(opt.ckpt_path);
  const Dataset data = load_dataset(opt.data_path, model.class_count());
  const PerClassReport rep = per_class_accuracy(model, data);
  std::printf("accuracy: %.9f\n", rep.overall);
  print_per_class_table(rep);
  if (!opt.json_out.empty()) {
    json j;
    j["overall"] = rep.overall;
    j["per_class"] = rep.per_class;
    j["avg"] = rep.avg;
    j["n"] = static_cast<long long>(data.size());
    write_json(j, opt.json_out);
  }
  return 0;
}

// ------------------------------------------------------ dump-features

struct DumpOptions {
  std::string ckpt_path;
  std::string data_path;
  std::string out_path;
  double tau_norm = 0.5;
};

int cmd_dump_features(const DumpOptions& opt) {
  const ModelParams model = load_checkpoint(opt.ckpt_path);
  const Dataset data = load_dataset(opt.data_path, model.class_count());
  const TargetView view = TargetView::of(data);

  const ForwardRecord rec = forward(model, view.inputs);
  PseudoLabelSet pl = pseudo_label(model, view);
  const PrototypeSet protos = compute_prototypes(model, view);
  pl.refined = refine_labels(rec.features, protos);
  pl.has_refined = true;
  const SubsetSplit split = split_trustworthy(pl, opt.tau_norm);
  std::vector<char> in_tt(static_cast<std::size_t>(data.size()), 0);
  for (int i : split.trustworthy) in_tt[static_cast<std::size_t>(i)] = 1;

  std::ofstream out(opt.out_path);
  if (!out) throw UsageError("cannot write " + opt.out_path);
  out << "index,label,subset";
  for (Eigen::Index d = 0; d < rec.features.cols(); ++d) out << ",f" << d;
  out << "\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << i << "," << data.labels(i) << ","
        << (in_tt[static_cast<std::size_t>(i)] ? "tt" : "ut");
    for (Eigen::Index d = 0; d < rec.features.cols(); ++d) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", rec.features(i, d));
      out << "," << buf;
    }
    out << "\n";
  }
  std::printf("wrote %lld feature rows to %s\n",
              static_cast<long long>(data.size()), opt.out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ElimPCL: source-free domain adaptation on synthetic shifts"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* sub_gen = app.add_subcommand("gen", "generate benchmark datasets");
  sub_gen->add_option("--config", gen.config_path, "shift config JSON");
  sub_gen->add_option("--out", gen.out_dir, "output directory")->required();
  sub_gen->add_option("--n-source", gen.n_source);
  sub_gen->add_option("--n-target", gen.n_target);
  sub_gen->add_option("--n-universal", gen.n_universal);
  auto* gen_seed = sub_gen->add_option("--seed", gen.seed);

  PretrainOptions pre;
  auto* sub_pre = app.add_subcommand("pretrain", "train a model on a dataset");
  sub_pre->add_option("--data", pre.data_path, "dataset CSV")->required();
  sub_pre->add_option("--out", pre.out_path, "checkpoint path")->required();
  sub_pre->add_option("--init", pre.init_path,
                      "checkpoint whose extractor warm-starts training");
  sub_pre->add_option("--epochs", pre.epochs);
  sub_pre->add_option("--seed", pre.seed);
  sub_pre->add_option("--hidden", pre.hidden, "hidden layer dims");
  sub_pre->add_option("--feature-dim", pre.feature_dim);
  sub_pre->add_option("--lr", pre.lr);
  sub_pre->add_option("--batch", pre.batch_size);
  sub_pre->add_option("--weight-decay", pre.weight_decay);
  sub_pre->add_option("--momentum", pre.momentum);

  AdaptOptions ad;
  auto* sub_ad = app.add_subcommand("adapt", "run adaptation on a target set");
  sub_ad->add_option("--source", ad.source_path, "source checkpoint")->required();
  sub_ad->add_option("--universal", ad.universal_path, "universal checkpoint");
  sub_ad->add_option("--target", ad.target_path, "target CSV")->required();
  sub_ad->add_option("--out", ad.out_dir, "output directory")->required();
  sub_ad->add_option("--config", ad.config_path, "adaptation config JSON");
  sub_ad->add_flag("--baseline", ad.baseline, "naive self-training baseline");
  sub_ad->add_option("--ablate", ad.ablate,
                     "disable a module: filtering|mixup|colearning");
  sub_ad->add_option("--seeds", ad.seeds_spec, "seed range 'a..b' or list 'a,b,c'");
  sub_ad->add_flag("--dump-splits", ad.dump_splits, "write per-epoch split CSVs");
  sub_ad->add_option("--epochs", ad.overrides.n_epochs);
  sub_ad->add_option("--k-sub", ad.overrides.k_sub);
  sub_ad->add_option("--k-mix", ad.overrides.k_mix);
  sub_ad->add_option("--gamma", ad.overrides.gamma);
  sub_ad->add_option("--mu", ad.overrides.mu);
  sub_ad->add_option("--tau", ad.overrides.tau_norm);
  sub_ad->add_option("--alpha-intra", ad.overrides.alpha_intra);
  sub_ad->add_option("--alpha-inter", ad.overrides.alpha_inter);
  sub_ad->add_option("--beta0", ad.overrides.beta0);
  sub_ad->add_option("--betaN", ad.overrides.betaN);
  sub_ad->add_option("--lr", ad.overrides.lr);
  sub_ad->add_option("--batch", ad.overrides.batch_size);
  sub_ad->add_option("--weight-decay", ad.overrides.weight_decay);
  sub_ad->add_option("--momentum", ad.overrides.momentum);
  sub_ad->add_option("--seed", ad.overrides.seed);
  sub_ad->add_flag("--student-classifier-from-latest");
  sub_ad->add_flag("--inter-labels-refined");
  sub_ad->add_flag("--skip-fusion-on-empty-tt");
  ad.sub = sub_ad;

  EvalOptions ev;
  auto* sub_ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  sub_ev->add_option("--ckpt", ev.ckpt_path)->required();
  sub_ev->add_option("--data", ev.data_path)->required();
  sub_ev->add_option("--json", ev.json_out, "also write a JSON report");

  DumpOptions dump;
  auto* sub_dump =
      app.add_subcommand("dump-features", "write feature-space coordinates");
  sub_dump->add_option("--ckpt", dump.ckpt_path)->required();
  sub_dump->add_option("--data", dump.data_path)->required();
  sub_dump->add_option("--out", dump.out_path)->required();
  sub_dump->add_option("--tau", dump.tau_norm, "split threshold for the subset column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  gen.seed_set = gen_seed->count() > 0;

  try {
    if (sub_gen->parsed()) return cmd_gen(gen);
    if (sub_pre->parsed()) return cmd_pretrain(pre);
    if (sub_ad->parsed()) return cmd_adapt(ad);
    if (sub_ev->parsed()) return cmd_eval(ev);
    if (sub_dump->parsed()) return cmd_dump_features(dump);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
