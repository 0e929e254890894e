#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "manifest.hpp"
#include "uap/uap.hpp"

namespace uap::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

/// Thrown for semantically invalid flag combinations found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T value{};
    if (!(is >> value) || !is.eof()) {
      throw UsageError(std::string("--") + flag + ": cannot parse '" + item + "'");
    }
    out.push_back(value);
  }
  return out;
}

void finish(const CLI::App& sub, const std::vector<fs::path>& outputs, Clock::time_point start) {
  Manifest m = manifest_for(sub);
  for (const auto& out : outputs) m.set("output", out.string());
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
  m.set("wall_clock_ms", std::to_string(ms));
  for (const auto& out : outputs) m.write(manifest_path(out));
}

void check_dims(const Model& model, const Dataset& data) {
  if (model.input_dim() != data.dim()) {
    throw Error("model expects dimension " + std::to_string(model.input_dim()) +
                " but data has dimension " + std::to_string(data.dim()));
  }
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------- gen-data

struct GenDataOptions {
  BlobConfig blobs;
  std::string out;
};

void add_gen_data(CLI::App& app, GenDataOptions& o) {
  auto* sub = app.add_subcommand("gen-data", "Generate a synthetic Gaussian-blob dataset");
  sub->add_option("--classes", o.blobs.num_classes, "Number of classes")->check(CLI::Range(2, 65535));
  sub->add_option("--per-class", o.blobs.per_class, "Examples per class")->check(CLI::PositiveNumber);
  sub->add_option("--dim", o.blobs.dim, "Feature dimension")->check(CLI::Range(2, 1 << 24));
  sub->add_option("--margin", o.blobs.margin, "Minimum center distance in units of sigma")
      ->check(CLI::PositiveNumber);
  sub->add_option("--sigma", o.blobs.noise_sigma, "Cluster noise standard deviation")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.blobs.seed, "Generator seed");
  sub->add_option("--out", o.out, "Output dataset file (.uapd)")->required();
}

int run_gen_data(const CLI::App& sub, const GenDataOptions& o) {
  const auto start = Clock::now();
  const Dataset data = generate_blobs(o.blobs);
  save_dataset(data, o.out);
  std::cout << "wrote " << data.size() << " images (" << data.num_classes() << " classes, dim "
            << data.dim() << ") to " << o.out << "\n";
  finish(sub, {o.out}, start);
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainOptions {
  std::string data;
  std::size_t epochs = 30;
  double lr = 0.05;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  std::string hidden = "64";
  double init_scale = 2.45;
  std::string out;
};

void add_train(CLI::App& app, TrainOptions& o) {
  auto* sub = app.add_subcommand("train", "Train an MLP classifier on a dataset file");
  sub->add_option("--data", o.data, "Training dataset (.uapd)")->required();
  sub->add_option("--epochs", o.epochs, "Training epochs (0 saves the initialized model)");
  sub->add_option("--lr", o.lr, "SGD learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--batch", o.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "Initialization and shuffling seed");
  sub->add_option("--hidden", o.hidden, "Comma-separated hidden layer widths (empty for linear)");
  sub->add_option("--init-scale", o.init_scale, "Weight init scale s (bound s/sqrt(fan_in))")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "Output model file (.uapm)")->required();
}

int run_train(const CLI::App& sub, const TrainOptions& o) {
  const auto start = Clock::now();
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch;
  cfg.seed = o.seed;
  cfg.hidden = parse_list<std::size_t>(o.hidden, "hidden");
  if (std::find(cfg.hidden.begin(), cfg.hidden.end(), 0u) != cfg.hidden.end()) {
    throw UsageError("--hidden: widths must be positive");
  }
  cfg.weight_init_scale = o.init_scale;
  const Dataset data = load_dataset(o.data);
  const auto result = train(data, cfg);
  save_model(result.model, o.out);
  std::cout << "train accuracy: " << fmt(result.train_accuracy) << "\n"
            << "final loss: " << fmt(result.final_loss, 6) << "\n";
  finish(sub, {o.out}, start);
  return kExitOk;
}

// ------------------------------------------------------------------ attack

struct AttackOptions {
  std::string model;
  std::string data;
  std::size_t per_class = 50;
  std::optional<double> xi;
  std::optional<double> xi_rel;
  std::string p = "2";
  double target_rate = 0.8;
  std::size_t max_passes = 10;
  std::string warm_start;
  std::uint64_t seed = 0;
  double overshoot = 0.02;
  std::size_t max_iter = 50;
  std::size_t candidates = 0;
  bool no_shuffle = false;
  std::string heldout_out;
  std::string out;
};

void add_attack(CLI::App& app, AttackOptions& o) {
  auto* sub = app.add_subcommand("attack", "Compute a universal perturbation");
  sub->add_option("--model", o.model, "Model file (.uapm)")->required();
  sub->add_option("--data", o.data, "Dataset the attack set is sampled from (.uapd)")->required();
  sub->add_option("--per-class", o.per_class, "Attack-set images per class")->check(CLI::PositiveNumber);
  auto* xi = sub->add_option("--xi", o.xi, "Norm budget")->check(CLI::PositiveNumber);
  auto* rel = sub->add_option("--xi-rel", o.xi_rel, "Norm budget as a multiple of the median image norm of X")
                  ->check(CLI::PositiveNumber);
  xi->excludes(rel);
  sub->add_option("--p", o.p, "Norm order")->check(CLI::IsMember({"2", "inf"}));
  sub->add_option("--target-rate", o.target_rate, "Stop once this fooling rate is reached on X")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--max-passes", o.max_passes, "Maximum passes over X");
  sub->add_option("--warm-start", o.warm_start, "Initial perturbation file (.uapp)");
  sub->add_option("--seed", o.seed, "Attack-set sampling and shuffling seed");
  sub->add_option("--overshoot", o.overshoot, "DeepFool overshoot")->check(CLI::Range(0.0, 0.999));
  sub->add_option("--max-iter", o.max_iter, "DeepFool iteration cap")->check(CLI::PositiveNumber);
  sub->add_option("--candidates", o.candidates, "DeepFool candidate classes (0 = all)");
  sub->add_flag("--no-shuffle", o.no_shuffle, "Visit X in fixed order every pass");
  sub->add_option("--heldout-out", o.heldout_out, "Also write the held-out images to this file");
  sub->add_option("--out", o.out, "Output perturbation file (.uapp)")->required();
}

int run_attack(const CLI::App& sub, const AttackOptions& o) {
  const auto start = Clock::now();
  if (!o.xi && !o.xi_rel) throw UsageError("one of --xi or --xi-rel is required");
  if (o.target_rate <= 0.0) throw UsageError("--target-rate must be in (0, 1]");
  if (o.candidates == 1) throw UsageError("--candidates must be 0 or at least 2");

  const Model model = load_model(o.model);
  const Dataset data = load_dataset(o.data);
  check_dims(model, data);

  const auto idx = sample_attack_indices(data, o.per_class, o.seed);
  const Dataset X = data.subset(idx);
  const auto rest = complement_indices(data.size(), idx);
  std::optional<Dataset> heldout;
  if (!rest.empty()) heldout = data.subset(rest);

  const double median = median_norm(X);
  AttackConfig cfg;
  cfg.p = parse_norm_order(o.p);
  cfg.xi = o.xi ? *o.xi : *o.xi_rel * median;
  cfg.target_fooling_rate = o.target_rate;
  cfg.max_passes = o.max_passes;
  cfg.deepfool.overshoot = o.overshoot;
  cfg.deepfool.max_iterations = o.max_iter;
  cfg.deepfool.num_candidate_classes = o.candidates;
  cfg.shuffle_each_pass = !o.no_shuffle;
  cfg.shuffle_seed = o.seed;

  std::optional<Tensor> v0;
  if (!o.warm_start.empty()) {
    Perturbation init = load_perturbation(o.warm_start);
    if (init.v.size() != data.dim()) {
      throw Error("warm-start perturbation has dimension " + std::to_string(init.v.size()) +
                  ", data has " + std::to_string(data.dim()));
    }
    v0 = std::move(init.v);
  }

  const auto result = compute_uap(X, model, cfg, v0);
  save_perturbation(result.perturbation, o.out);

  std::vector<fs::path> outputs{o.out};
  if (!o.heldout_out.empty()) {
    if (!heldout) throw Error("--heldout-out given but every image is in the attack set");
    save_dataset(*heldout, o.heldout_out);
    outputs.emplace_back(o.heldout_out);
  }

  const auto& v = result.perturbation.v;
  std::cout << "attack set: " << X.size() << " images, xi = " << fmt(cfg.xi, 6)
            << " (p = " << to_string(cfg.p) << ")\n"
            << "passes: " << result.perturbation.passes_used
            << ", updates: " << result.updates
            << ", deepfool failures: " << result.deepfool_failures << "\n";
  for (std::size_t i = 0; i < result.pass_rates.size(); ++i) {
    std::cout << "  pass " << i + 1 << ": fooling rate on X " << fmt(result.pass_rates[i]) << "\n";
  }
  std::cout << "fooling rate on X: " << fmt(result.perturbation.achieved_fooling_rate) << "\n";
  if (heldout) {
    std::cout << "fooling rate on held-out (" << heldout->size()
              << " images): " << fmt(fooling_rate(*heldout, v.data(), model).rate) << "\n";
  } else {
    std::cout << "fooling rate on held-out: n/a (no held-out images)\n";
  }
  std::cout << "||v||_2 / median ||x||_2: " << fmt(lp_norm(v, NormOrder::L2) / median) << "\n";
  if (result.stalled) {
    std::cout << "status: stalled (no DeepFool step succeeded during the last pass)\n";
  } else if (result.perturbation.achieved_fooling_rate >= cfg.target_fooling_rate) {
    std::cout << "status: target reached\n";
  } else {
    std::cout << "status: max passes reached\n";
  }
  finish(sub, outputs, start);
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalOptions {
  std::string model;
  std::string data;
  std::vector<std::string> perturbations;
  std::size_t random = 0;
  std::string norms;
  std::string p;
  bool clamp = false;
  std::uint64_t seed = 0;
  std::string out;
};

void add_eval(CLI::App& app, EvalOptions& o) {
  auto* sub = app.add_subcommand("eval", "Fooling-rate sweeps of perturbations and random baselines");
  sub->add_option("--model", o.model, "Model file (.uapm)")->required();
  sub->add_option("--data", o.data, "Evaluation dataset (.uapd)")->required();
  sub->add_option("--perturbation", o.perturbations, "Perturbation file (.uapp), repeatable")
      ->allow_extra_args(false);
  sub->add_option("--random", o.random, "Number of random baseline directions");
  sub->add_option("--norms", o.norms, "Comma-separated increasing norms")->required();
  sub->add_option("--p", o.p, "Norm order (defaults to the first perturbation's)")
      ->check(CLI::IsMember({"2", "inf"}));
  sub->add_flag("--clamp", o.clamp, "Clip perturbed images to the data's value range");
  sub->add_option("--seed", o.seed, "Random baseline seed");
  sub->add_option("--out", o.out, "Output CSV")->required();
}

int run_eval(const CLI::App& sub, const EvalOptions& o) {
  const auto start = Clock::now();
  const auto norms = parse_list<double>(o.norms, "norms");
  if (norms.empty()) throw UsageError("--norms: at least one norm is required");
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (!(norms[i] > 0.0) || (i > 0 && !(norms[i] > norms[i - 1]))) {
      throw UsageError("--norms must be positive and strictly increasing");
    }
  }
  if (o.perturbations.empty() && o.random == 0) {
    throw UsageError("nothing to evaluate: give --perturbation and/or --random");
  }

  const Model model = load_model(o.model);
  const Dataset data = load_dataset(o.data);
  check_dims(model, data);

  std::vector<Perturbation> perts;
  for (const auto& path : o.perturbations) {
    perts.push_back(load_perturbation(path));
    if (perts.back().v.size() != data.dim()) {
      throw Error("perturbation '" + path + "' has dimension " +
                  std::to_string(perts.back().v.size()) + ", data has " +
                  std::to_string(data.dim()));
    }
  }
  NormOrder p = NormOrder::L2;
  if (!o.p.empty()) {
    p = parse_norm_order(o.p);
  } else if (!perts.empty()) {
    p = perts.front().p;
  }

  std::vector<SweepCurve> curves;
  std::set<std::string> used;
  for (std::size_t i = 0; i < perts.size(); ++i) {
    std::string id = fs::path(o.perturbations[i]).stem().string();
    if (id.empty() || used.count(id)) id += "_" + std::to_string(i);
    used.insert(id);
    if (lp_norm(perts[i].v, p) == 0.0) throw Error("perturbation '" + o.perturbations[i] + "' is zero");
    curves.push_back(norm_sweep(data, perts[i].v, model, norms, p, o.clamp, id));
  }
  Rng rng(o.seed);
  std::vector<SweepCurve> randoms;
  for (std::size_t k = 0; k < o.random; ++k) {
    const Tensor r = random_perturbation(data.dim(), p, 1.0, rng);
    randoms.push_back(norm_sweep(data, r, model, norms, p, o.clamp, "random_" + std::to_string(k)));
  }
  if (!randoms.empty()) {
    curves.insert(curves.end(), randoms.begin(), randoms.end());
    curves.push_back(mean_curve(randoms, "random_mean"));
  }
  write_curve_csv(curves, o.out);
  std::cout << "wrote " << curves.size() << " curves x " << norms.size() << " norms to " << o.out
            << "\n";
  finish(sub, {o.out}, start);
  return kExitOk;
}

// ------------------------------------------------------------------- graph

struct GraphOptions {
  std::string model;
  std::string data;
  std::string perturbation;
  bool clamp = false;
  std::size_t top = 5;
  std::string out_dot;
  std::string out_csv;
};

void add_graph(CLI::App& app, GraphOptions& o) {
  auto* sub = app.add_subcommand("graph", "Label-transition graph and dominant labels");
  sub->add_option("--model", o.model, "Model file (.uapm)")->required();
  sub->add_option("--data", o.data, "Dataset (.uapd)")->required();
  sub->add_option("--perturbation", o.perturbation, "Perturbation file (.uapp)")->required();
  sub->add_flag("--clamp", o.clamp, "Clip perturbed images to the data's value range");
  sub->add_option("--top", o.top, "Number of dominant labels to print")->check(CLI::PositiveNumber);
  sub->add_option("--out-dot", o.out_dot, "Graphviz DOT output")->required();
  sub->add_option("--out-csv", o.out_csv, "Edge list CSV output")->required();
}

int run_graph(const CLI::App& sub, const GraphOptions& o) {
  const auto start = Clock::now();
  const Model model = load_model(o.model);
  const Dataset data = load_dataset(o.data);
  check_dims(model, data);
  const Perturbation pert = load_perturbation(o.perturbation);
  if (pert.v.size() != data.dim()) {
    throw Error("perturbation has dimension " + std::to_string(pert.v.size()) +
                ", data has " + std::to_string(data.dim()));
  }
  const auto report = fooling_rate(data, pert.v.data(), model, o.clamp);
  std::vector<std::string> names = data.class_names();
  for (std::size_t k = names.size(); k < model.num_classes(); ++k) {
    names.push_back("class_" + std::to_string(k));
  }
  const LabelGraph g = label_graph_from_report(report, names);
  export_dot(g, o.out_dot);
  export_edges_csv(g, o.out_csv);

  std::cout << "fooled " << report.fooled << " of " << report.total << " (rate "
            << fmt(report.rate) << ")\n"
            << "conservation: edge weight " << g.total_weight() << " == fooled "
            << report.fooled << "\n"
            << "dominant labels:\n";
  for (const auto& [label, indeg] : dominant_labels(g, o.top)) {
    std::cout << "  " << label << " (" << names[label] << "): indegree " << indeg << "\n";
  }
  finish(sub, {o.out_dot, o.out_csv}, start);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Universal adversarial perturbations against small MLP classifiers", "uap"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(UAP_VERSION));
  app.require_subcommand(1);

  GenDataOptions gen;
  TrainOptions tr;
  AttackOptions atk;
  EvalOptions ev;
  GraphOptions gr;
  std::string manifest;
  add_gen_data(app, gen);
  add_train(app, tr);
  add_attack(app, atk);
  add_eval(app, ev);
  add_graph(app, gr);
  auto* replay = app.add_subcommand("replay", "Re-run the invocation recorded in a manifest");
  replay->add_option("manifest", manifest, "Manifest file written next to an output")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (replay->parsed()) return run(Manifest::read(manifest).replay_args());
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "gen-data") return run_gen_data(*sub, gen);
    if (name == "train") return run_train(*sub, tr);
    if (name == "attack") return run_attack(*sub, atk);
    if (name == "eval") return run_eval(*sub, ev);
    if (name == "graph") return run_graph(*sub, gr);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace uap::cli
