// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "uap/uap.hpp"

using namespace uap;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;
// Lines are collected and printed in criterion order at the end; supplementary
// checks sort right after the criterion they belong to.
std::vector<std::pair<double, std::string>> lines;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, "[%s] %2d %-28s %s (%.2f s)", ok ? "PASS" : "FAIL", id,
                name.c_str(), detail.c_str(), seconds);
  lines.emplace_back(id, buf);
  if (!ok) ++failures;
}

void supplementary(int after, const std::string& name, bool ok, const std::string& detail) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, "[%s]    %-28s %s", ok ? "PASS" : "FAIL", name.c_str(),
                detail.c_str());
  lines.emplace_back(after + 0.5, buf);
  if (!ok) ++failures;
}

double since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ------------------------------------------------------------------ 1

void projection() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::size_t budget_bad = 0, idem_bad = 0, optimal_bad = 0, optimal_checked = 0;
  const std::size_t dims[] = {2, 32, 1024};
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = dims[i % 3];
    const double xi = rng.uniform(0.01, 50.0);
    const Tensor v = scale(gaussian_tensor({d}, rng), static_cast<float>(rng.uniform(0.0, 3.0) * xi));
    for (auto p : {NormOrder::L2, NormOrder::Linf}) {
      const Tensor once = project_lp_ball(v, p, xi);
      if (lp_norm(once, p) > xi * (1.0 + 1e-6)) ++budget_bad;
      const Tensor twice = project_lp_ball(once, p, xi);
      for (std::size_t j = 0; j < d; ++j) {
        if (std::abs(twice[j] - once[j]) > 1e-6 * std::max(1.0f, std::abs(once[j]))) {
          ++idem_bad;
          break;
        }
      }
    }
  }
  // Optimality in low dimension against uniform samples of the ball.
  for (std::size_t d = 2; d <= 3; ++d) {
    for (int i = 0; i < 100; ++i) {
      const double xi = rng.uniform(0.5, 5.0);
      const Tensor v = scale(gaussian_tensor({d}, rng), static_cast<float>(1.5 * xi));
      const Tensor pv = project_lp_ball(v, NormOrder::L2, xi);
      double best = 0.0;
      for (std::size_t j = 0; j < d; ++j) best += std::pow(double(pv[j]) - v[j], 2);
      best = std::sqrt(best);
      ++optimal_checked;
      for (int k = 0; k < 10000; ++k) {
        std::vector<double> u(d);
        double n = 0.0;
        for (auto& c : u) {
          c = rng.normal();
          n += c * c;
        }
        const double radius = xi * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) dist += std::pow(u[j] / std::sqrt(n) * radius - v[j], 2);
        if (std::sqrt(dist) + 1e-6 < best) {
          ++optimal_bad;
          break;
        }
      }
    }
  }
  const double s = since(t0);
  report(1, "projection exactness", budget_bad == 0 && idem_bad == 0 && optimal_bad == 0 && s < 10,
         fmt("budget violations %zu, idempotence violations %zu, beaten %zu/%zu", budget_bad,
             idem_bad, optimal_bad, optimal_checked),
         s);
}

// ------------------------------------------------------------------ 2

void deepfool_affine() {
  const auto t0 = Clock::now();
  Rng rng(202);
  std::size_t one_iter = 0, matched = 0, successes = 0, flipped = 0;
  double worst = 0.0;
  const int trials = 100;
  const DeepFoolConfig cfg;
  for (int t = 0; t < trials; ++t) {
    const std::size_t c = 2 + rng.index(9);
    const std::size_t d = 2 + rng.index(63);
    std::vector<float> w(c * d), b(c), x(d);
    for (auto& v : w) v = static_cast<float>(rng.normal());
    for (auto& v : b) v = static_cast<float>(rng.normal());
    for (auto& v : x) v = static_cast<float>(rng.normal());
    const Model m = oracle::affine_model(w, b, d);
    const auto res = deepfool(x, m, cfg);
    const double exact = oracle::affine_boundary_distance(m, x);
    const double got = lp_norm(res.r, NormOrder::L2) / (1.0 + cfg.overshoot);
    const double rel = std::abs(got - exact) / exact;
    worst = std::max(worst, rel);
    one_iter += res.iterations == 1;
    matched += rel <= 1e-3;
    if (res.success) {
      ++successes;
      const Tensor moved = add(Tensor({d}, x), res.r);
      flipped += predict(m, moved.data()) != predict(m, x);
    }
  }
  const double s = since(t0);
  const bool ok = one_iter == trials && matched == trials && successes == trials &&
                  flipped == successes && s < 30;
  report(2, "deepfool affine oracle", ok,
         fmt("1-iteration %zu/%d, within 1e-3 %zu/%d (worst %.2e), flips %zu/%zu", one_iter,
             trials, matched, trials, worst, flipped, successes),
         s);
}

// ------------------------------------------------------------------ 3

void gradients() {
  const auto t0 = Clock::now();
  Rng rng(303);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 2 + rng.index(40);
    const std::size_t c = 2 + rng.index(9);
    const Model m = oracle::random_model(rng, d, {4 + rng.index(30), 4 + rng.index(30)}, c, true);
    const Tensor x = gaussian_tensor({d}, rng);
    for (std::size_t k = 0; k < c; ++k) {
      const Tensor g = input_gradient(m, x.data(), k);
      const auto fd = oracle::finite_difference_gradient(m, x.data(), k, 1e-5);
      double num = 0.0, den = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        num += std::pow(g[j] - fd[j], 2);
        den += fd[j] * fd[j];
      }
      const double rel = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
      worst = std::max(worst, rel);
      ++checked;
    }
  }
  const double s = since(t0);
  report(3, "gradient correctness", worst <= 1e-2 && s < 30,
         fmt("worst relative L2 error %.2e over %zu gradients", worst, checked), s);
}

// ------------------------------------------------------------------ 4-9

constexpr std::uint64_t kSeeds[] = {0, 1, 2, 3, 4};
constexpr int kRandomDraws = 10;

struct Run {
  Dataset data, X, held;
  Model model, model_b;
  double xi = 0.0;
  UapResult uap;
  double uap_rate = 0.0, random_rate = 0.0;
};

std::size_t updates_seen = 0, feasibility_violations = 0;
std::size_t graph_runs = 0, graph_mismatches = 0;

UpdateObserver feasibility_observer(double xi) {
  return [xi](const UpdateEvent& e) {
    ++updates_seen;
    if (!(e.norm <= xi * (1.0 + 1e-6))) ++feasibility_violations;
  };
}

UapResult attack(const Dataset& X, const Model& m, const AttackConfig& cfg,
                 std::optional<Tensor> v0 = std::nullopt) {
  auto res = compute_uap(X, m, cfg, std::move(v0), feasibility_observer(cfg.xi));
  // Conservation on the attack set for every run.
  const auto g = build_label_graph(X, res.perturbation.v.data(), m);
  ++graph_runs;
  if (g.total_weight() != fooling_rate(X, res.perturbation.v.data(), m).fooled) ++graph_mismatches;
  return res;
}

double random_rate(const Dataset& data, const Model& m, double xi, std::uint64_t seed) {
  Rng rng(seed);
  double total = 0.0;
  for (int k = 0; k < kRandomDraws; ++k) {
    const auto r = random_perturbation(data.dim(), NormOrder::L2, xi, rng);
    total += fooling_rate(data, r.data(), m).rate;
  }
  return total / kRandomDraws;
}

std::vector<Run> desk_runs(double& seconds) {
  const auto t0 = Clock::now();
  std::vector<Run> runs;
  for (auto seed : kSeeds) {
    auto data = generate_blobs({10, 100, 32, 3.0, 1.0, seed});
    TrainConfig tc;
    tc.seed = seed;
    auto model = train(data, tc).model;
    tc.seed = seed + 1000;
    auto model_b = train(data, tc).model;
    const auto idx = sample_attack_indices(data, 50, seed);
    auto X = data.subset(idx);
    const auto rest = complement_indices(data.size(), idx);
    auto held = data.subset(rest);
    AttackConfig cfg;
    cfg.xi = 0.5 * median_norm(X);
    cfg.shuffle_seed = seed;
    auto res = attack(X, model, cfg);
    Run r{std::move(data), std::move(X), std::move(held), std::move(model), std::move(model_b),
          cfg.xi, std::move(res)};
    r.uap_rate = fooling_rate(r.held, r.uap.perturbation.v.data(), r.model).rate;
    r.random_rate = random_rate(r.held, r.model, r.xi, seed + 77);
    runs.push_back(std::move(r));
  }
  seconds = since(t0);
  return runs;
}

void dominance(const std::vector<Run>& runs, double seconds) {
  std::vector<double> u, r;
  std::string per;
  for (const auto& run : runs) {
    u.push_back(run.uap_rate);
    r.push_back(run.random_rate);
    per += fmt(" %.2f/%.2f", run.uap_rate, run.random_rate);
  }
  const double gap = mean(u) - mean(r);
  report(4, "UAP dominance over random", gap >= 0.20 && seconds < 300,
         fmt("held-out UAP %.4f vs random %.4f, gap %.4f (per seed%s)", mean(u), mean(r), gap,
             per.c_str()),
         seconds);
}

void sweeps(const std::vector<Run>& runs) {
  const auto t0 = Clock::now();
  const std::vector<double> factors{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0};
  std::vector<SweepCurve> uap_curves, random_curves;
  for (const auto& run : runs) {
    std::vector<double> norms;
    for (double f : factors) norms.push_back(f * run.xi);
    // Rates are compared across seeds on the shared factor grid.
    auto on_grid = [&](SweepCurve c) {
      c.norms = factors;
      return c;
    };
    uap_curves.push_back(on_grid(norm_sweep(run.held, run.uap.perturbation.v, run.model, norms,
                                            NormOrder::L2, false, "uap")));
    Rng rng(run.data.size() + 991);
    std::vector<SweepCurve> draws;
    for (int k = 0; k < kRandomDraws; ++k) {
      const auto v = random_perturbation(run.data.dim(), NormOrder::L2, 1.0, rng);
      draws.push_back(on_grid(norm_sweep(run.held, v, run.model, norms, NormOrder::L2, false, "r")));
    }
    random_curves.push_back(mean_curve(draws, "random"));
  }
  const auto uap_mean = mean_curve(uap_curves, "uap");
  const auto random_mean = mean_curve(random_curves, "random");
  double worst_drop = 0.0;
  for (const auto* c : {&uap_mean, &random_mean}) {
    for (std::size_t k = 1; k < c->rates.size(); ++k) {
      worst_drop = std::max(worst_drop, c->rates[k - 1] - c->rates[k]);
    }
  }
  std::string curve;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    curve += fmt(" %.2f/%.2f", uap_mean.rates[k], random_mean.rates[k]);
  }
  const double s = since(t0);
  report(6, "sweep monotonicity", worst_drop <= 0.02,
         fmt("largest drop %.4f; uap/random at 0.25..4 xi:%s", worst_drop, curve.c_str()), s);

  bool dominates = true;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (factors[k] >= 1.0 && uap_mean.rates[k] < random_mean.rates[k]) dominates = false;
  }
  supplementary(6, "sweep dominance", dominates, "UAP mean >= random mean at every norm >= xi");
}

void dominant(const std::vector<Run>& runs) {
  std::vector<double> ratios;
  for (const auto& run : runs) {
    for (const Dataset* d : {&run.X, &run.held}) {
      const auto g = build_label_graph(*d, run.uap.perturbation.v.data(), run.model);
      const auto rep = fooling_rate(*d, run.uap.perturbation.v.data(), run.model);
      ++graph_runs;
      if (g.total_weight() != rep.fooled) ++graph_mismatches;
      if (d == &run.held) {
        const auto top = dominant_labels(g, 1);
        const double mean_in = static_cast<double>(g.total_weight()) / g.num_labels();
        ratios.push_back(top.empty() ? 0.0 : top[0].second / mean_in);
      }
    }
  }
  std::string per;
  for (double r : ratios) per += fmt(" %.2f", r);
  supplementary(7, "dominant label", mean(ratios) >= 2.0,
                fmt("top-1 indegree / mean indegree %.2f (per seed%s)", mean(ratios), per.c_str()));
}

void warm_start(const std::vector<Run>& runs) {
  const auto t0 = Clock::now();
  std::vector<double> warm, cold, start;
  for (const auto& run : runs) {
    AttackConfig cfg;
    cfg.xi = run.xi;
    cfg.shuffle_seed = 500 + run.X.size();
    // Pre-computed vector from the held-out half, disjoint from X.
    const auto pre = attack(run.held, run.model, cfg);
    start.push_back(fooling_rate(run.X, pre.perturbation.v.data(), run.model).rate);
    AttackConfig one = cfg;
    one.max_passes = 1;
    cold.push_back(attack(run.X, run.model, one).pass_rates.at(0));
    warm.push_back(attack(run.X, run.model, one, pre.perturbation.v).pass_rates.at(0));
  }
  std::string per;
  for (std::size_t i = 0; i < warm.size(); ++i) per += fmt(" %.2f/%.2f", warm[i], cold[i]);
  const double s = since(t0);
  report(8, "warm start", median(warm) >= median(cold),
         fmt("median first-pass rate warm %.4f vs cold %.4f, v0 alone %.4f (per seed warm/cold%s)",
             median(warm), median(cold), median(start), per.c_str()),
         s);
}

void transfer(const std::vector<Run>& runs) {
  const auto t0 = Clock::now();
  std::vector<double> u, r;
  for (const auto& run : runs) {
    u.push_back(fooling_rate(run.held, run.uap.perturbation.v.data(), run.model_b).rate);
    r.push_back(random_rate(run.held, run.model_b, run.xi, run.data.size() + 4242));
  }
  const double gap = mean(u) - mean(r);
  const double s = since(t0);
  report(9, "cross-model transfer", gap >= 0.10,
         fmt("UAP(A) on B %.4f vs random on B %.4f, gap %.4f", mean(u), mean(r), gap), s);
}

void conservation() {
  report(7, "graph conservation", graph_mismatches == 0,
         fmt("%zu mismatches over %zu graphs from all attack runs", graph_mismatches, graph_runs),
         0.0);
}

void feasibility() {
  report(5, "ball feasibility", feasibility_violations == 0 && updates_seen > 0,
         fmt("%zu violations over %zu updates", feasibility_violations, updates_seen), 0.0);
}

// ------------------------------------------------------------------ 10

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun cli(const std::string& args) {
  const std::string cmd = std::string("\"") + UAP_CLI_PATH + "\" " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  const auto t0 = Clock::now();
  const fs::path dir = fs::current_path() / "acceptance_work";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto P = [&](const std::string& n) { return (dir / n).string(); };
  const std::vector<std::string> steps{
      "gen-data --classes 10 --per-class 100 --dim 32 --seed 7 --out " + P("d.uapd"),
      "train --data " + P("d.uapd") + " --seed 7 --out " + P("m.uapm"),
      "attack --model " + P("m.uapm") + " --data " + P("d.uapd") +
          " --per-class 50 --xi-rel 0.5 --seed 7 --heldout-out " + P("held.uapd") + " --out " +
          P("v.uapp"),
      "eval --model " + P("m.uapm") + " --data " + P("held.uapd") + " --perturbation " +
          P("v.uapp") + " --random 3 --norms 2,4,6,8,10,12,14,16 --out " + P("curve.csv"),
      "graph --model " + P("m.uapm") + " --data " + P("held.uapd") + " --perturbation " +
          P("v.uapp") + " --out-dot " + P("g.dot") + " --out-csv " + P("g.csv"),
  };
  bool ok = true;
  std::string detail;
  for (const auto& s : steps) {
    const auto r = cli(s);
    if (r.code != 0) {
      ok = false;
      detail = "step failed: " + s + "\n" + r.output;
    }
  }
  std::size_t compared = 0;
  const std::vector<std::string> outputs{"d.uapd", "m.uapm", "v.uapp",   "held.uapd",
                                         "curve.csv", "g.dot", "g.csv"};
  if (ok) {
    for (const auto& name : outputs) {
      const auto before = slurp(P(name));
      fs::remove(P(name));
      const auto r = cli("replay " + P(name + ".manifest"));
      if (r.code != 0 || slurp(P(name)) != before || before.empty()) {
        ok = false;
        detail += name + " differs after replay; ";
      }
      ++compared;
    }
  }
  if (ok) detail = fmt("%zu outputs reproduced byte-identically from their manifests", compared);
  report(10, "determinism", ok, detail, since(t0));
}

}  // namespace

int main() {
  projection();
  deepfool_affine();
  gradients();
  double desk_seconds = 0.0;
  const auto runs = desk_runs(desk_seconds);
  dominance(runs, desk_seconds);
  sweeps(runs);
  dominant(runs);
  warm_start(runs);
  transfer(runs);
  feasibility();
  conservation();
  determinism();
  std::sort(lines.begin(), lines.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [key, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
