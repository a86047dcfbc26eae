// Runs the nine acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is 0 only when every criterion passes.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cli/commands.hpp"
#include "cli/pipeline_config.hpp"
#include "test_support.hpp"
#include "veritas/classifiers.hpp"
#include "veritas/cross_validation.hpp"
#include "veritas/error.hpp"
#include "veritas/fisher.hpp"
#include "veritas/gmm.hpp"
#include "veritas/metrics.hpp"
#include "veritas/mfcc.hpp"
#include "veritas/synthetic.hpp"

namespace fs = std::filesystem;
using namespace veritas;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string detail(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------- 1: Fisher

GaussianMixture random_mixture(Rng& rng, std::size_t k, std::size_t d) {
  std::vector<double> w(k), mu(k * d), var(k * d);
  double s = 0.0;
  for (auto& v : w) s += (v = rng.uniform(0.1, 1.0));
  for (auto& v : w) v /= s;
  for (auto& v : mu) v = 2.0 * rng.normal();
  for (auto& v : var) v = rng.uniform(0.2, 2.5);
  return GaussianMixture(d, w, mu, var);
}

// Mean and sigma gradients written out from their definitions.
std::vector<double> direct_fisher(const GaussianMixture& g, const DescriptorBag& bag) {
  const std::size_t k = g.components(), d = g.dim(), n = bag.size();
  std::vector<double> out(2 * k * d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const auto x = bag.row(t);
    std::vector<long double> dens(k);
    long double total = 0.0L;
    for (std::size_t c = 0; c < k; ++c) {
      long double p = g.weight(c);
      for (std::size_t j = 0; j < d; ++j) {
        const long double v = g.variance(c)[j], z = x[j] - g.mean(c)[j];
        p *= std::exp(-0.5L * z * z / v) / std::sqrt(2.0L * 3.141592653589793238462643383279L * v);
      }
      dens[c] = p;
      total += p;
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double gamma = static_cast<double>(dens[c] / total);
      for (std::size_t j = 0; j < d; ++j) {
        const double u = (x[j] - g.mean(c)[j]) / std::sqrt(g.variance(c)[j]);
        out[c * d + j] += gamma * u / (n * std::sqrt(g.weight(c)));
        out[(k + c) * d + j] += gamma * (u * u - 1.0) / (n * std::sqrt(2.0 * g.weight(c)));
      }
    }
  }
  return out;
}

Outcome fisher_oracle() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.index(3), d = 1 + rng.index(4), t = 1 + rng.index(20);
    const auto g = random_mixture(rng, k, d);
    const auto bag = testing::random_bag(rng, t, d, 2.0);
    const auto fv = encode_fisher(g, bag);
    const auto ref = direct_fisher(g, bag);
    if (fv.values.size() != ref.size()) return {false, "length mismatch"};
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::fabs(fv.values[i] - ref[i]));
  }
  return {worst <= 1e-10, detail("200 instances, max abs error %.2e", worst)};
}

// ---------------------------------------------------------------- 2: EM

Outcome em_monotone() {
  double worst_drop = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const std::size_t k = std::array<std::size_t, 4>{1, 2, 4, 8}[seed % 4];
    const std::size_t d = 1 + rng.index(4);
    const auto bag = testing::random_bag(rng, 200 + rng.index(200), d);
    EmConfig cfg;
    cfg.seed = seed;
    cfg.tolerance = 1e-12;
    cfg.max_iterations = 60;
    const auto r = fit_gmm_traced(bag, k, cfg);
    for (std::size_t i = 1; i < r.log_likelihood_trace.size(); ++i) {
      worst_drop = std::max(worst_drop, r.log_likelihood_trace[i - 1] - r.log_likelihood_trace[i]);
    }
  }
  double worst_w = 0.0, worst_mu = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    std::vector<double> v;
    for (int i = 0; i < 500; ++i) v.push_back(-10.0 + rng.normal());
    for (int i = 0; i < 500; ++i) v.push_back(10.0 + rng.normal());
    EmConfig cfg;
    cfg.seed = seed;
    const auto g = fit_gmm(DescriptorBag(1, std::move(v)), 2, cfg);
    const std::size_t lo = g.mean(0)[0] < g.mean(1)[0] ? 0 : 1;
    worst_w = std::max({worst_w, std::fabs(g.weight(0) - 0.5), std::fabs(g.weight(1) - 0.5)});
    worst_mu = std::max({worst_mu, std::fabs(g.mean(lo)[0] + 10.0), std::fabs(g.mean(1 - lo)[0] - 10.0)});
  }
  const bool ok = worst_drop <= 1e-8 && worst_w <= 0.05 && worst_mu <= 0.5;
  return {ok, detail("50 runs, worst drop %.1e; two clusters: weight err %.3f, mean err %.3f", worst_drop, worst_w,
                  worst_mu)};
}

// ---------------------------------------------------------------- 3: AUC-PR

// Exact rational average precision by threshold enumeration: for each
// distinct score t, from high to low, add (new recall) * (precision at >= t).
double threshold_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  const std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  const long positives = std::count(y.begin(), y.end(), 1);
  // Sum of tp_new * tp / predicted over thresholds, divided by positives.
  // Denominators are at most 12, so the lcm-based fraction is exact.
  long long num = 0, den = 1;
  long prev_tp = 0;
  for (double t : thresholds) {
    long tp = 0, predicted = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        ++predicted;
        tp += y[i];
      }
    }
    const long long a = static_cast<long long>(tp - prev_tp) * tp, b = predicted;
    const long long l = std::lcm(den, b);
    num = num * (l / den) + a * (l / b);
    den = l;
    prev_tp = tp;
  }
  return static_cast<double>(num) / static_cast<double>(den * positives);
}

Outcome auc_oracle() {
  Rng rng(77);
  int checked = 0, tied = 0;
  double worst = 0.0;
  while (checked < 10000) {
    const std::size_t n = 2 + rng.index(11);
    std::vector<double> s(n);
    std::vector<int> y(n);
    const std::size_t levels = 1 + rng.index(6);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform() < 0.5 ? static_cast<double>(rng.index(levels)) : rng.normal();
      y[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    if (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0) continue;
    ++checked;
    tied += std::set<double>(s.begin(), s.end()).size() < n;
    worst = std::max(worst, std::fabs(auc_pr(s, y) - threshold_oracle(s, y)));
  }
  // The oracle is exact; the library result may differ only by rounding.
  return {worst <= 4 * std::numeric_limits<double>::epsilon(),
          detail("10000 draws (%.0f with ties), max deviation from exact %.1e", tied, worst)};
}

// ---------------------------------------------------------------- 4: MFCC

Outcome mfcc_analytics() {
  Rng rng(1);
  PcmSignal noise{16000, std::vector<double>(16000)};
  for (auto& v : noise.samples) v = 0.2 * rng.normal();
  const std::size_t frames = extract_mfcc(noise).size();

  const auto silent = extract_mfcc(PcmSignal{16000, std::vector<double>(4000, 0.0)});
  double silence_err = 0.0;
  const double c0 = std::sqrt(26.0) * std::log(1e-10);
  for (std::size_t t = 0; t < silent.size(); ++t) {
    silence_err = std::max(silence_err, std::fabs(silent.row(t)[0] - c0));
    for (std::size_t c = 1; c < 13; ++c) silence_err = std::max(silence_err, std::fabs(silent.row(t)[c]));
  }

  MfccConfig full;
  full.coefficient_count = full.filter_count;
  full.pre_emphasis = 0.0;
  const auto fb = mel_filterbank(full, 16000);
  int tone_hits = 0, tone_total = 0;
  for (std::size_t target = 2; target < 24; target += 3) {
    PcmSignal tone{16000, std::vector<double>(16000)};
    for (std::size_t i = 0; i < tone.samples.size(); ++i) {
      tone.samples[i] = 0.5 * std::sin(2.0 * 3.141592653589793 * fb.centers_hz[target] * i / 16000.0);
    }
    const auto bag = extract_mfcc(tone, full);
    std::vector<double> energy(26, 0.0);
    for (std::size_t t = 0; t < bag.size(); ++t) {
      const auto e = dct3_orthonormal(bag.row(t));
      for (std::size_t i = 0; i < 26; ++i) energy[i] += e[i];
    }
    ++tone_total;
    tone_hits += static_cast<std::size_t>(std::max_element(energy.begin(), energy.end()) - energy.begin()) == target;
  }

  auto loud = noise;
  for (auto& v : loud.samples) v *= 2.0;
  const auto a = extract_mfcc(noise), b = extract_mfcc(loud);
  double scale_err = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    scale_err = std::max(scale_err, std::fabs(b.row(t)[0] - a.row(t)[0] - std::sqrt(26.0) * std::log(4.0)));
    for (std::size_t c = 1; c < 13; ++c) scale_err = std::max(scale_err, std::fabs(b.row(t)[c] - a.row(t)[c]));
  }
  const bool ok = frames == 98 && silence_err <= 1e-9 && tone_hits == tone_total && scale_err <= 1e-6;
  std::ostringstream d;
  d << frames << " frames; silence err " << detail("%.1e", silence_err) << "; tone argmax " << tone_hits << "/"
    << tone_total << "; x2 scaling err " << detail("%.1e", scale_err);
  return {ok, d.str()};
}

// ---------------------------------------------------------------- 5: leakage

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VERITAS_CLI_PATH) + " --log-level off " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string pipeline_toml(const SyntheticDataset& ds, std::size_t motion_k, std::size_t other_k, int folds,
                          std::uint64_t seed, const std::string& classifiers) {
  std::ostringstream out;
  out << "manifest = \"manifest.jsonl\"\noutput_dir = \"out\"\n"
      << "[motion]\ncolumns = [" << ds.extraction.motion_columns.first << ", " << ds.extraction.motion_columns.last
      << "]\nframe_column = 0\ncomponents = " << motion_k << "\n"
      << "[audio]\ncomponents = " << other_k << "\n"
      << "[transcript]\nembeddings = \"embeddings.txt\"\ncomponents = " << other_k << "\n"
      << "[evaluation]\nfolds = " << folds << "\nseed = " << seed << "\n";
  if (!classifiers.empty()) out << "classifiers = [" << classifiers << "]\n";
  return out.str();
}

Outcome leakage_guard() {
  testing::TempDir dir;
  SyntheticConfig sc;
  sc.identities = 40;
  sc.seed = 5;
  sc.motion_dim = 9;
  const auto ds = write_synthetic_dataset(sc, dir.path());
  testing::write_text(dir / "veritas.toml", pipeline_toml(ds, 2, 2, 10, 0, "\"linear-svm\", \"random-forest\""));
  auto config = cli::load_pipeline_config(dir / "veritas.toml");
  cli::cmd_extract(config);

  std::size_t entries = 0;
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  for (auto seed : seeds) {
    config.experiment.seed = seed;
    const auto report = cli::cmd_run(config).report;
    // Test videos per fold, rebuilt from the plan rather than taken from the audit.
    std::map<int, std::set<std::string>> test_videos;
    for (int f = 0; f < static_cast<int>(report.plan.folds.size()); ++f) {
      for (auto i : report.plan.test_indices(ds.manifest, f)) test_videos[f].insert(ds.manifest[i].video_id);
    }
    std::map<int, std::set<std::string>> kinds;
    for (const auto& e : report.audit.entries()) {
      ++entries;
      for (const auto& v : e.contributors) {
        if (test_videos.at(e.fold).count(v)) return {false, "seed " + std::to_string(seed) + ": " + e.object};
      }
      kinds[e.fold].insert(e.object.substr(0, e.object.find(':')));
    }
    if (kinds.size() != 10) return {false, "audit does not cover all 10 folds"};
    for (const auto& [fold, k] : kinds) {
      for (const char* need : {"gmm", "detectors", "classifier", "fusion"}) {
        if (!k.count(need)) return {false, "fold " + std::to_string(fold) + " has no " + need + " record"};
      }
    }
  }

  auto plan = grouped_kfold(ds.manifest, 10, 0);
  plan.folds[4].train_identities.push_back(plan.folds[4].test_identities.front());
  std::sort(plan.folds[4].train_identities.begin(), plan.folds[4].train_identities.end());
  save_fold_plan(dir / "corrupted-plan.json", plan);
  const int code = run_cli("run -c " + (dir / "veritas.toml").string() + " --fold-plan " +
                           (dir / "corrupted-plan.json").string());
  std::ostringstream d;
  d << "40 identities, seeds 0-2, " << entries << " audited fits clean; corrupted plan exit code " << code;
  return {code == 3, d.str()};
}

// ---------------------------------------------------------------- 6: classifiers

struct Labeled {
  Matrix x;
  std::vector<int> y;
};

Labeled blobs(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Labeled d{Matrix(n, 2), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    d.y[i] = static_cast<int>(i % 2);
    const double c = d.y[i] ? 3.0 : -3.0;
    d.x(i, 0) = c + rng.normal();
    d.x(i, 1) = 0.5 * c + rng.normal();
  }
  return d;
}

Labeled xor_set(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Labeled d{Matrix(n, 2), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
    d.x(i, 0) = a;
    d.x(i, 1) = b;
    d.y[i] = (a > 0) != (b > 0) ? 1 : 0;
  }
  return d;
}

double held_out(ClassifierKind kind, const Labeled& tr, const Labeled& te) {
  return auc_pr(train({kind, {}}, tr.x, tr.y).predict_scores(te.x), te.y);
}

Outcome classifier_sanity() {
  const auto tr = blobs(1, 200), te = blobs(2, 200);
  double worst = 2.0;
  std::string worst_kind;
  for (auto k : kAllClassifierKinds) {
    const double ap = held_out(k, tr, te);
    if (ap < worst) {
      worst = ap;
      worst_kind = to_string(k);
    }
  }
  const auto xtr = xor_set(10, 300), xte = xor_set(11, 300);
  const double linear = held_out(ClassifierKind::kLinearSvm, xtr, xte);
  const double kernel = held_out(ClassifierKind::kKernelSvm, xtr, xte);
  const auto forest = train({ClassifierKind::kRandomForest, {}}, xtr.x, xtr.y);
  bool quantized = true;
  for (double s : forest.predict_scores(xte.x)) quantized &= std::fabs(s * 50.0 - std::round(s * 50.0)) < 1e-9;
  const bool ok = worst >= 0.95 && linear <= 0.6 && kernel >= 0.9 && quantized;
  return {ok, detail("separable min %.3f (", worst) + worst_kind + detail("); XOR linear %.3f, poly kernel %.3f", linear, kernel) +
                  "; forest scores on 1/50 grid: " + (quantized ? "yes" : "no")};
}

// ---------------------------------------------------------------- 7-9: pipeline

struct PipelineRun {
  ExperimentReport report;
  std::string json;
  double seconds = 0.0;
  testing::TempDir dir;
  fs::path config_path;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Sixty identities with independent per-modality cues; the full classifier
// pool through extract and run.
std::unique_ptr<PipelineRun> fusion_pipeline() {
  auto run = std::make_unique<PipelineRun>();
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticConfig sc;
  sc.identities = 60;
  sc.min_videos_per_identity = 2;
  sc.seed = 1;
  const auto ds = write_synthetic_dataset(sc, run->dir.path());
  run->config_path = run->dir / "veritas.toml";
  testing::write_text(run->config_path, pipeline_toml(ds, 8, 4, 10, 7, ""));
  const auto config = cli::load_pipeline_config(run->config_path);
  cli::cmd_extract(config);
  const auto result = cli::cmd_run(config);
  run->report = result.report;
  run->json = testing::read_text(result.json_path);
  run->seconds = seconds_since(t0);
  return run;
}

Outcome fusion_benefit(const PipelineRun& run) {
  const auto k = ClassifierKind::kLinearSvm;
  const double m = *run.report.value("Motion", k), e = *run.report.value("Expression", k);
  const double t = *run.report.value("Transcript", k), a = *run.report.value("Audio", k);
  const double all = *run.report.value("All", k);
  const double best = std::max({m, e, t, a}), mean = (m + e + t + a) / 4.0;
  const bool ok = all >= best - 0.01 && all >= mean + 0.03 && run.seconds < 300.0;
  return {ok, detail("linear SVM: All %.3f vs best single %.3f, mean single %.3f", all, best, mean) +
                  detail("; %.0f s end to end", run.seconds)};
}

Outcome two_level(const PipelineRun& run) {
  const auto k = ClassifierKind::kLinearSvm;
  const double m = *run.report.value("Motion", k), me = *run.report.value("Motion+Expression", k);
  return {me >= m + 0.02, detail("linear SVM: Motion+Expression %.3f vs Motion %.3f (%+.3f)", me, m, me - m)};
}

Outcome determinism(const PipelineRun& first) {
  const auto config = cli::load_pipeline_config(first.config_path);
  const auto again = testing::read_text(cli::cmd_run(config).json_path);
  const bool same = again == first.json;
  return {same, std::to_string(first.json.size()) + " byte report, second run " + (same ? "identical" : "differs")};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  std::unique_ptr<PipelineRun> pipeline;
  auto needs_pipeline = [&]() -> const PipelineRun& {
    if (!pipeline) pipeline = fusion_pipeline();
    return *pipeline;
  };
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"fisher oracle", fisher_oracle},
      {"em monotonicity", em_monotone},
      {"auc-pr oracle", auc_oracle},
      {"mfcc analytics", mfcc_analytics},
      {"leakage guard", leakage_guard},
      {"classifier sanity", classifier_sanity},
      {"fusion benefit", [&] { return fusion_benefit(needs_pipeline()); }},
      {"two-level expressions", [&] { return two_level(needs_pipeline()); }},
      {"determinism", [&] { return determinism(needs_pipeline()); }},
  };
  const std::map<int, double> budget = {{1, 10.0}, {2, 60.0}, {3, 30.0}, {4, 10.0}};

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = seconds_since(t0);
    if (auto it = budget.find(n); it != budget.end() && s >= it->second) {
      o.pass = false;
      o.detail += detail("; over the %.0f s budget", it->second);
    }
    failures += !o.pass;
    std::printf("%s  %d %-22s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", n, criteria[i].first.c_str(), o.detail.c_str(),
                s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
