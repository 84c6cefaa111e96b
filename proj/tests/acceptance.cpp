// Acceptance checks: one PASS/FAIL/SKIP line per criterion, then a tally.
// Tolerances and time limits are fixed here. The exit status says whether
// the run completed; the verdicts themselves are in the output.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "gtda/classifier.hpp"
#include "gtda/config.hpp"
#include "gtda/crd.hpp"
#include "gtda/data.hpp"
#include "gtda/experiment.hpp"
#include "gtda/metrics.hpp"
#include "gtda/rng.hpp"
#include "gtda/s2i.hpp"
#include "gtda/vbl.hpp"
#include "support/raster_oracle.hpp"

using namespace gtda;

namespace {

struct Outcome {
  enum Kind { Pass, Fail, Skip } kind = Fail;
  std::string detail;
};

Outcome fail(std::string d) { return {Outcome::Fail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(d)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

Outcome metric_reconstruction() {
  const auto m = metrics(ConfusionMatrix{19, 22, 28, 281});
  const bool row = round3(m.accuracy) == 0.857 && round3(m.precision) == 0.404 && round3(m.recall) == 0.463 &&
                   round3(m.f1) == 0.432;
  std::vector<Label> truth(350, Label::Negative), pred(350, Label::Negative);
  for (int i = 0; i < 41; ++i) truth[i] = Label::Positive;
  const auto all_neg = metrics(confusion(pred, truth));
  return verdict(row && round3(all_neg.accuracy) == 0.883,
                 fmt("(%.3f, %.3f, %.3f, %.3f); all-negative accuracy %.3f", m.accuracy, m.precision, m.recall,
                     m.f1, all_neg.accuracy));
}

Outcome welford() {
  Rng rng(2024);
  double worst = 0;
  for (int s = 0; s < 100; ++s) {
    auto state = VblState::with_gamma(0.5);
    std::vector<double> xs(1000);
    for (auto& x : xs) {
      x = rng.uniform();
      state.observe(Label::Positive, x);
    }
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / 1000.0;
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= 1000.0;
    worst = std::max(worst, std::abs(state.variance()[0] - var));
  }
  return verdict(worst <= 1e-9, fmt("max |dV| = %.3g over 100 streams of 1000", worst));
}

double network_fd_error() {
  ModelConfig cfg{16, {4}, 7};
  auto net = Network::init(cfg);
  Rng rng(12);
  for (auto& b : net.conv_bias(0)) b = rng.uniform(-0.1, 0.1);
  Tensor x(2, 1, 16, 16);
  for (auto& v : x.data) v = rng.uniform();
  std::vector<ClassPair> g{{rng.normal(), rng.normal()}, {rng.normal(), rng.normal()}};
  auto objective = [&] {
    auto z = net.forward(x);
    return g[0][0] * z[0][0] + g[0][1] * z[0][1] + g[1][0] * z[1][0] + g[1][1] * z[1][1];
  };
  ForwardCache cache;
  net.forward(x, &cache);
  const auto grad = net.backward(cache, g);
  double worst = 0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double keep = net.parameters()[i];
    net.mutable_parameters()[i] = keep + h;
    const double up = objective();
    net.mutable_parameters()[i] = keep - h;
    const double dn = objective();
    net.mutable_parameters()[i] = keep;
    const double fd = (up - dn) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-3}));
  }
  return worst;
}

Outcome gradients() {
  Rng rng(77);
  double worst = 0;
  const double h = 1e-5;
  for (int i = 0; i < 1000; ++i) {
    ClassPair z{rng.uniform(-4, 4), rng.uniform(-4, 4)};
    ClassPair w{rng.uniform(0.05, 5), rng.uniform(0.05, 5)};
    const Label y = rng.below(2) ? Label::Positive : Label::Negative;
    const auto g = vbl_grad(z, y, w);
    for (int c = 0; c < 2; ++c) {
      ClassPair up = z, dn = z;
      up[c] += h;
      dn[c] -= h;
      const double fd = (vbl_loss(up, y, w) - vbl_loss(dn, y, w)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[c]) / std::max(std::abs(g[c]), 1e-3));
    }
  }
  const double net = network_fd_error();
  return verdict(worst <= 1e-6 && net <= 1e-4, fmt("loss %.3g (<= 1e-6), network %.3g (<= 1e-4)", worst, net));
}

Outcome ce_equivalence() {
  Rng rng(5);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    ClassPair z{rng.uniform(-30, 30), rng.uniform(-30, 30)};
    const Label y = rng.below(2) ? Label::Positive : Label::Negative;
    const int t = y == Label::Positive ? 0 : 1;
    const double m = std::max(z[0], z[1]);
    const double ce = -(z[t] - m) + std::log(std::exp(z[0] - m) + std::exp(z[1] - m));
    worst = std::max(worst, std::abs(vbl_loss(z, y, {1, 1}) - ce));
  }
  return verdict(worst <= 1e-12, fmt("max |VBL - CE| = %.3g over 10^4 pairs", worst));
}

Outcome crd_algebra() {
  Rng rng(31);
  double worst_sum = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> r(2 + rng.below(9));
    for (auto& x : r) x = rng.uniform(0.01, 50.0);
    const auto w = crd_weights(r);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0));
  }

  // LITERAL after resampling: global majority / minority within rounding slack of m.
  bool literal_ok = true;
  double worst_ratio_gap = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    const double m = rng.uniform(0.5, 2.0);
    LabeledDataset ds;
    ClusterModel model;
    model.k = k;
    std::vector<ClusterCount> counts(k);
    for (std::size_t c = 0; c < k; ++c) {
      counts[c].n_minority = 1 + rng.below(5);
      counts[c].n_majority = 20 + rng.below(80);
      for (std::size_t i = 0; i < counts[c].n_majority + counts[c].n_minority; ++i) {
        Sample s;
        s.series = {"c" + std::to_string(c) + "_" + std::to_string(i), {0.0, 1.0}};
        s.label = i < counts[c].n_minority ? Label::Positive : Label::Negative;
        ds.samples.push_back(std::move(s));
        model.assignment.push_back(c);
      }
    }
    const auto plan = crd_targets(counts, m, CrdMode::Literal);
    const auto st = dataset_stats(ros_oversample(ds, model, plan, trial));
    const double after = static_cast<double>(st.n_minority);
    const double slack = 0.5 * static_cast<double>(k) / after * m;  // ratio error from per-cluster rounding
    const double gap = std::abs(static_cast<double>(st.n_majority) / after - m);
    worst_ratio_gap = std::max(worst_ratio_gap, gap / slack);
    literal_ok = literal_ok && gap <= slack;
  }

  const std::vector<ClusterCount> example{{60, 20}, {40, 5}};
  const auto w = crd_targets(example, 1.0, CrdMode::Weighted);
  const auto l = crd_targets(example, 1.0, CrdMode::Literal);
  const bool example_ok = w.clusters[0].target == 87 && w.clusters[1].target == 22 && l.clusters[0].target == 60 &&
                          l.clusters[1].target == 40;
  return verdict(worst_sum <= 1e-12 && literal_ok && example_ok,
                 fmt("weight-sum error %.3g; literal ratio gap %.2f of slack; example weighted (%zu, %zu) literal "
                     "(%zu, %zu)",
                     worst_sum, worst_ratio_gap, w.clusters[0].target, w.clusters[1].target, l.clusters[0].target,
                     l.clusters[1].target));
}

Outcome s2i_oracle() {
  Rng rng(404);
  S2IParams big;
  big.width = big.height = 64;
  std::vector<double> series(512);
  for (auto& v : series) v = rng.normal();
  const bool identical = encode_pgm(rasterize(series, big)) == encode_pgm(rasterize(series, big));

  double worst = 1.0;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(2 + rng.below(30));
    for (auto& x : v) x = rng.uniform(-3, 3);
    S2IParams p;
    p.width = p.height = 32;
    p.margin = 2;
    p.scale = 0.5 + 0.5 * static_cast<double>(rng.below(5));
    p.curve = rng.below(2) ? CurveType::Line : CurveType::Point;
    const auto got = rasterize(v, p);
    const auto want = oracle::rasterize(v, p);
    std::size_t ok = 0;
    for (std::size_t j = 0; j < got.pixels.size(); ++j) ok += std::abs(int(got.pixels[j]) - int(want.pixels[j])) <= 1;
    worst = std::min(worst, static_cast<double>(ok) / static_cast<double>(got.pixels.size()));
  }
  return verdict(identical && worst >= 0.99,
                 fmt("repeat PGM %s; worst pixel agreement %.4f (>= 0.99)", identical ? "identical" : "DIFFERS",
                     worst));
}

// Learning rate for the scaled ablation. With SGD on the small CNN the
// default 0.0002 leaves even the resampled runs far from fitting their
// training set in 50 epochs.
constexpr double kAblationLearningRate = 0.01;
constexpr double kAblationBudgetSeconds = 15 * 60;

Outcome ablation() {
  RunConfig c;
  c.data.synth_train = {360, 40, 256, 3.0, 0.1, 7};
  c.data.synth_test = {180, 20, 256, 3.0, 0.1, 8};
  c.s2i.width = c.s2i.height = 64;
  c.model = ModelConfig{};
  c.train.learning_rate = kAblationLearningRate;
  c.experiment.seeds = {1, 2, 3, 4, 5};
  const auto train = synth_generate(c.data.synth_train, Split::Train);
  const auto test = synth_generate(c.data.synth_test, Split::Test);

  const auto t0 = std::chrono::steady_clock::now();
  const auto report = run_ablation(c, train, test, [](const RunRow& r) {
    std::printf("  %-9s seed %llu  %s\n", r.cell.c_str(), static_cast<unsigned long long>(r.seed),
                r.failed ? ("FAILED: " + r.error).c_str()
                         : fmt("acc %.3f precision %.3f recall %.3f f1 %.3f", r.metrics.accuracy, r.metrics.precision,
                               r.metrics.recall, r.metrics.f1)
                               .c_str());
    std::fflush(stdout);
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::printf("%s", summary_table(report).c_str());
  auto cell = [&](const std::string& name) -> const CellSummary& {
    for (const auto& s : report.summary) {
      if (s.cell == name) return s;
    }
    throw std::runtime_error("missing cell " + name);
  };
  const auto &base = cell("baseline"), &crd = cell("crd"), &vbl = cell("vbl"), &both = cell("crd+vbl");
  for (const auto* s : {&base, &crd, &vbl, &both}) {
    if (s->failures) return fail(s->cell + " had failed runs");
  }
  const bool precision = crd.mean.precision > base.mean.precision;
  const bool recall = vbl.mean.recall > base.mean.recall;
  const double best_single = std::max({crd.mean.f1, vbl.mean.f1, base.mean.f1});
  const bool f1 = both.mean.f1 > best_single - 0.01;
  const bool fast = seconds <= kAblationBudgetSeconds;
  return verdict(precision && recall && f1 && fast,
                 fmt("precision crd %.3f vs baseline %.3f [%s]; recall vbl %.3f vs baseline %.3f [%s]; "
                     "f1 crd+vbl %.3f vs best single %.3f - 0.01 [%s]; %.0f s [%s]",
                     crd.mean.precision, base.mean.precision, precision ? "ok" : "violated", vbl.mean.recall,
                     base.mean.recall, recall ? "ok" : "violated", both.mean.f1, best_single, f1 ? "ok" : "violated",
                     seconds, fast ? "ok" : "over budget"));
}

Outcome ucr_earthquakes() {
  const char* dir = std::getenv("GTDA_UCR_DIR");
  if (!dir) return {Outcome::Skip, "GTDA_UCR_DIR not set"};
  namespace fs = std::filesystem;
  fs::path base = fs::path(dir) / "Earthquakes";
  if (!fs::exists(base)) base = dir;
  auto find = [&](const char* suffix) {
    for (const char* ext : {".tsv", ".txt"}) {
      auto p = base / (std::string("Earthquakes_") + suffix + ext);
      if (fs::exists(p)) return p;
    }
    return fs::path{};
  };
  const auto train_path = find("TRAIN"), test_path = find("TEST");
  if (train_path.empty() || test_path.empty()) return {Outcome::Skip, "Earthquakes files not found under " + base.string()};
  const auto train = load_ucr_tsv(train_path, {});
  const auto test = load_ucr_tsv(test_path, {.positive_label = std::stol(train.positive_label)});
  const auto st = dataset_stats(train), se = dataset_stats(test);
  const bool ok = train.size() == 322 && test.size() == 139 && st.length_min == 512 && st.length_max == 512 &&
                  se.length_min == 512 && se.length_max == 512 && st.n_minority > 0 && st.n_majority > 0;
  return verdict(ok, fmt("train %zu, test %zu, length %zu-%zu, classes %zu/%zu", train.size(), test.size(),
                         st.length_min, st.length_max, st.n_majority, st.n_minority));
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double seconds;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"metric-reconstruction", 1, metric_reconstruction},
      {"welford-equivalence", 5, welford},
      {"gradient-correctness", 60, gradients},
      {"ce-equivalence", 5, ce_equivalence},
      {"crd-algebra", 5, crd_algebra},
      {"s2i-determinism-oracle", 60, s2i_oracle},
      {"scaled-ablation", kAblationBudgetSeconds, ablation},
      {"ucr-earthquakes", 60, ucr_earthquakes},
  };

  int passed = 0, failed = 0, skipped = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.kind != Outcome::Skip && s > c.seconds) {
      o.kind = Outcome::Fail;
      o.detail += fmt("; took %.1f s, limit %.0f s", s, c.seconds);
    }
    const char* tag = o.kind == Outcome::Pass ? "PASS" : o.kind == Outcome::Skip ? "SKIP" : "FAIL";
    passed += o.kind == Outcome::Pass;
    failed += o.kind == Outcome::Fail;
    skipped += o.kind == Outcome::Skip;
    std::printf("%s %s: %s (%.2f s)\n", tag, c.name, o.detail.c_str(), s);
    std::fflush(stdout);
  }
  std::printf("acceptance: %d passed, %d failed, %d skipped\n", passed, failed, skipped);
  return 0;
}
