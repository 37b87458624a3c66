// Acceptance harness: one PASS/FAIL line per criterion. Exit status is
// non-zero when any selected criterion fails.

#include <CLI11.hpp>
#include <json.hpp>
#include <torch/torch.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "attnad/adgan/adgan.hpp"
#include "attnad/attention/losses.hpp"
#include "attnad/attention/networks.hpp"
#include "attnad/common/errors.hpp"
#include "attnad/common/rng.hpp"
#include "attnad/common/tensor_util.hpp"
#include "attnad/metrics/metrics.hpp"
#include "attnad/pipeline/run.hpp"
#include "attnad/pipeline/run_config.hpp"
#include "attnad/synth/anomaly_synth.hpp"

namespace fs = std::filesystem;
using namespace attnad;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double brute_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

// --- 1 -----------------------------------------------------------------------

Outcome metric_oracles() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int f = 0; f < 200; ++f) {
    const int n = 2 + static_cast<int>(rng() % 199);
    const double grid = f % 2 ? 10.0 : 1e6;  // odd fixtures are tie-heavy
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = std::round(u(rng) * grid) / grid;
      y[i] = u(rng) < 0.4 ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    worst = std::max(worst, std::abs(metrics::auroc(s, y) - brute_auroc(s, y)));

    // Pixel fixture: a few maps pooled, compared with the flattened oracle.
    const int side = 2 + static_cast<int>(rng() % 7), images = 1 + static_cast<int>(rng() % 4);
    std::vector<metrics::ScoreRecord> recs;
    std::vector<double> flat_s;
    std::vector<int> flat_y;
    for (int k = 0; k < images; ++k) {
      metrics::ScoreRecord r;
      r.height = r.width = side;
      for (int p = 0; p < side * side; ++p) {
        const auto v = static_cast<float>(std::round(u(rng) * grid) / grid);
        const std::uint8_t l = u(rng) < 0.3 ? 1 : 0;
        r.pixel_scores.push_back(v);
        r.pixel_labels.push_back(l);
        flat_s.push_back(v);
        flat_y.push_back(l);
      }
      recs.push_back(std::move(r));
    }
    recs[0].pixel_labels[0] = 0;
    recs[0].pixel_labels[1] = 1;
    flat_y[0] = 0;
    flat_y[1] = 1;
    worst = std::max(worst, std::abs(metrics::pixel_auroc(recs) - brute_auroc(flat_s, flat_y)));
  }
  o.require(worst <= 1e-9, "max deviation " + fmt("%.3g", worst));

  std::vector<double> tied(40, 0.25);
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) labels[i] = i % 3 == 0;
  o.require(metrics::auroc(tied, labels) == 0.5, "tied scores not exactly 0.5");
  metrics::ScoreRecord flat;
  flat.height = flat.width = 4;
  flat.pixel_scores.assign(16, 0.6f);
  flat.pixel_labels.assign(16, 0);
  flat.pixel_labels[3] = 1;
  o.require(metrics::pixel_auroc({flat}) == 0.5, "tied pixel scores not exactly 0.5");

  const double secs = seconds_since(t0);
  o.require(secs < 10.0, "runtime " + fmt("%.1f s", secs));
  if (o.pass) o.detail = "200 fixtures, max deviation " + fmt("%.2g", worst) + ", " + fmt("%.2f s", secs);
  return o;
}

// --- 2 -----------------------------------------------------------------------

double max_relative_fd_error(torch::nn::Module& module, const std::function<torch::Tensor()>& loss_fn,
                             std::uint64_t seed, int per_param) {
  for (auto& p : module.parameters()) p.mutable_grad() = torch::Tensor();
  loss_fn().backward();
  Rng rng(seed);
  const double h = 1e-6;
  double worst = 0.0;
  for (auto& p : module.parameters()) {
    if (!p.grad().defined()) return INFINITY;
    auto flat = p.data().view(-1);
    auto grad = p.grad().view(-1);
    for (int k = 0; k < per_param; ++k) {
      const auto idx = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(flat.numel())));
      const double orig = flat[idx].item<double>();
      double plus, minus;
      {
        torch::NoGradGuard g;
        flat[idx] = orig + h;
        plus = loss_fn().item<double>();
        flat[idx] = orig - h;
        minus = loss_fn().item<double>();
        flat[idx] = orig;
      }
      const double numeric = (plus - minus) / (2 * h), analytic = grad[idx].item<double>();
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      worst = std::max(worst, scale < 1e-7 ? std::abs(numeric - analytic) : std::abs(numeric - analytic) / scale);
    }
  }
  return worst;
}

Outcome loss_suite() {
  using namespace attention;
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto x = torch::rand({4, 3, 8, 8}, make_generator(1));
  auto zeros = torch::zeros({4, 16});
  o.require(kl_divergence(zeros, zeros).item<double>() == 0.0, "KL at prior match");
  o.require(reconstruction_nll(x, x).item<double>() == 0.0, "reconstruction at identity");
  auto a = (torch::rand({4, 1, 8, 8}, make_generator(2)) > 0.5).to(torch::kFloat32);
  auto ones = torch::ones_like(a);
  o.require(loss_attention(ones, a, ones, a).item<double>() == 0.0, "attention loss at exact match");
  // Midpoints in double so "exact" means working precision.
  auto half = torch::full({5}, 0.5, torch::kFloat64);
  o.require(std::abs(loss_adv(half, half).item<double>() - 2.0 * std::log(2.0)) < 1e-12, "midpoint 2 ln 2");
  o.require(loss_adv(torch::ones({5}), torch::zeros({5})).item<double>() == 0.0, "perfect discrimination");
  auto zero_logits = torch::zeros({5}, torch::kFloat64);
  o.require(std::abs(discriminator_loss_from_logits(zero_logits, zero_logits).item<double>() - 2.0 * std::log(2.0)) <
                1e-12,
            "logit midpoint 2 ln 2");

  // Finite differences on a tiny network in double precision.
  AttentionNetConfig cfg;
  cfg.image_size = 8;
  cfg.latent_dim = 4;
  cfg.encoder.base_width = 4;
  cfg.encoder.blocks = {1, 1, 1};
  cfg.decoder_width = 4;
  cfg.disc_base_width = 4;
  AttentionGenerator gen(cfg);
  Discriminator disc(cfg.channels + 1, cfg.image_size, cfg.disc_base_width);
  seeded_init(*gen, 1);
  seeded_init(*disc, 2);
  gen->to(torch::kFloat64);
  disc->to(torch::kFloat64);
  auto xd = torch::rand({3, 3, 8, 8}, make_generator(7)).to(torch::kFloat64);
  auto xa = torch::rand({3, 3, 8, 8}, make_generator(8)).to(torch::kFloat64);
  auto ma = (torch::rand({3, 1, 8, 8}, make_generator(9)) > 0.5).to(torch::kFloat64);
  auto eps = torch::randn({6, 4}, make_generator(10)).to(torch::kFloat64);
  for (auto& p : disc->parameters()) p.requires_grad_(false);
  auto g_loss = [&]() {
    auto out = gen(torch::cat({xd, xa}), eps);
    auto rn = out.recon.narrow(0, 0, 3), an = out.attn.narrow(0, 0, 3);
    auto ra = out.recon.narrow(0, 3, 3), aa = out.attn.narrow(0, 3, 3);
    return loss_attention(an, aa, torch::ones_like(an), ma) + reconstruction_nll(xd, rn) +
           kl_divergence(out.latent_mean, out.latent_logvar) +
           generator_adv_from_logits(discriminator_logits(disc, rn, an)) +
           generator_adv_from_logits(discriminator_logits(disc, ra, aa));
  };
  const double g_err = max_relative_fd_error(*gen, g_loss, 11, 3);
  for (auto& p : disc->parameters()) p.requires_grad_(true);
  auto d_loss = [&]() {
    auto r = torch::rand({3, 3, 8, 8}, make_generator(12)).to(torch::kFloat64);
    return discriminator_loss_from_logits(discriminator_logits(disc, xd, torch::ones_like(ma)),
                                          discriminator_logits(disc, r, ma)) +
           discriminator_loss_from_logits(discriminator_logits(disc, xa, ma * 0), discriminator_logits(disc, xa, ma));
  };
  const double d_err = max_relative_fd_error(*disc, d_loss, 13, 5);
  o.require(g_err <= 1e-4, "generator FD error " + fmt("%.3g", g_err));
  o.require(d_err <= 1e-4, "discriminator FD error " + fmt("%.3g", d_err));
  const double secs = seconds_since(t0);
  o.require(secs < 120.0, "runtime " + fmt("%.1f s", secs));
  if (o.pass) {
    o.detail = "exact loss examples hold; FD max rel error G " + fmt("%.2g", g_err) + ", D " + fmt("%.2g", d_err) +
               ", " + fmt("%.1f s", secs);
  }
  return o;
}

// --- 3 -----------------------------------------------------------------------

Outcome mask_algebra() {
  Outcome o;
  int failures = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const auto g = derive_seed(99, t);
    auto f = torch::randn({2, 4, 8, 8}, make_generator(g));
    bool ok = torch::equal(adgan::mask_features(f, torch::ones({2, 1, 8, 8})), f);
    ok = ok && torch::equal(adgan::mask_features(f, torch::zeros({2, 1, 8, 8})), torch::zeros_like(f));
    // Composition with binary masks in float32, and with 8-bit quantized
    // masks in float64, where no product is rounded.
    auto b1 = (torch::rand({2, 1, 8, 8}, make_generator(g + 1)) > 0.5).to(torch::kFloat32);
    auto b2 = (torch::rand({2, 1, 8, 8}, make_generator(g + 2)) > 0.5).to(torch::kFloat32);
    ok = ok && torch::equal(adgan::mask_features(f, b1 * b2), adgan::mask_features(adgan::mask_features(f, b1), b2));
    auto fd = f.to(torch::kFloat64);
    auto q1 = (torch::randint(0, 257, {2, 1, 8, 8}, make_generator(g + 3)) / 256.0).to(torch::kFloat64);
    auto q2 = (torch::randint(0, 257, {2, 1, 8, 8}, make_generator(g + 4)) / 256.0).to(torch::kFloat64);
    ok = ok && torch::equal(adgan::mask_features(fd, q1 * q2), adgan::mask_features(adgan::mask_features(fd, q1), q2));
    failures += ok ? 0 : 1;
  }
  o.require(failures == 0, std::to_string(failures) + " of 1000 trials not bit-exact");
  if (o.pass) o.detail = "1000 trials bit-exact (identity, annihilation, composition)";
  return o;
}

// --- 4 -----------------------------------------------------------------------

Outcome augmentation_soundness() {
  Outcome o;
  synth::AugmentationConfig cfg;
  cfg.seed = 4242;
  auto batch = torch::rand({1000, 3, 32, 32}, make_generator(77));
  auto a = synth::sample_anomaly_batch(batch, cfg);
  auto b = synth::sample_anomaly_batch(batch, cfg);
  o.require(torch::equal(a.images, b.images) && torch::equal(a.masks, b.masks), "batch not reproducible");
  int replay_fail = 0, area_fail = 0, prime_fail = 0, cuts = 0;
  for (std::int64_t i = 0; i < 1000; ++i) {
    const auto& r = a.recipes[static_cast<std::size_t>(i)];
    json j = r;
    auto s = synth::replay(batch[i], j.get<synth::Recipe>());
    if (!torch::equal(s.image, a.images[i]) || !torch::equal(s.mask, a.masks[i])) ++replay_fail;
    const auto zeros = (a.masks[i] == 0).sum().item<std::int64_t>();
    if (r.kind == synth::AnomalyKind::cut) {
      ++cuts;
      const auto& cut = std::get<synth::CutStep>(r.steps.back());
      if (zeros != cut.area()) ++area_fail;
    } else if (zeros != a.masks[i].numel()) {
      ++prime_fail;
    }
  }
  const double frac = cuts / 1000.0;
  o.require(replay_fail == 0, std::to_string(replay_fail) + " replays differ");
  o.require(area_fail == 0, std::to_string(area_fail) + " cut masks disagree with their rectangle");
  o.require(prime_fail == 0, std::to_string(prime_fail) + " prime masks not all-zero");
  o.require(frac >= 0.45 && frac <= 0.55, "cut fraction " + fmt("%.3f", frac));
  if (o.pass) o.detail = "1000 replays bit-exact, cut fraction " + fmt("%.3f", frac);
  return o;
}

// --- 5 to 8 ----------------------------------------------------------------

class Runs {
 public:
  Runs(fs::path configs, fs::path work) : configs_(std::move(configs)), work_(std::move(work)) {}

  pipeline::RunConfig base() const {
    auto cfg = pipeline::load_run_config(configs_ / "shapes_acceptance.json");
    cfg.output_dir = (work_ / "full").string();
    return cfg;
  }

  /// Report of a finished run, training only what is missing.
  const json& report(const std::string& name, const pipeline::RunConfig& cfg) {
    if (auto it = cache_.find(name); it != cache_.end()) return it->second;
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::RunOptions opts;
    opts.verbose = true;
    const fs::path dir(cfg.output_dir);
    if (fs::exists(dir / "run_manifest.json")) {
      const auto m = pipeline::read_run_manifest(dir / "run_manifest.json");
      opts.resume = pipeline::run_config_from_json(m.config) == cfg;
    }
    pipeline::run_two_stage(cfg, opts);
    std::cout << "  [" << name << " run: " << fmt("%.0f s", seconds_since(t0)) << "]\n" << std::flush;
    return cache_[name] = json::parse(slurp(dir / "report.json"));
  }

  const json& full() { return report("full", base()); }

  const json& ablation(const std::string& name, bool no_adv_ano, bool no_att) {
    auto cfg = base();
    cfg.output_dir = (work_ / name).string();
    cfg.ablation.disable_adv_ano = no_adv_ano;
    cfg.ablation.disable_att = no_att;
    // Pixel AUROC depends on stage 1 only.
    cfg.ablation.score = pipeline::ScoreSource::recon_loss;
    return report(name, cfg);
  }

  const fs::path& configs() const { return configs_; }
  const fs::path& work() const { return work_; }

 private:
  fs::path configs_, work_;
  std::map<std::string, json> cache_;
};

Outcome desk_scale(Runs& runs) {
  Outcome o;
  const auto& r = runs.full();
  const double det = r.at("auroc"), pix = r.at("pixel_auroc");
  o.require(det >= 0.90, "detection AUROC " + fmt("%.4f", det) + " < 0.90");
  o.require(pix >= 0.85, "pixel AUROC " + fmt("%.4f", pix) + " < 0.85");
  o.detail = (o.pass ? "" : o.detail + "; ") + "detection " + fmt("%.4f", det) + ", pixel " + fmt("%.4f", pix);
  return o;
}

Outcome ablation_order(Runs& runs) {
  Outcome o;
  const double full = runs.full().at("pixel_auroc");
  const double no_ano = runs.ablation("no_adv_ano", true, false).at("pixel_auroc");
  const double no_att = runs.ablation("no_att", false, true).at("pixel_auroc");
  o.require(full - no_ano >= 0.02, "full - no_adv_ano = " + fmt("%.4f", full - no_ano));
  o.require(full - no_att >= 0.02, "full - no_att = " + fmt("%.4f", full - no_att));
  o.detail = (o.pass ? "" : o.detail + "; ") + "pixel AUROC full " + fmt("%.4f", full) + ", no_adv_ano " +
             fmt("%.4f", no_ano) + ", no_att " + fmt("%.4f", no_att);
  return o;
}

Outcome adgan_vs_recon(Runs& runs) {
  Outcome o;
  const auto& by = runs.full().at("auroc_by_source");
  const double ad = by.at("adgan"), rec = by.at("recon_loss");
  o.require(ad - rec >= 0.02, "adgan - recon_loss = " + fmt("%.4f", ad - rec));
  o.detail = (o.pass ? "" : o.detail + "; ") + "adgan " + fmt("%.4f", ad) + ", recon_loss " + fmt("%.4f", rec);
  return o;
}

Outcome cli_determinism(const Runs& runs, const std::string& cli) {
  Outcome o;
  std::vector<std::string> reports;
  for (const char* tag : {"det_a", "det_b"}) {
    const auto out = runs.work() / tag;
    fs::remove_all(out);
    const auto cmd = "\"" + cli + "\" train --quiet --config \"" + (runs.configs() / "determinism.json").string() +
                     "\" --output \"" + out.string() + "\"";
    const int rc = std::system(cmd.c_str());
    o.require(rc == 0, std::string(tag) + " exited with " + std::to_string(rc));
    reports.push_back(slurp(out / "report.json"));
  }
  o.require(!reports[0].empty(), "no report written");
  o.require(reports[0] == reports[1], "report.json differs between invocations");
  if (o.pass) o.detail = "report.json byte-identical (" + std::to_string(reports[0].size()) + " bytes)";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attnad acceptance criteria"};
  std::vector<int> only;
  std::string work = "acceptance_runs";
  std::string cli = ATTNAD_CLI_PATH;
  std::string configs = std::string(ATTNAD_SOURCE_DIR) + "/configs";
  app.add_option("--only", only, "Criteria to run (default: all)");
  app.add_option("--work", work, "Directory for training runs");
  app.add_option("--cli", cli, "Path to the attnad executable");
  app.add_option("--configs", configs, "Directory holding the acceptance configs");
  CLI11_PARSE(app, argc, argv);

  torch::set_num_threads(1);
  fs::create_directories(work);
  Runs runs(configs, work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric oracle equivalence", metric_oracles},
      {"loss unit suite", loss_suite},
      {"mask algebra", mask_algebra},
      {"augmentation determinism and soundness", augmentation_soundness},
      {"desk-scale end-to-end on shapes", [&] { return desk_scale(runs); }},
      {"ablation ordering (pixel AUROC)", [&] { return ablation_order(runs); }},
      {"ADGAN score vs reconstruction score", [&] { return adgan_vs_recon(runs); }},
      {"CLI determinism", [&] { return cli_determinism(runs, cli); }},
  };

  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("error: ") + e.what();
    }
    failed += out.pass ? 0 : 1;
    std::cout << "criterion " << id << ": " << (out.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << "  ("
              << out.detail << ")\n"
              << std::flush;
  }
  return failed == 0 ? 0 : 1;
}
