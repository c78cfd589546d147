// Acceptance suite: one self-contained check per criterion, selected with
// --criterion N (1..11). Each prints a single PASS/FAIL line; the exit code
// is the number of failing criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "drf/gradcheck.hpp"
#include "drf/montecarlo.hpp"
#include "drf/runio.hpp"
#include "drf/trainer.hpp"
#include "oracles.hpp"

#ifndef DRF_CLI_PATH
#define DRF_CLI_PATH ""
#endif

namespace {

using namespace drf;
using drf::testing::gaussian_conditioning_oracle;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---------------------------------------------------------------- shared

DrfModel train_toy(const CodeConfig& code, const ChannelSpec& channel,
                   const std::vector<double>& schedule_entries,
                   std::size_t epochs_per_entry, std::size_t zeta,
                   std::size_t batch, Snr feedback, std::uint64_t seed,
                   AttentionMode attention = AttentionMode::Learned) {
  DrfModel model = DrfModel::init(code, channel, seed);
  TrainPlan plan;
  plan.snr_schedule_db =
      TrainPlan::expand_schedule(schedule_entries, epochs_per_entry);
  plan.feedback = feedback;
  plan.batch_initial = batch;
  plan.batch_max = 4 * batch;
  plan.zeta = zeta;
  plan.micro_batch = std::min<std::size_t>(batch, 256);
  plan.seed = seed;
  plan.attention = attention;
  Trainer trainer(model, plan);
  trainer.train();
  calibrate_statistics(model, model.channel, 4000, 250, seed + 0x5EED);
  return model;
}

// ------------------------------------------------------------ criterion 1

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_cfg;
  // Fading covers the full feature set (alpha inputs, power weights,
  // bi-LSTMs, batch norm, attention); AWGN covers the 4-wide encoder.
  for (const char* mode : {"awgn", "fast_rayleigh"}) {
    CodeConfig code;
    code.K = 4;
    code.fading = fading_mode_from_name(mode);
    ChannelSpec spec;
    spec.fading = code.fading;
    spec.forward_snr_db = 0.0;
    spec.feedback = Snr::from_db(10.0);
    DrfModel model = DrfModel::init(code, spec, 1);
    Dataset ds(spec, code.K, 3, 2, 0);
    SampleBatch batch = batch_from_dataset(ds, 0, 3);
    RunFlags flags;
    flags.training = true;
    auto params = model.parameters();
    for (Parameter* p : params) p->zero_grad();
    {
      Tape tape;
      Binder binder(tape);
      PipelineResult res = run_pipeline(tape, binder, model, batch, flags);
      tape.backward(bce_loss(tape, res.probs, batch.bits));
      binder.accumulate_grads();
    }
    auto forward = [&] {
      Tape tape;
      Binder binder(tape);
      PipelineResult res = run_pipeline(tape, binder, model, batch, flags);
      return tape.value(bce_loss(tape, res.probs, batch.bits)).item();
    };
    const GradCheckResult res = gradient_check(params, forward);
    if (res.max_rel_err > worst) {
      worst = res.max_rel_err;
      worst_cfg = std::string(mode) + ":" + res.worst_param;
    }
  }
  const double secs = seconds_since(t0);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "max rel err %.3e (at %s), %.1f s (budget 300 s)", worst,
                worst_cfg.c_str(), secs);
  return {worst < 1e-4 && secs < 300.0, buf};
}

// ------------------------------------------------------------ criterion 2

Outcome criterion2() {
  ChannelSpec spec;
  spec.forward_snr_db = 0.0;
  spec.feedback = Snr::from_db(15.0);
  CodeConfig code;
  code.K = 10;
  DrfModel model = DrfModel::init(code, spec, 33);
  calibrate_statistics(model, spec, 10'000, 500, 7);

  RunFlags flags;  // eval mode: frozen running statistics
  double acc = 0.0;
  std::uint64_t count = 0;
  const std::size_t B = 500, batches = 20;  // 10^4 messages
  for (std::size_t b = 0; b < batches; ++b) {
    Dataset ds(spec, code.K, B, 9001 + b, 1);
    SampleBatch batch = batch_from_dataset(ds, 0, B);
    Tape tape;
    Binder binder(tape);
    PipelineResult res = run_pipeline(tape, binder, model, batch, flags);
    for (const Var& x : res.x_time) {
      const Tensor& t = tape.value(x);
      for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] * t[i];
      count += t.size();
    }
  }
  const double power = acc / static_cast<double>(count);
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "(1/L) mean ||x||^2 = %.4f over 1e4 messages (want 1 +- 2%%)",
                power);
  return {std::abs(power - 1.0) < 0.02, buf};
}

// ------------------------------------------------------------ criterion 3

Outcome criterion3() {
  ChannelSpec spec;
  spec.forward_snr_db = 0.0;
  spec.feedback = Snr::from_db(10.0);
  CodeConfig code;
  code.K = 8;
  DrfModel model = DrfModel::init(code, spec, 21);
  calibrate_statistics(model, spec, 2000, 250, 23);

  Dataset ds(spec, code.K, 1, 4242, 0);
  SampleBatch base_batch = batch_from_dataset(ds, 0, 1);
  auto emissions = [&](const SampleBatch& b) {
    Tape tape;
    Binder binder(tape);
    RunFlags flags;  // honest transducer: eval statistics
    PipelineResult res = run_pipeline(tape, binder, model, b, flags);
    std::vector<double> out;
    for (const Var& x : res.x_time) out.push_back(tape.value(x)[0]);
    return out;
  };
  const std::vector<double> base = emissions(base_batch);
  const std::size_t L = code.L();
  std::size_t violations = 0;
  for (std::size_t j = 0; j < L; ++j) {
    for (double bump : {1.9, -2.7}) {
      SampleBatch perturbed = base_batch;
      perturbed.feedback_noise.at(0, j) += bump;
      const std::vector<double> mod = emissions(perturbed);
      for (std::size_t i = 0; i < j; ++i) {
        if (mod[i] != base[i]) ++violations;
      }
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "K=8: %zu violations over %zu feedback perturbations",
                violations, 2 * L);
  return {violations == 0, buf};
}

// ------------------------------------------------------------ criterion 4

Outcome criterion4() {
  Rng rng(404);
  const FadingPrior prior = FadingPrior::rayleigh(1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + (rng.next_u64() % 4);
    const double sn2 = 0.05 + rng.uniform();
    const double sm2 = 0.5 * rng.uniform();
    const double alpha = rng.rayleigh(std::sqrt(0.5));
    std::vector<double> x(n), z(n);
    for (std::size_t j = 0; j < n; ++j) {
      x[j] = rng.uniform_range(-2.0, 2.0);
      z[j] = alpha * x[j] + std::sqrt(sn2 + sm2) * rng.normal();
    }
    const double got = lmmse_slow(z, x, prior, sn2, sm2);
    const double want = gaussian_conditioning_oracle(z, x, prior, sn2 + sm2);
    worst = std::max(worst, std::abs(got - want));
    const double got_fast = lmmse_fast(z[0], x[0], prior, sn2, sm2);
    const double want_fast =
        gaussian_conditioning_oracle({z[0]}, {x[0]}, prior, sn2 + sm2);
    worst = std::max(worst, std::abs(got_fast - want_fast));
  }
  // Noiseless single observation returns alpha exactly.
  const double alpha = 1.3371;
  const std::vector<double> zv = {alpha * 0.8};
  const std::vector<double> xv = {0.8};
  const double exact = lmmse_slow(zv, xv, prior, 0.0, 0.0);
  const double exact_err = std::abs(exact - alpha);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max |est - oracle| = %.2e over 100 instances (want < 1e-10); "
                "noiseless case err %.2e",
                worst, exact_err);
  return {worst < 1e-10 && exact_err < 1e-12, buf};
}

// ------------------------------------------------------------ criterion 5

Outcome criterion5() {
  const double inf = std::numeric_limits<double>::infinity();
  bool ok = true;
  std::string detail;

  // Hand-simulated stall trace with the B_max cap and the L_0 boundary.
  std::vector<double> losses = {inf, 1.0, 1.0, 1.0, 1.0, 1.0};
  std::size_t batch = 1000;
  std::vector<std::size_t> trace;
  for (std::size_t u = 1; u < losses.size(); ++u) {
    trace.push_back(batch);
    batch = update_batch_size(losses[u], losses[u - 1], batch, 2.0, 2.0, 4000,
                              BatchRule::Stall);
  }
  const std::vector<std::size_t> want = {1000, 1000, 2000, 4000, 4000};
  if (trace != want) {
    ok = false;
    detail += "stall trace mismatch; ";
  }

  // Algorithm-1 literal rule boundary cases.
  if (update_batch_size(1.0, 1.0, 1000, 2.0, 2.0, 16000, BatchRule::Alg1) !=
      1000) {
    ok = false;
    detail += "alg1 equal-loss case; ";
  }
  if (update_batch_size(2.5, 1.0, 1000, 2.0, 2.0, 16000, BatchRule::Alg1) !=
      2000) {
    ok = false;
    detail += "alg1 growth case; ";
  }
  if (update_batch_size(9.9, inf, 1000, 2.0, 2.0, 16000, BatchRule::Alg1) !=
      1000) {
    ok = false;
    detail += "L0 = inf boundary; ";
  }

  // Schedule -1,-1,0,1,2 x 3 epochs -> U = 15.
  const auto sched = TrainPlan::expand_schedule({-1, -1, 0, 1, 2}, 3);
  if (sched.size() != 15 || sched[5] != -1.0 || sched[6] != 0.0 ||
      sched[14] != 2.0) {
    ok = false;
    detail += "schedule expansion; ";
  }
  if (detail.empty()) {
    detail = "stall trace 1000,1000,2000,4000,4000; alg1 boundaries; U=15";
  }
  return {ok, detail};
}

// ------------------------------------------------------------ criterion 6

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  CodeConfig code;
  code.K = 10;  // L = 33, H = 10
  ChannelSpec spec;
  spec.forward_snr_db = 0.0;
  spec.feedback = Snr::noiseless();
  // 10 epochs x 200 steps = 2000 Adam steps at batch 256.
  DrfModel model = train_toy(code, spec, {0.0}, 10, 200, 256,
                             Snr::noiseless(), 5);
  EvalOptions opts;
  opts.sample_cap = 50'000;
  opts.seed = 777;
  const ErrorEstimate est = estimate_error(model, spec, opts);
  const double secs = seconds_since(t0);
  const double uncoded = qfunc(1.0);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "held-out BER %.3e after 2000 steps (want < 0.05; uncoded "
                "Q(1)=%.4f, ratio %.0fx), %.0f s (budget 1800 s)",
                est.ber, uncoded, est.ber > 0 ? uncoded / est.ber : 1e9, secs);
  return {est.ber < 0.05 && est.ber < uncoded / 3.0 && secs < 1800.0, buf};
}

// ------------------------------------------------------------ criterion 7

Outcome criterion7() {
  CodeConfig code;
  code.K = 10;
  ChannelSpec spec;
  spec.forward_snr_db = 2.0;
  spec.feedback = Snr::noiseless();
  const std::vector<double> schedule = {-1, -1, 0, 1, 2};

  DrfModel with_att = train_toy(code, spec, schedule, 2, 200, 256,
                                Snr::noiseless(), 42, AttentionMode::Learned);
  DrfModel without_att = train_toy(code, spec, schedule, 2, 200, 256,
                                   Snr::noiseless(), 42,
                                   AttentionMode::AllOnes);

  // The channel moves +-2 dB around the schedule centre; the attention
  // decoder keeps believing the centre (mismatch |delta rho| = 2), the
  // ablated decoder has its centre tuning baked into its weights.
  const double centre = 0.0;
  auto bler_at = [&](DrfModel& m, double rho, bool ablated) {
    ChannelSpec pt = spec;
    pt.forward_snr_db = rho;
    EvalOptions opts;
    opts.sample_cap = 100'000;
    opts.min_events = 100;
    opts.seed = 99;
    opts.flags.attention =
        ablated ? AttentionMode::AllOnes : AttentionMode::Learned;
    if (!ablated) {
      opts.flags.attention_input = {snr_db_to_variance(centre), 0.0};
    }
    return estimate_error(m, pt, opts).bler;
  };
  const double a_lo = bler_at(with_att, centre - 2.0, false);
  const double a_mid = bler_at(with_att, centre, false);
  const double a_hi = bler_at(with_att, centre + 2.0, false);
  const double b_lo = bler_at(without_att, centre - 2.0, true);
  const double b_mid = bler_at(without_att, centre, true);
  const double b_hi = bler_at(without_att, centre + 2.0, true);

  const double deg_a_lo = a_lo / a_mid, deg_a_hi = a_hi / a_mid;
  const double deg_b_lo = b_lo / b_mid, deg_b_hi = b_hi / b_mid;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "degradation at -2/+2 dB: attention %.2f/%.3f vs ablated "
                "%.2f/%.3f (BLER centre %.2e vs %.2e)",
                deg_a_lo, deg_a_hi, deg_b_lo, deg_b_hi, a_mid, b_mid);
  return {deg_a_lo < deg_b_lo && deg_a_hi < deg_b_hi, buf};
}

// ------------------------------------------------------------ criterion 8

Outcome criterion8() {
  ChannelSpec spec;
  spec.fading = FadingMode::FastRayleigh;
  spec.forward_snr_db = 2.0;
  spec.feedback = Snr::noiseless();
  spec.rayleigh_omega = 1.0;

  CodeConfig code;
  code.K = 8;
  code.fading = FadingMode::FastRayleigh;
  code.csi = CsiMode::Exact;

  code.rcsi = false;
  DrfModel plain = train_toy(code, spec, {2.0}, 8, 150, 256,
                             Snr::noiseless(), 31);
  code.rcsi = true;
  DrfModel rcsi = train_toy(code, spec, {2.0}, 8, 150, 256,
                            Snr::noiseless(), 31);

  EvalOptions opts;
  opts.sample_cap = 100'000;
  opts.seed = 404;
  const double ber_plain = estimate_error(plain, spec, opts).ber;
  const double ber_rcsi = estimate_error(rcsi, spec, opts).ber;
  const double ratio = ber_rcsi / ber_plain;
  const double spread = std::max(ratio, 1.0 / ratio);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "fast-fading BER: decoder-CSI %.3e vs no-decoder-CSI %.3e "
                "(factor %.2f, want <= 1.5)",
                ber_rcsi, ber_plain, spread);
  return {spread <= 1.5, buf};
}

// ------------------------------------------------------------ criterion 9

Outcome criterion9() {
  // Correlated-noise generator calibration at 1e6 pairs.
  bool gen_ok = true;
  double worst_corr_err = 0.0;
  for (double eps : {0.0, 0.9}) {
    Rng rng(909);
    const std::size_t n = 1'000'000;
    double s12 = 0, s11 = 0, s22 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto [a, b] = sample_correlated_noise(1.0, 1.0, eps, rng);
      s12 += a * b;
      s11 += a * a;
      s22 += b * b;
    }
    const double corr = s12 / std::sqrt(s11 * s22);
    worst_corr_err = std::max(worst_corr_err, std::abs(corr - eps));
    if (std::abs(corr - eps) > 0.01) gen_ok = false;
  }

  auto train_mc = [&](double eps) {
    ChannelSpec spec;
    MulticastSpec mc;
    mc.rho1_db = 0.0;
    mc.rho2_db = 0.0;
    mc.eta1 = Snr::noiseless();
    mc.eta2 = Snr::noiseless();
    mc.epsilon = eps;
    spec.multicast = mc;
    CodeConfig code;
    code.K = 6;
    code.multicast = true;
    return train_toy(code, spec, {0.0}, 6, 150, 256, Snr::noiseless(), 61);
  };
  DrfModel independent = train_mc(0.0);
  DrfModel correlated = train_mc(0.9);

  EvalOptions opts;
  opts.sample_cap = 100'000;
  opts.seed = 550;
  auto [i1, i2] = multicast_eval(independent, independent.channel, opts);
  auto [c1, c2] = multicast_eval(correlated, correlated.channel, opts);
  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "BLER eps=0.9 (%.3e, %.3e) < eps=0 (%.3e, %.3e) per user; "
                "generator corr err %.4f (want <= 0.01)",
                c1.bler, c2.bler, i1.bler, i2.bler, worst_corr_err);
  return {gen_ok && c1.bler < i1.bler && c2.bler < i2.bler, buf};
}

// ----------------------------------------------------------- criterion 10

Outcome criterion10() {
  bool ok = true;
  std::string detail;

  if (spectral_efficiency(50, 153, 0.0) != 50.0 / 153.0 ||
      std::abs(spectral_efficiency(50, 153, 0.0) - 0.3268) > 5e-5) {
    ok = false;
    detail += "SE(50,153,0); ";
  }
  for (double db : {-7.5, -1.0, 0.0, 3.25, 20.0}) {
    if (std::abs(variance_to_snr_db(snr_db_to_variance(db)) - db) > 1e-9) {
      ok = false;
      detail += "snr<->variance round trip; ";
      break;
    }
  }
  Tape tape;
  Tensor bits({1, 2}, {1, 0});
  Var probs = tape.constant(Tensor({1, 2}, {0.9, 0.2}));
  const double loss = tape.value(bce_loss(tape, probs, bits)).item();
  const double want = -(std::log2(0.9) + std::log2(0.8));
  if (std::abs(loss - want) > 1e-6) {
    ok = false;
    detail += "BCE hand value; ";
  }
  if (detail.empty()) {
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "SE = 50/153 = %.4f; snr round-trips; BCE %.6f (err %.1e)",
                  50.0 / 153.0, loss, std::abs(loss - want));
    detail = buf;
  }
  return {ok, detail};
}

// ----------------------------------------------------------- criterion 11

int run_cli(const std::string& args, const std::string& log) {
  const std::string cli = DRF_CLI_PATH;
  if (cli.empty()) return -1;
  const std::string cmd = cli + " " + args + " > " + log + " 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::filesystem::path only_run_dir(const std::filesystem::path& base) {
  std::filesystem::path found;
  for (const auto& e : std::filesystem::directory_iterator(base)) {
    if (e.is_directory()) found = e.path();
  }
  return found;
}

Outcome criterion11() {
  namespace fs = std::filesystem;
  const fs::path work = fs::temp_directory_path() / "drf_accept11";
  fs::remove_all(work);
  fs::create_directories(work);
  if (std::string(DRF_CLI_PATH).empty()) {
    return {false, "CLI path not configured"};
  }

  // A trained checkpoint for the sweep (tiny but real).
  const std::string train_args =
      "train --k 4 --seed 12 --set schedule=0 --set epochs_per_entry=2 "
      "--set zeta=10 --set batch_initial=64 --set micro_batch=64 "
      "--set batch_max=128 --set feedback_snr_db=20 --set calibrate_samples=512";
  for (const char* round : {"t1", "t2"}) {
    if (run_cli(train_args + " --out " + (work / round).string(),
                (work / round).string() + ".log") != 0) {
      return {false, "train run failed, see " + (work / "t1.log").string()};
    }
  }
  const fs::path t1 = only_run_dir(work / "t1"), t2 = only_run_dir(work / "t2");
  auto [m1, ck1] = load_checkpoint((t1 / "ckpt_final.drfc").string());
  auto [m2, ck2] = load_checkpoint((t2 / "ckpt_final.drfc").string());
  const bool ckpt_ok = tensors_checksum(ck1) == tensors_checksum(ck2);

  // Training CSVs must agree except for the wall-time column.
  auto strip_wall = [](const std::string& csv) {
    std::istringstream is(csv);
    std::string line, out;
    while (std::getline(is, line)) {
      const auto last_comma = line.rfind(',');
      out += line.substr(0, last_comma);
      out += "\n";
    }
    return out;
  };
  const bool log_ok = strip_wall(slurp(t1 / "epochs.csv")) ==
                      strip_wall(slurp(t2 / "epochs.csv"));

  // Result CSVs must be byte identical: sweep twice off the same checkpoint.
  const std::string sweep_args =
      "sweep --checkpoint " + (t1 / "ckpt_final.drfc").string() +
      " --snr 0:1:1 --delta -1:1:1 --samples 10000 --seed 77 "
      "--set feedback_snr_db=20 --set eval_batch=500";
  for (const char* round : {"s1", "s2"}) {
    if (run_cli(sweep_args + " --out " + (work / round).string(),
                (work / round).string() + ".log") != 0) {
      return {false, "sweep run failed"};
    }
  }
  const std::string sweep1 = slurp(only_run_dir(work / "s1") / "sweep.csv");
  const std::string sweep2 = slurp(only_run_dir(work / "s2") / "sweep.csv");
  const bool sweep_ok = !sweep1.empty() && sweep1 == sweep2;

  // Baseline CSV likewise.
  const std::string base_args = "baseline --snr 0,1 --samples 200000 --seed 5";
  for (const char* round : {"b1", "b2"}) {
    if (run_cli(base_args + " --out " + (work / round).string(),
                (work / round).string() + ".log") != 0) {
      return {false, "baseline run failed"};
    }
  }
  const bool base_ok = slurp(only_run_dir(work / "b1") / "baseline.csv") ==
                       slurp(only_run_dir(work / "b2") / "baseline.csv");

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "checkpoint checksums %s; train log %s; sweep CSV %s; "
                "baseline CSV %s",
                ckpt_ok ? "identical" : "DIFFER",
                log_ok ? "identical" : "DIFFER",
                sweep_ok ? "byte-identical" : "DIFFER",
                base_ok ? "byte-identical" : "DIFFER");
  return {ckpt_ok && log_ok && sweep_ok && base_ok, buf};
}

}  // namespace

int main(int argc, char** argv) {
  int which = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      which = std::atoi(argv[i + 1]);
    }
  }
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> entries = {
      {1, "gradient oracle (end-to-end finite differences, K=4)", criterion1},
      {2, "power constraint (1/L E||x||^2 = 1 +- 2%)", criterion2},
      {3, "causality (exhaustive feedback perturbation, K=8)", criterion3},
      {4, "LMMSE estimators vs joint-Gaussian oracle", criterion4},
      {5, "batch-size adaptation trace and schedule arithmetic", criterion5},
      {6, "learning smoke test (K=10, BER < 0.05 in 2000 steps)", criterion6},
      {7, "attention robustness under SNR mismatch (+-2 dB)", criterion7},
      {8, "fading parity: decoder CSI within 1.5x", criterion8},
      {9, "multicast trend: correlated noise decodes better", criterion9},
      {10, "formula checks (SE, snr<->variance, BCE)", criterion10},
      {11, "reproducibility (byte-identical CSV, checksums)", criterion11},
  };
  int failures = 0;
  for (const Entry& e : entries) {
    if (which != 0 && e.id != which) continue;
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out = {false, std::string("exception: ") + ex.what()};
    }
    std::printf("[criterion %2d] %s - %s: %s\n", e.id,
                out.pass ? "PASS" : "FAIL", e.name, out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures;
}
