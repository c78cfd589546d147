// Command-line front end: train | eval | sweep | multicast | gradcheck |
// baseline. Configuration comes from an optional key=value file plus
// --set overrides; every run writes its CSV results and a metadata line
// under a fresh run directory.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "drf/gradcheck.hpp"
#include "drf/montecarlo.hpp"
#include "drf/runio.hpp"
#include "drf/trainer.hpp"

namespace {

using namespace drf;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string checkpoint;
  std::string snrs;
  std::string deltas;
  long long k = -1;
  long long seed = -1;
  long long threads = -1;
  long long samples = -1;
};

Config resolve_config(const CommonArgs& args) {
  Config cfg;
  if (!args.config_path.empty()) cfg = Config::from_file(args.config_path);
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("--set expects key=value, got '" + kv + "'");
    }
    cfg.merge_override(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.checkpoint.empty()) cfg.merge_override("checkpoint", args.checkpoint);
  if (!args.snrs.empty()) cfg.merge_override("snrs", args.snrs);
  if (!args.deltas.empty()) cfg.merge_override("deltas", args.deltas);
  if (args.k >= 0) cfg.merge_override("k", std::to_string(args.k));
  if (args.seed >= 0) cfg.merge_override("seed", std::to_string(args.seed));
  if (args.threads >= 0) cfg.merge_override("threads", std::to_string(args.threads));
  if (args.samples >= 0) cfg.merge_override("samples_cap", std::to_string(args.samples));
  if (!args.out_dir.empty()) cfg.merge_override("out_dir", args.out_dir);
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  cmd->add_option("--set", args.overrides, "override: key=value (repeatable)");
  cmd->add_option("--out", args.out_dir, "base directory for the run");
  cmd->add_option("--seed", args.seed, "experiment seed");
}

CodeConfig code_config_from(const Config& cfg) {
  CodeConfig code;
  code.K = cfg.get_u64("k", 10);
  code.fading = fading_mode_from_name(cfg.get("mode", "awgn"));
  code.multicast = cfg.get_bool("multicast", false);
  code.csi = csi_mode_from_name(cfg.get("csi", "exact"));
  code.rcsi = cfg.get_bool("rcsi", false);
  code.validate();
  return code;
}

ChannelSpec channel_from(const Config& cfg, const CodeConfig& code,
                         double forward_snr_db) {
  ChannelSpec spec;
  spec.fading = code.fading;
  spec.forward_snr_db = forward_snr_db;
  spec.feedback = Snr::parse(cfg.get("feedback_snr_db", "inf"));
  spec.rayleigh_omega = cfg.get_double("rayleigh_omega", 1.0);
  if (code.multicast) {
    MulticastSpec mc;
    mc.rho1_db = cfg.get_double("rho1_db", forward_snr_db);
    mc.rho2_db = cfg.get_double("rho2_db", forward_snr_db);
    mc.eta1 = Snr::parse(cfg.get("eta1_db", "inf"));
    mc.eta2 = Snr::parse(cfg.get("eta2_db", "inf"));
    mc.epsilon = cfg.get_double("epsilon", 0.0);
    spec.multicast = mc;
  }
  spec.validate();
  return spec;
}

EvalOptions eval_options_from(const Config& cfg) {
  EvalOptions opts;
  opts.sample_cap = cfg.get_u64("samples_cap", 1'000'000);
  if (opts.sample_cap < 10'000) {
    throw std::runtime_error("samples_cap must be >= 10000");
  }
  opts.min_events = cfg.get_u64("min_events", 100);
  opts.shard_size = cfg.get_u64("eval_batch", 512);
  opts.threads = cfg.get_u64("threads", 1);
  opts.seed = cfg.get_u64("seed", 1);
  return opts;
}

std::vector<std::string> censored_str(const ErrorEstimate& e) {
  return {format_rate(e.ber), format_rate(e.ber_ci95), format_rate(e.bler),
          format_rate(e.bler_ci95), std::to_string(e.samples),
          std::to_string(e.bit_errors), std::to_string(e.block_errors),
          e.censored ? "1" : "0"};
}

int run_train(const CommonArgs& args) {
  Config cfg = resolve_config(args);
  cfg.restrict_keys({"k", "mode", "multicast", "csi", "rcsi", "attention",
                     "seed", "out_dir", "schedule", "epochs_per_entry",
                     "feedback_snr_db", "batch_initial", "batch_max", "zeta",
                     "lambda", "kappa", "batch_rule", "lr", "clip_norm",
                     "micro_batch", "rayleigh_omega", "rho1_db", "rho2_db",
                     "eta1_db", "eta2_db", "epsilon", "loss_w1", "loss_w2",
                     "calibrate_samples"});
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const CodeConfig code = code_config_from(cfg);

  TrainPlan plan;
  plan.snr_schedule_db = TrainPlan::expand_schedule(
      parse_grid(cfg.get("schedule", "-1,-1,0,1,2")),
      cfg.get_u64("epochs_per_entry", 3));
  plan.feedback = Snr::parse(cfg.get("feedback_snr_db", "inf"));
  plan.batch_initial = cfg.get_u64("batch_initial", 1000);
  plan.batch_max = cfg.get_u64("batch_max", 16000);
  plan.zeta = cfg.get_u64("zeta", 100);
  plan.lambda = cfg.get_double("lambda", 2.0);
  plan.kappa = cfg.get_double("kappa", 2.0);
  plan.batch_rule = batch_rule_from_name(cfg.get("batch_rule", "alg1"));
  plan.learning_rate = cfg.get_double("lr", 1e-3);
  plan.clip_norm = cfg.get_double("clip_norm", 1.0);
  plan.micro_batch = cfg.get_u64("micro_batch", 256);
  plan.seed = seed;
  plan.attention = cfg.get("attention", "learned") == "ones"
                       ? AttentionMode::AllOnes
                       : AttentionMode::Learned;
  plan.mc_loss_w1 = cfg.get_double("loss_w1", 1.0);
  plan.mc_loss_w2 = cfg.get_double("loss_w2", 1.0);
  plan.validate();

  // The model's nominal channel is the final (highest) scheduled SNR.
  const ChannelSpec channel =
      channel_from(cfg, code, plan.snr_schedule_db.back());
  DrfModel model = DrfModel::init(code, channel, seed);

  const std::string run_dir = make_run_dir(cfg.get("out_dir", ""), seed);
  write_metadata(run_dir, "train", cfg, seed);
  std::printf("run dir: %s\n", run_dir.c_str());

  Trainer trainer(model, plan);
  CsvWriter log({"epoch", "snr_db", "batch_size", "final_loss",
                 "param_checksum", "wall_seconds"});
  TrainResult result =
      trainer.train([&](const DrfModel& m, const EpochReport& rep, bool best) {
        log.add_row({std::to_string(rep.epoch), format_double(rep.snr_db),
                     std::to_string(rep.batch_size),
                     format_rate(rep.final_loss),
                     format_hex64(rep.param_checksum),
                     format_double(rep.wall_seconds)});
        char name[64];
        std::snprintf(name, sizeof(name), "/ckpt_epoch_%03zu.drfc", rep.epoch);
        m.save(run_dir + name);
        if (best) m.save(run_dir + "/ckpt_best.drfc");
        std::printf("epoch %zu  snr %+0.1f dB  batch %zu  loss %.6e\n",
                    rep.epoch, rep.snr_db, rep.batch_size, rep.final_loss);
      });
  const std::uint64_t calibrate = cfg.get_u64("calibrate_samples", 5000);
  if (calibrate > 0) {
    calibrate_statistics(model, model.channel, calibrate,
                         std::min<std::size_t>(plan.micro_batch, 512),
                         seed + 0x5EEDULL);
  }
  model.save(run_dir + "/ckpt_final.drfc");
  log.write(run_dir + "/epochs.csv");
  if (result.diverged) {
    std::fprintf(stderr,
                 "training diverged; best checkpoint (epoch %zu) restored\n",
                 result.best_epoch);
    return 2;
  }
  std::printf("final checkpoint: %s/ckpt_final.drfc (checksum %s)\n",
              run_dir.c_str(), format_hex64(model.checksum()).c_str());
  return 0;
}

int run_eval(const CommonArgs& args) {
  Config cfg = resolve_config(args);
  cfg.restrict_keys({"checkpoint", "snrs", "feedback_snr_db", "samples_cap",
                     "min_events", "eval_batch", "threads", "seed", "out_dir",
                     "rho_hat", "rcsi", "attention", "csi"});
  const std::string ckpt = cfg.get("checkpoint", "");
  if (ckpt.empty()) throw std::runtime_error("eval: checkpoint is required");
  DrfModel model = DrfModel::load(ckpt);
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  EvalOptions opts = eval_options_from(cfg);
  if (cfg.has("rcsi")) opts.flags.rcsi_override = cfg.get_bool("rcsi", false);
  if (cfg.has("csi"))
    opts.flags.csi_override = csi_mode_from_name(cfg.get("csi", "exact"));
  if (cfg.get("attention", "learned") == "ones")
    opts.flags.attention = AttentionMode::AllOnes;

  const std::vector<double> snrs =
      parse_grid(cfg.get("snrs", format_double(model.channel.forward_snr_db)));
  const Snr feedback =
      Snr::parse(cfg.get("feedback_snr_db", model.channel.feedback.str()));

  CsvWriter csv({"rho_db", "feedback_snr_db", "ber", "ber_ci95", "bler",
                 "bler_ci95", "samples", "bit_errors", "block_errors",
                 "censored"});
  for (double rho : snrs) {
    ChannelSpec spec = model.channel;
    spec.forward_snr_db = rho;
    spec.feedback = feedback;
    EvalOptions point = opts;
    if (cfg.has("rho_hat")) {
      point.flags.attention_input = {
          snr_db_to_variance(cfg.get_double("rho_hat", rho)),
          feedback.variance()};
    }
    const ErrorEstimate est = estimate_error(model, spec, point);
    std::vector<std::string> row = {format_double(rho), feedback.str()};
    const auto rest = censored_str(est);
    row.insert(row.end(), rest.begin(), rest.end());
    csv.add_row(row);
    std::printf("rho %+0.2f dB  BER %.3e  BLER %.3e%s\n", rho, est.ber,
                est.bler, est.censored ? "  (censored)" : "");
  }
  const std::string run_dir = make_run_dir(cfg.get("out_dir", ""), seed);
  write_metadata(run_dir, "eval", cfg, seed);
  csv.write(run_dir + "/eval.csv");
  std::printf("wrote %s/eval.csv\n", run_dir.c_str());
  return 0;
}

int run_sweep(const CommonArgs& args) {
  Config cfg = resolve_config(args);
  cfg.restrict_keys({"checkpoint", "snrs", "deltas", "feedback_snr_db",
                     "samples_cap", "min_events", "eval_batch", "threads",
                     "seed", "out_dir", "attention"});
  const std::string ckpt = cfg.get("checkpoint", "");
  if (ckpt.empty()) throw std::runtime_error("sweep: checkpoint is required");
  DrfModel model = DrfModel::load(ckpt);
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  EvalOptions opts = eval_options_from(cfg);
  if (cfg.get("attention", "learned") == "ones")
    opts.flags.attention = AttentionMode::AllOnes;
  const std::vector<double> rhos = parse_grid(cfg.get("snrs", "-1:2:1"));
  const std::vector<double> deltas = parse_grid(cfg.get("deltas", "-3:3:1"));
  const Snr feedback =
      Snr::parse(cfg.get("feedback_snr_db", model.channel.feedback.str()));

  const auto rows = mismatch_sweep(model, rhos, deltas, feedback, opts);
  CsvWriter csv({"rho_db", "delta_db", "rho_hat_db", "ber", "ber_ci95",
                 "bler", "bler_ci95", "samples", "bit_errors", "block_errors",
                 "censored"});
  for (const SweepPoint& pt : rows) {
    std::vector<std::string> row = {format_double(pt.rho_db),
                                    format_double(pt.delta_db),
                                    format_double(pt.rho_db - pt.delta_db)};
    const auto rest = censored_str(pt.est);
    row.insert(row.end(), rest.begin(), rest.end());
    csv.add_row(row);
  }
  const std::string run_dir = make_run_dir(cfg.get("out_dir", ""), seed);
  write_metadata(run_dir, "sweep", cfg, seed);
  csv.write(run_dir + "/sweep.csv");
  std::printf("wrote %s/sweep.csv (%zu rows)\n", run_dir.c_str(), csv.rows());
  return 0;
}

int run_multicast(const CommonArgs& args) {
  Config cfg = resolve_config(args);
  cfg.restrict_keys({"checkpoint", "rho_pairs", "epsilons", "eta1_db",
                     "eta2_db", "samples_cap", "min_events", "eval_batch",
                     "threads", "seed", "out_dir"});
  const std::string ckpt = cfg.get("checkpoint", "");
  if (ckpt.empty()) {
    throw std::runtime_error("multicast: checkpoint is required");
  }
  DrfModel model = DrfModel::load(ckpt);
  if (!model.cfg.multicast) {
    throw std::runtime_error("multicast: '" + ckpt +
                             "' is not a two-user checkpoint");
  }
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  EvalOptions opts = eval_options_from(cfg);

  // SNR pairs "r1:r2" comma separated; defaults to the trained pair.
  std::vector<std::pair<double, double>> pairs;
  const std::string pair_text =
      cfg.get("rho_pairs", format_double(model.channel.multicast->rho1_db) +
                               ":" +
                               format_double(model.channel.multicast->rho2_db));
  {
    std::istringstream is(pair_text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw std::runtime_error("multicast: rho_pairs wants r1:r2 entries");
      }
      pairs.emplace_back(std::stod(tok.substr(0, colon)),
                         std::stod(tok.substr(colon + 1)));
    }
  }
  const std::vector<double> epsilons = parse_grid(
      cfg.get("epsilons", format_double(model.channel.multicast->epsilon)));

  const std::size_t K = model.cfg.K;
  const std::size_t L = model.cfg.L();
  CsvWriter csv({"epsilon", "rho1_db", "rho2_db", "user", "ber", "ber_ci95",
                 "bler", "bler_ci95", "se", "samples", "bit_errors",
                 "block_errors", "censored"});
  for (const auto& [r1, r2] : pairs) {
    for (double eps : epsilons) {
      ChannelSpec spec = model.channel;
      spec.multicast->rho1_db = r1;
      spec.multicast->rho2_db = r2;
      spec.multicast->epsilon = eps;
      spec.multicast->eta1 = Snr::parse(
          cfg.get("eta1_db", model.channel.multicast->eta1.str()));
      spec.multicast->eta2 = Snr::parse(
          cfg.get("eta2_db", model.channel.multicast->eta2.str()));
      auto [e1, e2] = multicast_eval(model, spec, opts);
      int user = 1;
      for (const ErrorEstimate* e : {&e1, &e2}) {
        csv.add_row({format_double(eps), format_double(r1), format_double(r2),
                     std::to_string(user), format_rate(e->ber),
                     format_rate(e->ber_ci95), format_rate(e->bler),
                     format_rate(e->bler_ci95),
                     format_rate(spectral_efficiency(K, L, e->bler)),
                     std::to_string(e->samples), std::to_string(e->bit_errors),
                     std::to_string(e->block_errors), e->censored ? "1" : "0"});
        std::printf("eps %+0.2f  (%+0.1f,%+0.1f) dB  user %d  BLER %.3e  SE %.4f\n",
                    eps, r1, r2, user,
                    e->bler, spectral_efficiency(K, L, e->bler));
        ++user;
      }
    }
  }
  const std::string run_dir = make_run_dir(cfg.get("out_dir", ""), seed);
  write_metadata(run_dir, "multicast", cfg, seed);
  csv.write(run_dir + "/multicast.csv");
  std::printf("wrote %s/multicast.csv\n", run_dir.c_str());
  return 0;
}

int run_gradcheck(const CommonArgs& args) {
  Config cfg = resolve_config(args);
  cfg.restrict_keys({"k", "mode", "csi", "rcsi", "feedback_snr_db", "seed",
                     "batch", "threshold", "multicast"});
  CodeConfig code = code_config_from(cfg);
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const double threshold = cfg.get_double("threshold", 1e-4);
  const std::size_t batch = cfg.get_u64("batch", 3);
  ChannelSpec spec = channel_from(cfg, code, 0.0);
  if (!cfg.has("feedback_snr_db")) {
    spec.feedback = Snr::from_db(10.0);  // noisy by default: exercises both
    if (spec.multicast) {
      spec.multicast->eta1 = spec.feedback;
      spec.multicast->eta2 = spec.feedback;
    }
  }
  DrfModel model = DrfModel::init(code, spec, seed);

  Dataset ds = generate_dataset(spec, code.K, batch, seed + 1, 0);
  SampleBatch sample_batch = batch_from_dataset(ds, 0, batch);
  RunFlags flags;
  flags.training = true;

  auto params = model.parameters();
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Binder binder(tape);
    PipelineResult res = run_pipeline(tape, binder, model, sample_batch, flags);
    Var loss = code.multicast
                   ? multicast_loss(tape, res.probs, res.probs2,
                                    sample_batch.bits)
                   : bce_loss(tape, res.probs, sample_batch.bits);
    tape.backward(loss);
    binder.accumulate_grads();
  }
  auto forward = [&] {
    Tape tape;
    Binder binder(tape);
    // Statistics must not drift between probes: freeze them by copying.
    DrfModel& m = model;
    EncoderParams enc_backup = m.encoder;
    DecoderParams dec_backup = m.decoder;
    std::optional<DecoderParams> dec2_backup = m.decoder2;
    PipelineResult res = run_pipeline(tape, binder, m, sample_batch, flags);
    Var loss = code.multicast
                   ? multicast_loss(tape, res.probs, res.probs2,
                                    sample_batch.bits)
                   : bce_loss(tape, res.probs, sample_batch.bits);
    const double v = tape.value(loss).item();
    m.encoder = std::move(enc_backup);
    m.decoder = std::move(dec_backup);
    m.decoder2 = std::move(dec2_backup);
    return v;
  };
  const GradCheckResult res = gradient_check(params, forward);
  std::printf("gradcheck: %zu partial derivatives, max rel err %.3e (%s[%zu]: ad=%.6e fd=%.6e)\n",
              res.checked, res.max_rel_err, res.worst_param.c_str(),
              res.worst_index, res.autodiff_value, res.fd_value);
  if (res.max_rel_err > threshold) {
    std::fprintf(stderr, "gradcheck FAILED: %.3e > %.3e\n", res.max_rel_err,
                 threshold);
    return 1;
  }
  std::printf("gradcheck OK (threshold %.1e)\n", threshold);
  return 0;
}

int run_baseline(const CommonArgs& args) {
  Config cfg = resolve_config(args);
  cfg.restrict_keys({"snrs", "samples", "samples_cap", "seed", "out_dir"});
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const std::uint64_t n = cfg.get_u64("samples_cap", cfg.get_u64("samples", 1'000'000));
  const std::vector<double> snrs = parse_grid(cfg.get("snrs", "-1:2:1"));
  CsvWriter csv({"rho_db", "ber", "ber_ci95", "ber_closed_form", "samples"});
  for (double rho : snrs) {
    const ErrorEstimate est = uncoded_baseline(rho, n, seed);
    const double sigma = std::sqrt(snr_db_to_variance(rho));
    csv.add_row({format_double(rho), format_rate(est.ber),
                 format_rate(est.ber_ci95), format_rate(qfunc(1.0 / sigma)),
                 std::to_string(est.samples)});
    std::printf("rho %+0.2f dB  uncoded BER %.4e  Q(1/sigma) %.4e\n", rho,
                est.ber, qfunc(1.0 / sigma));
  }
  const std::string run_dir = make_run_dir(cfg.get("out_dir", ""), seed);
  write_metadata(run_dir, "baseline", cfg, seed);
  csv.write(run_dir + "/baseline.csv");
  std::printf("wrote %s/baseline.csv\n", run_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSTM feedback channel codes: training and Monte-Carlo evaluation"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, sweep_args, mc_args, gc_args, base_args;

  CLI::App* train = app.add_subcommand("train", "train an encoder/decoder pair");
  add_common(train, train_args);
  train->add_option("--k", train_args.k, "message length K");

  CLI::App* eval = app.add_subcommand("eval", "BER/BLER at given SNRs");
  add_common(eval, eval_args);
  eval->add_option("--checkpoint", eval_args.checkpoint, "model checkpoint");
  eval->add_option("--snr,--snrs", eval_args.snrs, "SNR grid (lo:hi:step or list)");
  eval->add_option("--threads", eval_args.threads, "sampling worker threads");
  eval->add_option("--samples", eval_args.samples, "sample cap per point");

  CLI::App* sweep = app.add_subcommand("sweep", "SNR-mismatch sweep");
  add_common(sweep, sweep_args);
  sweep->add_option("--checkpoint", sweep_args.checkpoint, "model checkpoint");
  sweep->add_option("--snr,--snrs", sweep_args.snrs, "channel SNR grid");
  sweep->add_option("--delta,--deltas", sweep_args.deltas, "mismatch grid");
  sweep->add_option("--threads", sweep_args.threads, "sampling worker threads");
  sweep->add_option("--samples", sweep_args.samples, "sample cap per point");

  CLI::App* mc = app.add_subcommand("multicast", "two-user evaluation");
  add_common(mc, mc_args);
  mc->add_option("--checkpoint", mc_args.checkpoint, "two-user checkpoint");
  mc->add_option("--threads", mc_args.threads, "sampling worker threads");
  mc->add_option("--samples", mc_args.samples, "sample cap per point");

  CLI::App* gc = app.add_subcommand("gradcheck",
                                    "autodiff vs. finite differences");
  add_common(gc, gc_args);
  gc->add_option("--k", gc_args.k, "message length K");

  CLI::App* base = app.add_subcommand("baseline", "uncoded antipodal BER");
  add_common(base, base_args);
  base->add_option("--snr,--snrs", base_args.snrs, "SNR grid");
  base->add_option("--samples", base_args.samples, "symbols per point");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(train_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (sweep->parsed()) return run_sweep(sweep_args);
    if (mc->parsed()) return run_multicast(mc_args);
    if (gc->parsed()) return run_gradcheck(gc_args);
    if (base->parsed()) return run_baseline(base_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
