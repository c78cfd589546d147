#include "drf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace drf {

std::string batch_rule_name(BatchRule r) {
  return r == BatchRule::Alg1 ? "alg1" : "stall";
}

BatchRule batch_rule_from_name(const std::string& s) {
  if (s == "alg1") return BatchRule::Alg1;
  if (s == "stall") return BatchRule::Stall;
  throw std::invalid_argument("unknown batch rule '" + s + "'");
}

void TrainPlan::validate() const {
  if (snr_schedule_db.empty()) {
    throw std::invalid_argument("TrainPlan: empty SNR schedule");
  }
  for (std::size_t u = 1; u < snr_schedule_db.size(); ++u) {
    if (snr_schedule_db[u] < snr_schedule_db[u - 1]) {
      throw std::invalid_argument(
          "TrainPlan: SNR schedule must be non-decreasing");
    }
  }
  if (batch_initial < 1 || batch_initial > batch_max) {
    throw std::invalid_argument(
        "TrainPlan: need 1 <= initial batch <= batch_max");
  }
  if (kappa <= 1.0) throw std::invalid_argument("TrainPlan: kappa must be > 1");
  if (lambda < 1.0) throw std::invalid_argument("TrainPlan: lambda must be >= 1");
  if (zeta < 1) throw std::invalid_argument("TrainPlan: zeta must be >= 1");
  if (learning_rate <= 0.0) {
    throw std::invalid_argument("TrainPlan: learning rate must be > 0");
  }
  if (micro_batch < 1) {
    throw std::invalid_argument("TrainPlan: micro_batch must be >= 1");
  }
}

std::vector<double> TrainPlan::expand_schedule(
    const std::vector<double>& entries, std::size_t epochs_per_entry) {
  std::vector<double> out;
  out.reserve(entries.size() * epochs_per_entry);
  for (double v : entries) {
    for (std::size_t i = 0; i < epochs_per_entry; ++i) out.push_back(v);
  }
  return out;
}

std::size_t update_batch_size(double loss_u, double loss_prev,
                              std::size_t batch, double lambda, double kappa,
                              std::size_t batch_max, BatchRule rule) {
  const bool stalled = rule == BatchRule::Alg1 ? loss_u >= lambda * loss_prev
                                               : loss_u >= loss_prev / lambda;
  if (stalled && batch < batch_max) {
    const auto grown =
        static_cast<std::size_t>(std::llround(kappa * static_cast<double>(batch)));
    return std::min(grown, batch_max);
  }
  return batch;
}

Trainer::Trainer(DrfModel& model, TrainPlan plan)
    : model_(model), plan_(std::move(plan)) {
  plan_.validate();
  AdamConfig cfg;
  cfg.lr = plan_.learning_rate;
  adam_ = Adam(cfg);
  params_ = model_.parameters();
}

ChannelSpec Trainer::epoch_channel(double snr_db) const {
  ChannelSpec spec = model_.channel;
  spec.feedback = plan_.feedback;
  if (spec.multicast) {
    // The schedule drives receiver 1; receiver 2 keeps its nominal offset.
    const double offset = spec.multicast->rho2_db - spec.multicast->rho1_db;
    spec.multicast->rho1_db = snr_db;
    spec.multicast->rho2_db = snr_db + offset;
    spec.multicast->eta1 = plan_.feedback;
    spec.multicast->eta2 = plan_.feedback;
  } else {
    spec.forward_snr_db = snr_db;
  }
  return spec;
}

double Trainer::train_step(const SampleBatch& batch) {
  for (Parameter* p : params_) p->zero_grad();
  const std::size_t B = batch.batch_size();
  const std::size_t micro = std::min(plan_.micro_batch, B);
  double loss_value = 0.0;
  RunFlags flags;
  flags.training = true;
  flags.attention = plan_.attention;
  for (std::size_t lo = 0; lo < B; lo += micro) {
    const std::size_t hi = std::min(B, lo + micro);
    // Slice the packed batch.
    SampleBatch mb;
    mb.spec = batch.spec;
    mb.K = batch.K;
    auto slice = [&](const Tensor& t) {
      if (t.size() == 0) return Tensor();
      const std::size_t n = t.cols();
      Tensor out({hi - lo, n});
      for (std::size_t i = lo; i < hi; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i - lo, j) = t.at(i, j);
      return out;
    };
    mb.bits = slice(batch.bits);
    mb.fading = slice(batch.fading);
    mb.forward_noise = slice(batch.forward_noise);
    mb.feedback_noise = slice(batch.feedback_noise);
    mb.forward_noise2 = slice(batch.forward_noise2);
    mb.feedback_noise2 = slice(batch.feedback_noise2);

    Tape tape;
    Binder binder(tape);
    PipelineResult res = run_pipeline(tape, binder, model_, mb, flags);
    Var loss = model_.cfg.multicast
                   ? multicast_loss(tape, res.probs, res.probs2, mb.bits,
                                    plan_.mc_loss_w1, plan_.mc_loss_w2)
                   : bce_loss(tape, res.probs, mb.bits);
    // Micro-batch means combine into the full-batch mean by sample weight.
    const double w = static_cast<double>(hi - lo) / static_cast<double>(B);
    Var weighted = scale(loss, w);
    loss_value += tape.value(weighted).item();
    tape.backward(weighted);
    binder.accumulate_grads();
  }
  if (!std::isfinite(loss_value)) {
    throw std::runtime_error("trainer: non-finite loss " +
                             std::to_string(loss_value));
  }
  clip_global_norm(params_, plan_.clip_norm);
  adam_.step(params_);
  // Keep the power weights strictly positive (projected update).
  Tensor& pw = model_.encoder.power_w.value;
  for (std::size_t i = 0; i < pw.size(); ++i)
    if (pw[i] < 1e-3) pw[i] = 1e-3;
  return loss_value;
}

EpochReport Trainer::run_epoch(std::size_t epoch_index,
                               std::size_t batch_size) {
  if (epoch_index < 1 || epoch_index > plan_.epochs()) {
    throw std::invalid_argument("run_epoch: epoch index out of plan range");
  }
  const auto start = std::chrono::steady_clock::now();
  const double snr_db = plan_.snr_schedule_db[epoch_index - 1];
  const ChannelSpec spec = epoch_channel(snr_db);
  const std::size_t count = plan_.zeta * batch_size;
  Dataset ds = generate_dataset(spec, model_.cfg.K, count, plan_.seed,
                                epoch_index);
  double loss = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t step = 0; step < plan_.zeta; ++step) {
    SampleBatch batch =
        batch_from_dataset(ds, step * batch_size, (step + 1) * batch_size);
    loss = train_step(batch);
  }
  EpochReport rep;
  rep.epoch = epoch_index;
  rep.batch_size = batch_size;
  rep.snr_db = snr_db;
  rep.final_loss = loss;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  rep.param_checksum = model_.checksum();
  return rep;
}

TrainResult Trainer::train(const EpochSink& sink) {
  TrainResult result;
  double loss_prev = std::numeric_limits<double>::infinity();
  double loss_initial = std::numeric_limits<double>::quiet_NaN();
  std::size_t batch = plan_.batch_initial;
  int consecutive_blowups = 0;

  // Best-loss snapshot for the divergence halt.
  std::vector<Tensor> best_values;
  auto snapshot_best = [&] {
    best_values.clear();
    for (Parameter* p : params_) best_values.push_back(p->value);
  };
  auto restore_best = [&] {
    for (std::size_t i = 0; i < params_.size(); ++i)
      params_[i]->value = best_values[i];
  };

  for (std::size_t u = 1; u <= plan_.epochs(); ++u) {
    EpochReport rep = run_epoch(u, batch);
    result.reports.push_back(rep);
    if (u == 1) loss_initial = rep.final_loss;
    const bool is_best =
        result.best_epoch == 0 || rep.final_loss < result.best_loss;
    if (is_best) {
      result.best_epoch = u;
      result.best_loss = rep.final_loss;
      snapshot_best();
    }
    if (sink) sink(model_, rep, is_best);

    if (u > 1 && rep.final_loss > 10.0 * loss_initial) {
      if (++consecutive_blowups >= 2) {
        restore_best();
        result.diverged = true;
        return result;
      }
    } else {
      consecutive_blowups = 0;
    }
    batch = update_batch_size(rep.final_loss, loss_prev, batch, plan_.lambda,
                              plan_.kappa, plan_.batch_max, plan_.batch_rule);
    loss_prev = rep.final_loss;
  }
  return result;
}

}  // namespace drf
