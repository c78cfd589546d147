#pragma once

#include <functional>

#include "drf/adam.hpp"
#include "drf/model.hpp"

namespace drf {

// Batch growth trigger. Alg1 grows when the loss got lambda-times worse
// (L_u >= lambda * L_{u-1}); Stall grows whenever the loss failed to shrink
// by a factor of lambda (L_u >= L_{u-1} / lambda). Both are exposed; Alg1 is
// the default.
enum class BatchRule { Alg1, Stall };

std::string batch_rule_name(BatchRule r);
BatchRule batch_rule_from_name(const std::string& s);

// Full training recipe: per-epoch SNR curriculum plus batch-size adaptation.
struct TrainPlan {
  std::vector<double> snr_schedule_db;  // one entry per epoch, non-decreasing
  Snr feedback = Snr::noiseless();
  std::size_t batch_initial = 1000;
  std::size_t batch_max = 16000;
  std::size_t zeta = 100;  // dataset size multiplier = optimizer steps/epoch
  double lambda = 2.0;
  double kappa = 2.0;
  BatchRule batch_rule = BatchRule::Alg1;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;
  std::size_t micro_batch = 256;
  std::uint64_t seed = 1;
  AttentionMode attention = AttentionMode::Learned;
  double mc_loss_w1 = 1.0;  // multicast loss weights
  double mc_loss_w2 = 1.0;

  std::size_t epochs() const { return snr_schedule_db.size(); }
  void validate() const;  // throws std::invalid_argument

  // Expands schedule entries to per-epoch values, e.g. {-1,-1,0,1,2} x 3
  // epochs per entry -> 15 epochs.
  static std::vector<double> expand_schedule(const std::vector<double>& entries,
                                             std::size_t epochs_per_entry);
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  std::size_t batch_size = 0;
  double snr_db = 0.0;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t param_checksum = 0;
};

// Batch-size adaptation step; loss_prev is +infinity before the first epoch.
std::size_t update_batch_size(double loss_u, double loss_prev,
                              std::size_t batch, double lambda, double kappa,
                              std::size_t batch_max, BatchRule rule);

struct TrainResult {
  std::vector<EpochReport> reports;
  bool diverged = false;
  std::size_t best_epoch = 0;  // 1-based, lowest final loss
  double best_loss = 0.0;
};

// Called after every completed epoch so the front end can persist
// checkpoints and logs.
using EpochSink = std::function<void(const DrfModel&, const EpochReport&,
                                     bool is_best)>;

class Trainer {
 public:
  Trainer(DrfModel& model, TrainPlan plan);

  // One epoch at the given 1-based index: fresh dataset of zeta*batch
  // samples at the scheduled SNR, zeta optimizer steps. Throws on
  // non-finite loss.
  EpochReport run_epoch(std::size_t epoch_index, std::size_t batch_size);

  // Full Algorithm-style loop with SNR scheduling, batch adaptation and the
  // divergence halt (loss above 10x the first epoch's for two consecutive
  // epochs restores the best parameters and stops).
  TrainResult train(const EpochSink& sink = {});

  const TrainPlan& plan() const { return plan_; }
  Adam& optimizer() { return adam_; }

 private:
  ChannelSpec epoch_channel(double snr_db) const;
  double train_step(const SampleBatch& batch);

  DrfModel& model_;
  TrainPlan plan_;
  Adam adam_;
  std::vector<Parameter*> params_;
};

}  // namespace drf
