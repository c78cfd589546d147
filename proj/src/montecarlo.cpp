#include "drf/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace drf {

namespace {

double ci95(double p, std::uint64_t n) {
  if (n == 0) return 0.0;
  return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

// Shards are evaluated in blocks of fixed width; the stop rule is applied at
// block boundaries in shard order, so results do not depend on the thread
// count.
constexpr std::size_t kShardsPerBlock = 4;

struct ShardCounts {
  ErrorCounts user1;
  ErrorCounts user2;
};

template <typename EvalShard>
std::pair<ErrorCounts, ErrorCounts> run_shards(const EvalOptions& opts,
                                               std::uint64_t cap,
                                               EvalShard eval_shard) {
  ErrorCounts total1, total2;
  std::uint64_t next_start = 0;  // sample index of the next shard
  std::size_t shard_index = 0;
  while (next_start < cap) {
    // Plan one block of shards.
    std::vector<std::pair<std::size_t, std::uint64_t>> plan;  // (index, count)
    std::uint64_t planned = next_start;
    for (std::size_t b = 0; b < kShardsPerBlock && planned < cap; ++b) {
      const std::uint64_t n =
          std::min<std::uint64_t>(opts.shard_size, cap - planned);
      plan.emplace_back(shard_index + b, n);
      planned += n;
    }
    std::vector<ShardCounts> results(plan.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min(opts.threads, plan.size()));
    if (workers == 1) {
      for (std::size_t i = 0; i < plan.size(); ++i)
        results[i] = eval_shard(plan[i].first, plan[i].second);
    } else {
      std::atomic<std::size_t> cursor{0};
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= plan.size()) return;
            results[i] = eval_shard(plan[i].first, plan[i].second);
          }
        });
      }
      for (auto& th : pool) th.join();
    }
    for (const ShardCounts& r : results) {
      total1.merge(r.user1);
      total2.merge(r.user2);
    }
    shard_index += plan.size();
    next_start = planned;
    if (total1.block_errors >= opts.min_events &&
        (total2.samples == 0 || total2.block_errors >= opts.min_events)) {
      break;
    }
  }
  return {total1, total2};
}

}  // namespace

ErrorEstimate estimate_from_counts(const ErrorCounts& counts,
                                   std::uint64_t min_events, bool at_cap) {
  ErrorEstimate e;
  e.samples = counts.samples;
  e.bit_errors = counts.bit_errors;
  e.block_errors = counts.block_errors;
  e.ber = counts.ber();
  e.bler = counts.bler();
  e.ber_ci95 = ci95(e.ber, counts.bits);
  e.bler_ci95 = ci95(e.bler, counts.samples);
  e.censored = at_cap && counts.block_errors < min_events;
  return e;
}

ErrorEstimate estimate_error(DrfModel& model, const ChannelSpec& spec,
                             const EvalOptions& opts) {
  spec.validate();
  if (opts.sample_cap < 1) {
    throw std::invalid_argument("estimate_error: sample cap must be >= 1");
  }
  RunFlags flags = opts.flags;
  flags.training = false;
  auto eval_shard = [&](std::size_t shard, std::uint64_t count) {
    Dataset ds(spec, model.cfg.K, count, opts.seed, shard);
    SampleBatch batch = batch_from_dataset(ds, 0, count);
    Tape tape;
    Binder binder(tape);
    PipelineResult res = run_pipeline(tape, binder, model, batch, flags);
    ShardCounts out;
    out.user1.add(tape.value(res.probs), batch.bits);
    return out;
  };
  auto [counts, unused] = run_shards(opts, opts.sample_cap, eval_shard);
  (void)unused;
  return estimate_from_counts(counts, opts.min_events,
                              counts.samples >= opts.sample_cap);
}

std::pair<ErrorEstimate, ErrorEstimate> multicast_eval(
    DrfModel& model, const ChannelSpec& spec, const EvalOptions& opts) {
  if (!spec.multicast || !model.cfg.multicast) {
    throw std::invalid_argument("multicast_eval: not a multicast model/spec");
  }
  spec.validate();
  RunFlags flags = opts.flags;
  flags.training = false;
  auto eval_shard = [&](std::size_t shard, std::uint64_t count) {
    Dataset ds(spec, model.cfg.K, count, opts.seed, shard);
    SampleBatch batch = batch_from_dataset(ds, 0, count);
    Tape tape;
    Binder binder(tape);
    PipelineResult res = run_pipeline(tape, binder, model, batch, flags);
    ShardCounts out;
    out.user1.add(tape.value(res.probs), batch.bits);
    out.user2.add(tape.value(res.probs2), batch.bits);
    return out;
  };
  auto [c1, c2] = run_shards(opts, opts.sample_cap, eval_shard);
  const bool cap1 = c1.samples >= opts.sample_cap;
  return {estimate_from_counts(c1, opts.min_events, cap1),
          estimate_from_counts(c2, opts.min_events, cap1)};
}

double spectral_efficiency(std::size_t K, std::size_t L, double bler) {
  if (bler < 0.0 || bler > 1.0) {
    throw std::invalid_argument("spectral_efficiency: BLER must be in [0,1]");
  }
  return static_cast<double>(K) * (1.0 - bler) / static_cast<double>(L);
}

double qfunc(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

ErrorEstimate uncoded_baseline(double snr_db, std::uint64_t n,
                               std::uint64_t seed) {
  const double sigma = std::sqrt(snr_db_to_variance(snr_db));
  Rng rng = Rng::derive(seed, 0xBA5EULL);
  ErrorCounts counts;
  for (std::uint64_t i = 0; i < n; ++i) {
    const bool bit = rng.bit();
    const double x = bit ? 1.0 : -1.0;
    const double y = x + sigma * rng.normal();
    const bool hat = y >= 0.0;
    counts.samples += 1;
    counts.bits += 1;
    if (hat != bit) {
      counts.bit_errors += 1;
      counts.block_errors += 1;
    }
  }
  return estimate_from_counts(counts, 0, true);
}

std::vector<SweepPoint> mismatch_sweep(DrfModel& model,
                                       const std::vector<double>& rhos_db,
                                       const std::vector<double>& deltas_db,
                                       Snr feedback, const EvalOptions& opts) {
  if (rhos_db.empty() || deltas_db.empty()) {
    throw std::invalid_argument("mismatch_sweep: empty grid");
  }
  std::vector<SweepPoint> out;
  out.reserve(rhos_db.size() * deltas_db.size());
  for (double rho : rhos_db) {
    for (double delta : deltas_db) {
      ChannelSpec spec;
      spec.forward_snr_db = rho;
      spec.feedback = feedback;
      spec.fading = model.cfg.fading;
      spec.rayleigh_omega = model.channel.rayleigh_omega;
      EvalOptions point_opts = opts;
      const double rho_hat = rho - delta;
      point_opts.flags.attention_input = {snr_db_to_variance(rho_hat),
                                          feedback.variance()};
      SweepPoint p;
      p.rho_db = rho;
      p.delta_db = delta;
      p.est = estimate_error(model, spec, point_opts);
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace drf
