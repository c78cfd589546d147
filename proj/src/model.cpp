#include "drf/model.hpp"

#include <array>
#include <cmath>

namespace drf {

DrfModel DrfModel::init(const CodeConfig& cfg, const ChannelSpec& channel,
                        std::uint64_t seed) {
  cfg.validate();
  channel.validate();
  if (cfg.multicast != channel.multicast.has_value()) {
    throw std::invalid_argument(
        "DrfModel: code and channel disagree about multicast");
  }
  if (!cfg.multicast && cfg.fading != channel.fading) {
    throw std::invalid_argument(
        "DrfModel: code and channel disagree about fading mode");
  }
  DrfModel m;
  m.cfg = cfg;
  m.channel = channel;
  Rng enc_rng = Rng::derive(seed, 1);
  Rng dec_rng = Rng::derive(seed, 2);
  m.encoder = EncoderParams(cfg, enc_rng);
  m.decoder = DecoderParams(cfg, dec_rng, "decoder");
  if (cfg.multicast) {
    Rng dec2_rng = Rng::derive(seed, 3);
    m.decoder2 = DecoderParams(cfg, dec2_rng, "decoder2");
  }
  return m;
}

std::vector<Parameter*> DrfModel::parameters() {
  std::vector<Parameter*> out;
  encoder.collect(out);
  decoder.collect(out);
  if (decoder2) decoder2->collect(out);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> DrfModel::state_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  encoder.collect_state(out);
  decoder.collect_state(out);
  if (decoder2) decoder2->collect_state(out);
  return out;
}

NamedTensors DrfModel::to_tensors() {
  NamedTensors nt;
  for (Parameter* p : parameters()) nt.add(p->name, p->value);
  for (auto& [name, t] : state_tensors()) nt.add(name, *t);
  return nt;
}

nlohmann::json DrfModel::meta() const {
  nlohmann::json j;
  j["format"] = "drf-model";
  j["k"] = cfg.K;
  j["fading"] = fading_mode_name(cfg.fading);
  j["multicast"] = cfg.multicast;
  j["csi"] = csi_mode_name(cfg.csi);
  j["rcsi"] = cfg.rcsi;
  j["channel"] = {{"forward_snr_db", channel.forward_snr_db},
                  {"feedback_snr", channel.feedback.str()},
                  {"rayleigh_omega", channel.rayleigh_omega}};
  if (channel.multicast) {
    const MulticastSpec& mc = *channel.multicast;
    j["channel"]["multicast"] = {{"rho1_db", mc.rho1_db},
                                 {"rho2_db", mc.rho2_db},
                                 {"eta1", mc.eta1.str()},
                                 {"eta2", mc.eta2.str()},
                                 {"epsilon", mc.epsilon}};
  }
  return j;
}

void DrfModel::save(const std::string& path) const {
  DrfModel& self = const_cast<DrfModel&>(*this);
  save_checkpoint(path, meta(), self.to_tensors());
}

DrfModel DrfModel::load(const std::string& path) {
  auto [meta, tensors] = load_checkpoint(path);
  if (!meta.contains("format") || meta["format"] != "drf-model") {
    throw std::runtime_error("checkpoint: '" + path + "' is not a model file");
  }
  CodeConfig cfg;
  cfg.K = meta.at("k").get<std::size_t>();
  cfg.fading = fading_mode_from_name(meta.at("fading").get<std::string>());
  cfg.multicast = meta.at("multicast").get<bool>();
  cfg.csi = csi_mode_from_name(meta.at("csi").get<std::string>());
  cfg.rcsi = meta.at("rcsi").get<bool>();
  ChannelSpec spec;
  const auto& ch = meta.at("channel");
  spec.forward_snr_db = ch.at("forward_snr_db").get<double>();
  spec.feedback = Snr::parse(ch.at("feedback_snr").get<std::string>());
  spec.fading = cfg.fading;
  spec.rayleigh_omega = ch.at("rayleigh_omega").get<double>();
  if (ch.contains("multicast")) {
    MulticastSpec mc;
    mc.rho1_db = ch["multicast"].at("rho1_db").get<double>();
    mc.rho2_db = ch["multicast"].at("rho2_db").get<double>();
    mc.eta1 = Snr::parse(ch["multicast"].at("eta1").get<std::string>());
    mc.eta2 = Snr::parse(ch["multicast"].at("eta2").get<std::string>());
    mc.epsilon = ch["multicast"].at("epsilon").get<double>();
    spec.multicast = mc;
  }
  DrfModel m = DrfModel::init(cfg, spec, 0);
  for (Parameter* p : m.parameters()) {
    const Tensor& t = tensors.get(p->name);
    if (!t.same_shape(p->value)) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + p->name +
                               "': file has " + t.shape_str() + ", model needs " +
                               p->value.shape_str());
    }
    p->value = t;
  }
  for (auto& [name, t] : m.state_tensors()) {
    const Tensor& file_t = tensors.get(name);
    if (!file_t.same_shape(*t)) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    *t = file_t;
  }
  return m;
}

std::uint64_t DrfModel::checksum() { return tensors_checksum(to_tensors()); }

namespace {

// (B,1) constant column of a (B,L) tensor.
Var column_const(Tape& tape, const Tensor& t, std::size_t col) {
  const std::size_t B = t.rows();
  Tensor c({B, 1});
  for (std::size_t i = 0; i < B; ++i) c[i] = t.at(i, col);
  return tape.constant(std::move(c));
}

// Receiver-side LMMSE compensation factors alpha/(alpha^2+var) per sample.
Var compensation_const(Tape& tape, const Tensor& fading, std::size_t pos,
                       double sigma_n2) {
  const std::size_t B = fading.rows();
  Tensor c({B, 1});
  for (std::size_t i = 0; i < B; ++i) {
    const double a = fading.at(i, pos);
    const double den = a * a + sigma_n2;
    c[i] = den == 0.0 ? 0.0 : a / den;
  }
  return tape.constant(std::move(c));
}

}  // namespace

PipelineResult run_pipeline(Tape& tape, Binder& binder, DrfModel& model,
                            const SampleBatch& batch, const RunFlags& flags) {
  const CodeConfig cfg_run = [&] {
    CodeConfig c = model.cfg;
    if (flags.csi_override) c.csi = *flags.csi_override;
    if (flags.rcsi_override) c.rcsi = *flags.rcsi_override;
    return c;
  }();
  const std::size_t K = cfg_run.K;
  const std::size_t L = cfg_run.L();
  if (batch.K != K) {
    throw std::invalid_argument("run_pipeline: batch message length " +
                                std::to_string(batch.K) + " != model K " +
                                std::to_string(K));
  }
  if (batch.spec.multicast.has_value() != cfg_run.multicast) {
    throw std::invalid_argument(
        "run_pipeline: batch and model disagree about multicast");
  }
  const Schedule schedule(K);

  EncoderVars enc = bind_encoder(binder, tape, model.encoder, cfg_run);
  EncoderSession session(tape, enc, cfg_run, schedule, batch, flags);

  PipelineResult res;
  res.y_pos.assign(L, Var{});
  std::vector<Var> y2_pos;
  const bool mc = cfg_run.multicast;
  if (mc) y2_pos.assign(L, Var{});

  Var y_prev, y2_prev;
  for (std::size_t t = 0; t < L; ++t) {
    if (mc) {
      Var z1 = t == 0 ? column_const(tape, batch.feedback_noise, 0)
                      : add(y_prev, column_const(tape, batch.feedback_noise, t));
      Var z2 = t == 0
                   ? column_const(tape, batch.feedback_noise2, 0)
                   : add(y2_prev, column_const(tape, batch.feedback_noise2, t));
      session.consume2(z1, z2);
    } else {
      Var z = t == 0 ? column_const(tape, batch.feedback_noise, 0)
                     : add(y_prev, column_const(tape, batch.feedback_noise, t));
      session.consume(z);
    }
    Var x = session.emit();
    const std::size_t p = schedule.position_at_time(t);
    if (mc) {
      y_prev = add(x, column_const(tape, batch.forward_noise, p));
      y2_prev = add(x, column_const(tape, batch.forward_noise2, p));
      res.y_pos[p] = y_prev;
      y2_pos[p] = y2_prev;
    } else {
      Var ax = cfg_run.fading == FadingMode::Awgn
                   ? x
                   : mul(x, column_const(tape, batch.fading, p));
      y_prev = add(ax, column_const(tape, batch.forward_noise, p));
      res.y_pos[p] = y_prev;
    }
  }
  res.x_time = session.emissions_by_time();
  res.encoder_features = session.feature_rows();

  auto decoder_steps = [&](const std::vector<Var>& y, double sigma_n2) {
    std::vector<Var> steps;
    steps.reserve(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
      std::array<std::size_t, 3> pos = {k, K + 1 + k, 2 * K + 2 + k};
      std::vector<Var> cols;
      cols.reserve(3);
      for (std::size_t p : pos) {
        Var yp = y[p];
        if (cfg_run.rcsi) {
          yp = mul(yp, compensation_const(tape, batch.fading, p, sigma_n2));
        }
        cols.push_back(yp);
      }
      steps.push_back(concat_cols(cols));
    }
    return steps;
  };

  if (mc) {
    const MulticastSpec& m = *batch.spec.multicast;
    DecoderVars d1 = bind_decoder(binder, model.decoder);
    DecoderVars d2 = bind_decoder(binder, *model.decoder2);
    const double sn1 = snr_db_to_variance(m.rho1_db);
    const double sn2 = snr_db_to_variance(m.rho2_db);
    res.probs = decode(tape, d1, cfg_run, decoder_steps(res.y_pos, sn1), sn1,
                       m.eta1.variance(), flags);
    res.probs2 = decode(tape, d2, cfg_run, decoder_steps(y2_pos, sn2), sn2,
                        m.eta2.variance(), flags);
  } else {
    DecoderVars d1 = bind_decoder(binder, model.decoder);
    const double sn = batch.spec.forward_noise_var();
    res.probs = decode(tape, d1, cfg_run, decoder_steps(res.y_pos, sn), sn,
                       batch.spec.feedback_noise_var(), flags);
  }
  return res;
}

Var bce_loss(Tape& tape, Var probs, const Tensor& bits) {
  const Tensor& p = tape.value(probs);
  if (!p.same_shape(bits)) {
    throw ShapeError("bce_loss", "probabilities " + p.shape_str() +
                                     " vs messages " +
                                     shape_to_string(bits.shape()));
  }
  if (!p.all_finite()) {
    throw std::invalid_argument("bce_loss: non-finite probability");
  }
  const std::size_t B = bits.rows();
  Var ph = clamp(probs, 1e-12, 1.0 - 1e-12);
  Tensor ones_minus(bits.shape());
  for (std::size_t i = 0; i < bits.size(); ++i) ones_minus[i] = 1.0 - bits[i];
  Var b = tape.constant(bits);
  Var nb = tape.constant(std::move(ones_minus));
  Var ll = add(mul(b, log(ph)), mul(nb, log(affine(ph, -1.0, 1.0))));
  // Sum over bits, mean over batch, bits (log2), negated so that perfect
  // prediction minimizes the loss.
  const double c = -1.0 / (std::log(2.0) * static_cast<double>(B));
  return scale(sum(ll), c);
}

Var multicast_loss(Tape& tape, Var probs1, Var probs2, const Tensor& bits,
                   double w1, double w2) {
  Var l1 = bce_loss(tape, probs1, bits);
  Var l2 = bce_loss(tape, probs2, bits);
  return add(scale(l1, w1), scale(l2, w2));
}

void calibrate_statistics(DrfModel& model, const ChannelSpec& spec,
                          std::size_t n_samples, std::size_t batch_size,
                          std::uint64_t seed) {
  Dataset ds = generate_dataset(spec, model.cfg.K, n_samples, seed, 0);
  RunFlags flags;
  flags.training = true;  // statistics mode; no optimizer step
  for (std::size_t lo = 0; lo < n_samples; lo += batch_size) {
    const std::size_t hi = std::min(n_samples, lo + batch_size);
    SampleBatch batch = batch_from_dataset(ds, lo, hi);
    Tape tape;
    Binder binder(tape);
    run_pipeline(tape, binder, model, batch, flags);
  }
}

}  // namespace drf
