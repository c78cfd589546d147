#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "drf/gradcheck.hpp"
#include "drf/montecarlo.hpp"
#include "drf/runio.hpp"
#include "drf/trainer.hpp"

namespace py = pybind11;
using namespace drf;

namespace {

ChannelSpec spec_from_kwargs(const std::string& mode, double snr_db,
                             const std::string& feedback, double omega,
                             std::optional<py::dict> multicast) {
  ChannelSpec spec;
  spec.fading = fading_mode_from_name(mode);
  spec.forward_snr_db = snr_db;
  spec.feedback = Snr::parse(feedback);
  spec.rayleigh_omega = omega;
  if (multicast) {
    MulticastSpec mc;
    const py::dict& d = *multicast;
    mc.rho1_db = d.contains("rho1_db") ? d["rho1_db"].cast<double>() : snr_db;
    mc.rho2_db = d.contains("rho2_db") ? d["rho2_db"].cast<double>() : snr_db;
    mc.eta1 = Snr::parse(d.contains("eta1") ? d["eta1"].cast<std::string>()
                                            : feedback);
    mc.eta2 = Snr::parse(d.contains("eta2") ? d["eta2"].cast<std::string>()
                                            : feedback);
    mc.epsilon = d.contains("epsilon") ? d["epsilon"].cast<double>() : 0.0;
    spec.multicast = mc;
  }
  spec.validate();
  return spec;
}

py::dict estimate_to_dict(const ErrorEstimate& e) {
  py::dict d;
  d["ber"] = e.ber;
  d["bler"] = e.bler;
  d["ber_ci95"] = e.ber_ci95;
  d["bler_ci95"] = e.bler_ci95;
  d["samples"] = e.samples;
  d["bit_errors"] = e.bit_errors;
  d["block_errors"] = e.block_errors;
  d["censored"] = e.censored;
  return d;
}

// Python-facing wrapper owning a model.
class PyModel {
 public:
  PyModel(DrfModel model) : model_(std::move(model)) {}

  static PyModel create(std::size_t k, const std::string& mode, bool multicast,
                        const std::string& csi, bool rcsi, double snr_db,
                        const std::string& feedback, double rayleigh_omega,
                        std::optional<py::dict> multicast_spec,
                        std::uint64_t seed) {
    CodeConfig cfg;
    cfg.K = k;
    cfg.fading = fading_mode_from_name(mode);
    cfg.multicast = multicast;
    cfg.csi = csi_mode_from_name(csi);
    cfg.rcsi = rcsi;
    ChannelSpec spec = spec_from_kwargs(
        mode, snr_db, feedback, rayleigh_omega,
        multicast ? std::optional<py::dict>(multicast_spec.value_or(py::dict()))
                  : std::nullopt);
    return PyModel(DrfModel::init(cfg, spec, seed));
  }

  static PyModel load(const std::string& path) {
    return PyModel(DrfModel::load(path));
  }

  void save(const std::string& path) const { model_.save(path); }
  std::size_t k() const { return model_.cfg.K; }
  std::size_t block_length_() const { return model_.cfg.L(); }
  std::uint64_t checksum() { return model_.checksum(); }

  void calibrate(std::size_t samples, std::size_t batch, std::uint64_t seed) {
    calibrate_statistics(model_, model_.channel, samples, batch, seed);
  }

  // One end-to-end pass of a single random sample in eval mode. Returns the
  // emitted codeword (time order), received block and decoded probabilities.
  py::dict transmit_one(double snr_db, const std::string& feedback,
                        std::uint64_t seed) {
    ChannelSpec spec = model_.channel;
    if (!spec.multicast) {
      spec.forward_snr_db = snr_db;
      spec.feedback = Snr::parse(feedback);
    }
    Dataset ds(spec, model_.cfg.K, 1, seed, 0);
    SampleBatch batch = batch_from_dataset(ds, 0, 1);
    Tape tape;
    Binder binder(tape);
    RunFlags flags;
    PipelineResult res = run_pipeline(tape, binder, model_, batch, flags);
    py::dict out;
    std::vector<double> x;
    for (const Var& v : res.x_time) x.push_back(tape.value(v)[0]);
    std::vector<double> probs(tape.value(res.probs).vec());
    std::vector<int> bits;
    for (std::size_t i = 0; i < batch.bits.size(); ++i)
      bits.push_back(static_cast<int>(batch.bits[i]));
    out["codeword"] = x;
    out["probs"] = probs;
    out["bits"] = bits;
    return out;
  }

  py::dict evaluate(double snr_db, const std::string& feedback,
                    std::uint64_t samples, std::uint64_t seed,
                    std::size_t threads) {
    ChannelSpec spec = model_.channel;
    if (!spec.multicast) {
      spec.forward_snr_db = snr_db;
      spec.feedback = Snr::parse(feedback);
    }
    EvalOptions opts;
    opts.sample_cap = samples;
    opts.seed = seed;
    opts.threads = threads;
    if (spec.multicast) {
      auto [e1, e2] = multicast_eval(model_, spec, opts);
      py::dict d;
      d["user1"] = estimate_to_dict(e1);
      d["user2"] = estimate_to_dict(e2);
      return d;
    }
    return estimate_to_dict(estimate_error(model_, spec, opts));
  }

  std::vector<double> train(std::vector<double> schedule,
                            std::size_t epochs_per_entry, std::size_t zeta,
                            std::size_t batch, const std::string& feedback,
                            double lr, std::uint64_t seed) {
    TrainPlan plan;
    plan.snr_schedule_db =
        TrainPlan::expand_schedule(schedule, epochs_per_entry);
    plan.feedback = Snr::parse(feedback);
    plan.batch_initial = batch;
    plan.batch_max = 16 * batch;
    plan.zeta = zeta;
    plan.micro_batch = std::min<std::size_t>(batch, 256);
    plan.learning_rate = lr;
    plan.seed = seed;
    Trainer trainer(model_, plan);
    std::vector<double> losses;
    trainer.train([&](const DrfModel&, const EpochReport& rep, bool) {
      losses.push_back(rep.final_loss);
    });
    return losses;
  }

 private:
  DrfModel model_;
};

double py_gradcheck(std::size_t k, const std::string& mode,
                    std::uint64_t seed) {
  CodeConfig cfg;
  cfg.K = k;
  cfg.fading = fading_mode_from_name(mode);
  ChannelSpec spec;
  spec.fading = cfg.fading;
  spec.forward_snr_db = 0.0;
  spec.feedback = Snr::from_db(10.0);
  DrfModel model = DrfModel::init(cfg, spec, seed);
  Dataset ds(spec, k, 2, seed + 1, 0);
  SampleBatch batch = batch_from_dataset(ds, 0, 2);
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
  return gradient_check(params, forward).max_rel_err;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "LSTM feedback channel codes: encoders, decoders, channel "
            "simulation and Monte-Carlo evaluation";
  m.attr("__version__") = "0.1.0";

  m.def("snr_db_to_variance", &snr_db_to_variance, py::arg("snr_db"));
  m.def("variance_to_snr_db", &variance_to_snr_db, py::arg("variance"));
  m.def("spectral_efficiency", &spectral_efficiency, py::arg("k"),
        py::arg("l"), py::arg("bler"));
  m.def("block_length",
        [](std::size_t k) { return block_length(k); }, py::arg("k"));
  m.def("qfunc", &qfunc, py::arg("x"));

  m.def(
      "rayleigh_samples",
      [](double sigma, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<double> out(n);
        for (double& v : out) v = sample_rayleigh(sigma, rng);
        return out;
      },
      py::arg("sigma"), py::arg("n"), py::arg("seed") = 1);
  m.def(
      "correlated_noise",
      [](double s1, double s2, double eps, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
          auto [x, y] = sample_correlated_noise(s1, s2, eps, rng);
          a[i] = x;
          b[i] = y;
        }
        return py::make_tuple(a, b);
      },
      py::arg("sigma1"), py::arg("sigma2"), py::arg("epsilon"), py::arg("n"),
      py::arg("seed") = 1);

  m.def(
      "lmmse_fast",
      [](double z, double x, double mean, double var, double sn2, double sm2) {
        return lmmse_fast(z, x, FadingPrior{mean, var}, sn2, sm2);
      },
      py::arg("z"), py::arg("x"), py::arg("mean"), py::arg("var"),
      py::arg("sigma_n2"), py::arg("sigma_m2"));
  m.def(
      "lmmse_slow",
      [](std::vector<double> z, std::vector<double> x, double mean, double var,
         double sn2, double sm2) {
        return lmmse_slow(z, x, FadingPrior{mean, var}, sn2, sm2);
      },
      py::arg("z"), py::arg("x"), py::arg("mean"), py::arg("var"),
      py::arg("sigma_n2"), py::arg("sigma_m2"));
  m.def("receiver_compensate", &receiver_compensate, py::arg("y"),
        py::arg("alpha"), py::arg("sigma_n2"));
  m.def(
      "rayleigh_prior",
      [](double omega) {
        const FadingPrior p = FadingPrior::rayleigh(omega);
        return py::make_tuple(p.mean, p.variance);
      },
      py::arg("omega"));

  m.def("uncoded_baseline_ber",
        [](double snr_db, std::uint64_t n, std::uint64_t seed) {
          return uncoded_baseline(snr_db, n, seed).ber;
        },
        py::arg("snr_db"), py::arg("n") = 100000, py::arg("seed") = 1);
  m.def("gradcheck", &py_gradcheck, py::arg("k") = 4, py::arg("mode") = "awgn",
        py::arg("seed") = 1);

  py::class_<PyModel>(m, "Model")
      .def_static("create", &PyModel::create, py::arg("k"),
                  py::arg("mode") = "awgn", py::arg("multicast") = false,
                  py::arg("csi") = "exact", py::arg("rcsi") = false,
                  py::arg("snr_db") = 0.0, py::arg("feedback") = "inf",
                  py::arg("rayleigh_omega") = 1.0,
                  py::arg("multicast_spec") = std::nullopt,
                  py::arg("seed") = 1)
      .def_static("load", &PyModel::load, py::arg("path"))
      .def("save", &PyModel::save, py::arg("path"))
      .def_property_readonly("k", &PyModel::k)
      .def_property_readonly("block_length", &PyModel::block_length_)
      .def("checksum", &PyModel::checksum)
      .def("calibrate", &PyModel::calibrate, py::arg("samples") = 2000,
           py::arg("batch") = 500, py::arg("seed") = 1)
      .def("transmit_one", &PyModel::transmit_one, py::arg("snr_db") = 0.0,
           py::arg("feedback") = "inf", py::arg("seed") = 1)
      .def("evaluate", &PyModel::evaluate, py::arg("snr_db") = 0.0,
           py::arg("feedback") = "inf", py::arg("samples") = 10000,
           py::arg("seed") = 1, py::arg("threads") = 1)
      .def("train", &PyModel::train, py::arg("schedule"),
           py::arg("epochs_per_entry") = 1, py::arg("zeta") = 10,
           py::arg("batch") = 128, py::arg("feedback") = "inf",
           py::arg("lr") = 1e-3, py::arg("seed") = 1);
}
