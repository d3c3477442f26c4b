#include "cli.hpp"

#include "synten/errors.hpp"
#include "synten/io.hpp"
#include "synten/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace synten::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<std::uint64_t> seed;
  int max_iters = 500;
  double tol = 1e-6;
  std::optional<int> restarts;
  std::optional<Index> epoch_len;
  std::vector<int> tasks;
  std::string out;
  bool include_runtime = false;

  FitConfig config() const {
    FitConfig cfg;
    cfg.max_iters = max_iters;
    cfg.tol = tol;
    cfg.restarts = restarts;
    cfg.seed = seed ? *seed : env_seed();
    cfg.validate();
    return cfg;
  }

  static std::uint64_t env_seed() {
    const char* s = std::getenv("SYNTEN_SEED");
    if (!s || !*s) return 0;
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(s, &pos);
      if (pos != std::string(s).size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError(std::string("SYNTEN_SEED is not an unsigned integer: '") + s + "'");
    }
  }
};

void add_fit_options(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "RNG seed (default: $SYNTEN_SEED, else 0)");
  app->add_option("--max-iters", c.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  app->add_option("--tol", c.tol, "Stop when the fit changes by less than this (percent)")->check(CLI::PositiveNumber);
  app->add_option("--restarts", c.restarts, "Random restarts (best fit kept)")->check(CLI::PositiveNumber);
  app->add_option("--epoch-len", c.epoch_len, "Samples per epoch after resampling (default: longest epoch)")
      ->check(CLI::Range(Index{2}, Index{1} << 30));
  app->add_option("--tasks", c.tasks, "Restrict to these task ids")->delimiter(',')->allow_extra_args(false);
  app->add_option("--out", c.out, "Output directory (default: report JSON on stdout)");
  app->add_flag("--include-runtime", c.include_runtime, "Add wall time to reports (breaks byte determinism)");
}

RecordingSet load(const std::string& input, const std::vector<int>& tasks) {
  RecordingSet rs = read_epochs(input);
  if (!tasks.empty()) {
    for (int t : tasks) {
      const auto ids = rs.task_ids();
      if (std::find(ids.begin(), ids.end(), t) == ids.end())
        throw DataError({input + ": task " + std::to_string(t) + " not present"});
    }
    rs = rs.select_tasks(tasks);
  }
  return rs;
}

void emit_report(const SynergyReport& r, const Common& c, std::ostream& out) {
  const std::string json = report_to_json(r, c.include_runtime);
  if (c.out.empty()) {
    out << json;
    return;
  }
  const fs::path dir(c.out);
  write_text_file(dir / "report.json", json);
  write_text_file(dir / "synergies.tsv", synergies_tsv(r));
  if (r.temporal.size() > 0) write_text_file(dir / "temporal.tsv", temporal_tsv(r));
  out << (dir / "report.json").string() << '\n';
}

void emit_text(const std::string& text, const std::string& out_dir, const std::string& file, std::ostream& out) {
  if (out_dir.empty()) {
    out << text;
    return;
  }
  const fs::path p = fs::path(out_dir) / file;
  write_text_file(p, text);
  out << p.string() << '\n';
}

std::vector<Index> parse_ranks(const std::vector<Index>& ranks, std::size_t expected, const std::string& method) {
  if (ranks.size() != expected)
    throw UsageError("--ranks for " + method + " takes " + std::to_string(expected) + " value(s)");
  for (Index r : ranks)
    if (r < 1) throw UsageError("--ranks values must be >= 1");
  return ranks;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tensor decompositions for muscle-synergy extraction", "synten"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "synten 0.1.0");

  // synth
  SynthSpec spec;
  Common synth_c;
  int synth_dofs = 1;
  std::optional<double> snr;
  auto* synth = app.add_subcommand("synth", "Write a synthetic epoch set with known synergies");
  synth->add_option("--seed", synth_c.seed, "RNG seed (default: $SYNTEN_SEED, else 0)");
  synth->add_option("--out", synth_c.out, "Output directory")->required();
  synth->add_option("--n-dofs", synth_dofs, "Degrees of freedom (two tasks each)")->check(CLI::Range(1, 2));
  synth->add_option("--reps", spec.reps_per_task, "Repetitions per task")->check(CLI::PositiveNumber);
  synth->add_option("--channels", spec.n_channels, "Channel count");
  synth->add_option("--samples", spec.n_samples, "Samples per epoch");
  synth->add_option("--sample-rate", spec.sample_rate, "Hz")->check(CLI::PositiveNumber);
  synth->add_option("--snr-db", snr, "Per-epoch SNR of half-normal noise");
  synth->add_option("--noise-sigma", spec.noise_sigma, "Noise scale when --snr-db is not given");
  synth->add_option("--shared-gain", spec.shared_gain, "Relative amplitude of the shared synergy");
  synth->add_option("--gain-drift", spec.gain_drift, "Task synergy gain drift across repetitions");
  synth->add_option("--shared-drift", spec.shared_drift, "Shared synergy gain drift across repetitions");
  synth->add_option("--gain-jitter", spec.gain_jitter, "Per-repetition gain noise");
  synth->add_option("--profile-jitter", spec.profile_jitter, "Activation peak offsets");
  synth->add_option("--length-jitter", spec.length_jitter, "Epoch length variation in samples");

  // tensorize
  Common tens_c;
  std::string tens_in;
  auto* tens = app.add_subcommand("tensorize", "Stack epochs into a samples x channels x repetitions tensor");
  tens->add_option("input", tens_in, "Epoch directory or file")->required();
  add_fit_options(tens, tens_c);

  // decompose
  Common dec_c;
  std::string dec_in, method;
  std::vector<Index> ranks;
  int dec_dofs = 1;
  auto* dec = app.add_subcommand("decompose", "Extract synergies with one method");
  dec->add_option("input", dec_in, "Epoch directory or file")->required();
  dec->add_option("--method", method, "nmf, parafac, tucker or constd")
      ->required()
      ->check(CLI::IsMember({"nmf", "parafac", "tucker", "constd"}));
  dec->add_option("--ranks", ranks, "parafac: R; tucker: J1,J2,J3; nmf: synergies per task")
      ->delimiter(',')
      ->allow_extra_args(false);
  dec->add_option("--n-dofs", dec_dofs, "constd: degrees of freedom")->check(CLI::Range(1, 2));
  add_fit_options(dec, dec_c);

  // compare
  Common cmp_c;
  std::string cmp_in;
  int cmp_dofs = 1;
  auto* cmp = app.add_subcommand("compare", "consTD against the per-repetition NMF benchmark");
  cmp->add_option("input", cmp_in, "Epoch directory or file")->required();
  cmp->add_option("--n-dofs", cmp_dofs, "Degrees of freedom")->check(CLI::Range(1, 2));
  add_fit_options(cmp, cmp_c);

  // shuffle-validate
  Common shf_c;
  std::string shf_in;
  int shf_dofs = 1, shuffles = 15;
  auto* shf = app.add_subcommand("shuffle-validate", "Refit consTD on repetition-shuffled tensors");
  shf->add_option("input", shf_in, "Epoch directory or file")->required();
  shf->add_option("--n-dofs", shf_dofs, "Degrees of freedom")->check(CLI::Range(1, 2));
  shf->add_option("--shuffles", shuffles, "Number of shuffled refits")->check(CLI::PositiveNumber);
  add_fit_options(shf, shf_c);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kOk;
    } catch (const CLI::CallForVersion&) {
      out << "synten 0.1.0\n";
      return kOk;
    } catch (const CLI::ParseError& e) {
      // Error line first so scripts can parse it, then usage for the
      // subcommand that was being parsed.
      err << "error[usage]: " << e.what() << '\n';
      const auto chosen = app.get_subcommands();
      err << (chosen.empty() ? app.help() : chosen.back()->help());
      return kUsage;
    }

    if (*synth) {
      spec.n_tasks = 2 * synth_dofs;
      spec.seed = synth_c.seed ? *synth_c.seed : Common::env_seed();
      spec.snr_db = snr;
      const SynthData data = generate_synthetic(spec);
      write_epochs(data.recordings, synth_c.out);
      write_text_file(fs::path(synth_c.out) / "ground_truth.json", ground_truth_to_json(data.truth, spec));
      out << synth_c.out << '\n';
      return kOk;
    }
    if (*tens) {
      const RecordingSet rs = load(tens_in, tens_c.tasks);
      const TensorizedSet ts = tensorize(rs, tens_c.epoch_len.value_or(default_epoch_len(rs)));
      emit_text(tensor_to_json(ts), tens_c.out, "tensor.json", out);
      return kOk;
    }
    if (*dec) {
      const FitConfig cfg = dec_c.config();
      const RecordingSet rs = load(dec_in, dec_c.tasks);
      SynergyReport rep;
      if (method == "constd") {
        if (!ranks.empty()) throw UsageError("constd layout is fixed by --n-dofs; --ranks does not apply");
        rep = extract_constd(rs, dec_dofs, cfg, dec_c.epoch_len);
      } else if (method == "nmf") {
        const Index k = ranks.empty() ? 2 : parse_ranks(ranks, 1, method)[0];
        rep = extract_nmf_benchmark(rs, cfg, k);
      } else if (method == "parafac") {
        const Index r = ranks.empty() ? 2 : parse_ranks(ranks, 1, method)[0];
        rep = extract_parafac(rs, r, cfg, dec_c.epoch_len);
      } else {
        const auto j = ranks.empty() ? std::vector<Index>{3, 3, 3} : parse_ranks(ranks, 3, method);
        rep = extract_tucker(rs, {j[0], j[1], j[2]}, cfg, dec_c.epoch_len);
      }
      emit_report(rep, dec_c, out);
      if (!rep.converged) {
        err << "warning[convergence]: " << method << " stopped at --max-iters " << cfg.max_iters
            << " before reaching --tol " << cfg.tol << "; model written anyway\n";
        return kNotConverged;
      }
      return kOk;
    }
    if (*cmp) {
      const FitConfig cfg = cmp_c.config();
      const RecordingSet rs = load(cmp_in, cmp_c.tasks);
      const MethodComparison c = compare_methods(rs, cmp_dofs, cfg, cmp_c.epoch_len);
      emit_text(comparison_to_json(c, cmp_c.include_runtime), cmp_c.out, "comparison.json", out);
      bool converged = c.constd.converged;
      for (const auto& n : c.nmf) converged = converged && n.converged;
      if (!converged) {
        err << "warning[convergence]: a fit stopped at --max-iters " << cfg.max_iters << "; results written anyway\n";
        return kNotConverged;
      }
      return kOk;
    }
    if (*shf) {
      const FitConfig cfg = shf_c.config();
      const RecordingSet rs = load(shf_in, shf_c.tasks);
      const ShuffleResult s = shuffle_validation(rs, shf_dofs, shuffles, cfg, shf_c.epoch_len);
      emit_text(shuffle_to_json(s, shf_c.include_runtime), shf_c.out, "shuffle.json", out);
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error[usage]: " << e.what() << '\n';
    return kUsage;
  } catch (const ArgumentError& e) {
    err << "error[usage]: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "error[data]: " << e.what() << '\n';
    for (std::size_t i = 1; i < e.locations().size(); ++i) err << "  " << e.locations()[i] << '\n';
    return kData;
  } catch (const IoError& e) {
    err << "error[data]: " << e.what() << '\n';
    return kData;
  } catch (const DegenerateInputError& e) {
    err << "error[data]: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error[data]: " << e.what() << '\n';
    return kData;
  }
  err << "error[usage]: no subcommand given\n";
  return kUsage;
}

}  // namespace synten::cli
