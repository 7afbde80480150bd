// Command-line front end for the tbss shared library.  Everything goes
// through the C interface in tbss.h; exit codes are 0 (success), 1 (usage)
// and 2 (runtime failure).
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tbss.h"

namespace {

struct SampleHandle {
  tbss_sample* ptr = nullptr;
  ~SampleHandle() { tbss_sample_free(ptr); }
};

struct ResultHandle {
  tbss_result* ptr = nullptr;
  ~ResultHandle() { tbss_result_free(ptr); }
};

struct StringHandle {
  char* ptr = nullptr;
  ~StringHandle() { tbss_string_free(ptr); }
};

[[noreturn]] void die(const std::string& context) {
  std::fprintf(stderr, "tbss: %s: %s\n", context.c_str(), tbss_last_error());
  std::exit(2);
}

void check(tbss_status status, const std::string& context) {
  if (status != TBSS_OK) die(context);
}

// Writes through a temporary sibling and renames, so failures leave no
// partial file at the destination.
void write_file(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      std::fprintf(stderr, "tbss: cannot write '%s'\n", tmp.c_str());
      std::exit(2);
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    std::fprintf(stderr, "tbss: cannot move '%s' to '%s'\n", tmp.c_str(), path.c_str());
    std::exit(2);
  }
}

// Prints to stdout when no output path was given.
void emit(const std::string& output, const std::string& text) {
  if (output.empty())
    std::fwrite(text.data(), 1, text.size(), stdout);
  else
    write_file(output, text);
}

tbss_sample* load_sample(const std::string& input, bool csv,
                         const std::vector<int64_t>& dims) {
  tbss_sample* s = nullptr;
  if (csv) {
    if (dims.empty()) {
      std::fprintf(stderr, "tbss: --csv needs --dims\n");
      std::exit(1);
    }
    check(tbss_sample_read_csv(input.c_str(), dims.data(), dims.size(), &s),
          "reading '" + input + "'");
  } else {
    check(tbss_sample_read(input.c_str(), &s), "reading '" + input + "'");
  }
  return s;
}

struct FitFlags {
  std::string input, output, latent_out, estimator, method;
  std::vector<int64_t> dims, ks;
  bool csv = false;
  tbss_fit_options opts{};
};

int run_fit(const FitFlags& flags) {
  SampleHandle sample;
  sample.ptr = load_sample(flags.input, flags.csv, flags.dims);
  const size_t order = tbss_sample_order(sample.ptr);

  ResultHandle result;
  if (!flags.estimator.empty()) {
    check(tbss_fit_named(sample.ptr, flags.estimator.c_str(), &flags.opts, &result.ptr),
          "fitting " + flags.estimator);
  } else if (flags.method == "vfobi" || flags.method == "vjade") {
    const int64_t k = flags.ks.empty() ? 0 : flags.ks[0];
    const char* core = flags.method == "vfobi" ? "tfobi" : (k > 0 ? "ktjade" : "tjade");
    check(tbss_fit_vectorized(sample.ptr, core, k, &flags.opts, &result.ptr),
          "fitting " + flags.method);
  } else {
    std::vector<int64_t> ks = flags.ks;
    if (ks.empty()) ks.assign(order, 1);
    if (ks.size() != order) {
      std::fprintf(stderr, "tbss: --k has %zu entries, sample has %zu modes\n",
                   ks.size(), order);
      return 2;
    }
    std::vector<const char*> methods(order);
    for (size_t m = 0; m < order; ++m)
      methods[m] = ks[m] == 0 ? "skip" : flags.method.c_str();
    check(tbss_fit(sample.ptr, methods.data(), ks.data(), order, &flags.opts,
                   &result.ptr),
          "fitting " + flags.method);
  }

  check(tbss_result_write(result.ptr, flags.output.c_str()),
        "writing '" + flags.output + "'");
  if (!flags.latent_out.empty()) {
    SampleHandle latent;
    check(tbss_result_latent(result.ptr, &latent.ptr), "extracting latent sample");
    check(tbss_sample_write(latent.ptr, flags.latent_out.c_str()),
          "writing '" + flags.latent_out + "'");
  }

  const size_t modes = tbss_result_mode_count(result.ptr);
  for (size_t m = 1; m <= modes; ++m) {
    int sweeps = 0, converged = 0, low = 0;
    double ms = 0.0, spread = 0.0;
    check(tbss_result_mode_stats(result.ptr, m, &sweeps, &converged, &ms, &spread, &low),
          "reading diagnostics");
    const int64_t dim = tbss_result_mode_dim(result.ptr, m);
    std::printf("mode %zu: dim=%lld method=%s k=%lld sweeps=%d converged=%s "
                "time=%.3fms kappa_spread=%.4f\n",
                m, static_cast<long long>(dim), tbss_result_mode_method(result.ptr, m),
                static_cast<long long>(tbss_result_mode_k(result.ptr, m)), sweeps,
                converged ? "yes" : "no", ms, spread);
    if (low)
      std::printf("mode %zu: kappa spread below 0.1, source order may be unstable\n", m);
  }
  std::printf("result written to %s\n", flags.output.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind source separation for matrix- and tensor-valued samples"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  tbss_fit_options defaults{};
  tbss_fit_options_init(&defaults);

  // fit ------------------------------------------------------------------
  FitFlags fit;
  fit.opts = defaults;
  CLI::App* cmd_fit = app.add_subcommand("fit", "Fit an unmixing estimate to a sample");
  cmd_fit->add_option("--input", fit.input, "Sample path (TBSS1, or CSV with --csv)")
      ->required();
  cmd_fit->add_flag("--csv", fit.csv, "Input is CSV text, one observation per line");
  cmd_fit->add_option("--dims", fit.dims, "Tensor extents of each observation (CSV input)")
      ->delimiter(',');
  cmd_fit->add_option("--method", fit.method,
                      "Per-mode method: tfobi, tjade, ktjade; or vectorized vfobi/vjade")
      ->default_val("ktjade")
      ->check(CLI::IsMember({"tfobi", "tjade", "ktjade", "vfobi", "vjade"}));
  cmd_fit->add_option("--k", fit.ks,
                      "Band width per mode, 0 skips the mode (default: all 1)")
      ->delimiter(',');
  cmd_fit->add_option("--estimator", fit.estimator,
                      "Named estimator (e.g. tjade, 22-tjade, ktjade:1,2,0, 2-vjade); "
                      "overrides --method/--k");
  cmd_fit->add_option("--tol", fit.opts.tolerance, "Joint-diagonalization tolerance")
      ->capture_default_str();
  cmd_fit->add_option("--sweeps", fit.opts.max_sweeps, "Joint-diagonalization sweep cap")
      ->capture_default_str();
  cmd_fit->add_option("--rho-cap", fit.opts.rho_cap,
                      "Refuse vectorized fits above this total dimension")
      ->capture_default_str();
  cmd_fit->add_option("--output", fit.output, "Result document path (JSON)")->required();
  cmd_fit->add_option("--latent-out", fit.latent_out,
                      "Also write the recovered latent sample (TBSS1)");

  // simulate ---------------------------------------------------------------
  int sim_setting = 1;
  std::vector<int64_t> sim_ns;
  int sim_reps = 0, sim_threads = 1;
  std::string sim_scenarios, sim_estimators, sim_output;
  std::uint64_t sim_seed = 1001;
  tbss_fit_options sim_opts = defaults;
  CLI::App* cmd_sim =
      app.add_subcommand("simulate", "Replicated recovery study on a built-in setting");
  cmd_sim->add_option("--setting", sim_setting, "Latent layout preset: 1, 2 or 3")
      ->required()
      ->check(CLI::Range(1, 3));
  cmd_sim->add_option("--n", sim_ns, "Sample sizes (default 1000,2000)")->delimiter(',');
  cmd_sim->add_option("--reps", sim_reps, "Replicates per cell (default 50)");
  cmd_sim->add_option("--scenarios", sim_scenarios,
                      "Comma list of identity, orthogonal, gaussian (default identity)");
  cmd_sim->add_option("--estimators", sim_estimators,
                      "Comma list of estimator names (default: setting's own list)");
  cmd_sim->add_option("--seed", sim_seed, "Master seed")->capture_default_str();
  cmd_sim->add_option("--threads", sim_threads, "Worker threads (results identical)")
      ->capture_default_str();
  cmd_sim->add_option("--tol", sim_opts.tolerance, "Joint-diagonalization tolerance")
      ->capture_default_str();
  cmd_sim->add_option("--sweeps", sim_opts.max_sweeps, "Joint-diagonalization sweep cap")
      ->capture_default_str();
  cmd_sim->add_option("--output", sim_output, "Output TSV path (default stdout)");

  // md ---------------------------------------------------------------------
  std::string md_a, md_b, md_output;
  CLI::App* cmd_md =
      app.add_subcommand("md", "Minimum distance between two saved fits, per mode");
  cmd_md->add_option("--a", md_a, "First result document")->required();
  cmd_md->add_option("--b", md_b, "Second result document")->required();
  cmd_md->add_option("--output", md_output, "Output TSV path (default stdout)");

  // scree --------------------------------------------------------------
  std::string scr_input, scr_output;
  std::vector<int64_t> scr_dims;
  bool scr_csv = false;
  std::size_t scr_mode = 1;
  tbss_fit_options scr_opts = defaults;
  CLI::App* cmd_scree =
      app.add_subcommand("scree", "Band-width selection curve for one mode");
  cmd_scree->add_option("--input", scr_input, "Sample path")->required();
  cmd_scree->add_flag("--csv", scr_csv, "Input is CSV text");
  cmd_scree->add_option("--dims", scr_dims, "Tensor extents (CSV input)")->delimiter(',');
  cmd_scree->add_option("--mode", scr_mode, "Mode to scan (1-based)")->required();
  cmd_scree->add_option("--tol", scr_opts.tolerance, "Joint-diagonalization tolerance")
      ->capture_default_str();
  cmd_scree->add_option("--sweeps", scr_opts.max_sweeps, "Joint-diagonalization sweep cap")
      ->capture_default_str();
  cmd_scree->add_option("--output", scr_output, "Output TSV path (default stdout)");

  // bench --------------------------------------------------------------
  std::vector<int64_t> bench_q{5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  int64_t bench_n = 1000;
  int bench_iters = 3;
  std::uint64_t bench_seed = 1001;
  std::string bench_estimators, bench_output;
  CLI::App* cmd_bench =
      app.add_subcommand("bench", "Fit-time benchmark over matrix widths");
  cmd_bench->add_option("--q", bench_q, "Grid of matrix widths (observations are 3 x q)")
      ->delimiter(',');
  cmd_bench->add_option("--n", bench_n, "Observations per timing sample")
      ->capture_default_str();
  cmd_bench->add_option("--estimators", bench_estimators,
                        "Comma list (default tfobi,11-tjade,22-tjade,tjade)");
  cmd_bench->add_option("--iters", bench_iters, "Timed repetitions per cell")
      ->capture_default_str();
  cmd_bench->add_option("--seed", bench_seed, "Master seed")->capture_default_str();
  cmd_bench->add_option("--output", bench_output, "Output TSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (cmd_fit->parsed()) return run_fit(fit);

  if (cmd_sim->parsed()) {
    StringHandle tsv;
    check(tbss_simulate(sim_setting, sim_ns.empty() ? nullptr : sim_ns.data(),
                        sim_ns.size(), sim_reps,
                        sim_scenarios.empty() ? nullptr : sim_scenarios.c_str(),
                        sim_estimators.empty() ? nullptr : sim_estimators.c_str(),
                        sim_seed, &sim_opts, sim_threads, &tsv.ptr),
          "simulate");
    emit(sim_output, tsv.ptr);
    return 0;
  }

  if (cmd_md->parsed()) {
    ResultHandle a, b;
    check(tbss_result_read(md_a.c_str(), &a.ptr), "reading '" + md_a + "'");
    check(tbss_result_read(md_b.c_str(), &b.ptr), "reading '" + md_b + "'");
    const size_t modes = tbss_result_mode_count(a.ptr);
    std::vector<double> md(modes, 0.0);
    check(tbss_md_between(a.ptr, b.ptr, md.data()), "md");
    std::string out = "mode\tmd\n";
    for (size_t m = 0; m < modes; ++m) {
      char line[64];
      std::snprintf(line, sizeof(line), "%zu\t%.10g\n", m + 1, md[m]);
      out += line;
    }
    emit(md_output, out);
    return 0;
  }

  if (cmd_scree->parsed()) {
    SampleHandle sample;
    sample.ptr = load_sample(scr_input, scr_csv, scr_dims);
    StringHandle tsv;
    check(tbss_scree(sample.ptr, scr_mode, &scr_opts, &tsv.ptr), "scree");
    emit(scr_output, tsv.ptr);
    return 0;
  }

  if (cmd_bench->parsed()) {
    StringHandle tsv;
    check(tbss_bench(bench_q.data(), bench_q.size(), bench_n,
                     bench_estimators.empty() ? nullptr : bench_estimators.c_str(),
                     bench_seed, bench_iters, &defaults, &tsv.ptr),
          "bench");
    emit(bench_output, tsv.ptr);
    return 0;
  }

  return 1;
}
