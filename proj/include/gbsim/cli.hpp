#pragma once

// Subcommand front end. Every command resolves and validates its inputs,
// computes in memory, then writes its output files followed by a run
// manifest, so failed runs never leave partial outputs behind. Exit codes:
// 0 success, 1 runtime or statistical failure, 2 input validation.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gbsim/device.hpp"
#include "gbsim/errors.hpp"
#include "gbsim/graph_similarity.hpp"
#include "gbsim/nonclassicality.hpp"
#include "gbsim/serialization.hpp"
#include "gbsim/statistics.hpp"
#include "gbsim/types.hpp"
#include "gbsim/version.hpp"
#include "gbsim/vibronic.hpp"

namespace gbsim {
namespace cli {

/// Locates an input file: as given, or under $GBSIM_DATA_DIR for bare names.
inline std::string resolve_input(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  if (path.find('/') == std::string::npos) {
    if (const char* dir = std::getenv("GBSIM_DATA_DIR")) {
      const fs::path candidate = fs::path(dir) / path;
      if (fs::exists(candidate)) return candidate.string();
    }
  }
  throw ValidationError("file not found: " + path);
}

inline std::string file_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

struct Context {
  std::string cmdline;  // subcommand and arguments as invoked
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }

  RunManifest manifest(const std::string& command) const {
    RunManifest m;
    m.command = command;
    m.duration_seconds = elapsed();
    return m;
  }
};

// ---------------------------------------------------------------------------
// sample: draw detector patterns for a chip/job pair.

struct SampleOpts {
  std::string chip, job, out;
  std::uint64_t shots = 0, seed = 0;
  int cutoff = 0, threads = 0;
  bool has_shots = false, has_seed = false, has_cutoff = false;
};

inline void run_sample(const Context& ctx, const SampleOpts& o) {
  const std::string chip_path = resolve_input(o.chip);
  const std::string job_path = resolve_input(o.job);
  const ChipSpec chip = load_chip(chip_path);
  JobSpec job = load_job(job_path);
  if (o.has_shots) job.shots = o.shots;
  if (o.has_seed) job.seed = o.seed;
  if (o.has_cutoff) job.total_cutoff = o.cutoff;
  const std::vector<Pattern> samples = sample(chip, job, o.threads);
  write_text_file(o.out, samples_to_text(samples));
  RunManifest m = ctx.manifest(ctx.cmdline);
  m.inputs = {chip_path, job_path};
  m.seed = job.seed;
  m.cutoff = job.total_cutoff;
  m.shots = job.shots;
  m.outputs = {o.out};
  write_manifest(m);
}

// ---------------------------------------------------------------------------
// stats: one statistic table from a sample file.

struct StatsOpts {
  std::string samples, out;
  std::vector<int> nrf_modes;
  int g2_mode = -1;
  bool has_g2 = false, orbits = false, total_photons = false;
};

inline void run_stats(const Context& ctx, const StatsOpts& o) {
  const int selected = (o.nrf_modes.empty() ? 0 : 1) + (o.has_g2 ? 1 : 0) +
                       (o.orbits ? 1 : 0) + (o.total_photons ? 1 : 0);
  require(selected == 1,
          "stats: choose exactly one of --nrf, --g2, --orbits, "
          "--total-photons");
  const std::string samples_path = resolve_input(o.samples);
  const std::vector<Pattern> samples = load_samples(samples_path);
  std::string body;
  if (!o.nrf_modes.empty()) {
    const StatResult r = nrf(samples, o.nrf_modes[0], o.nrf_modes[1]);
    CsvTable t({"statistic", "mode_a", "mode_b", "value", "std_error"});
    t.append_row({"nrf", std::to_string(o.nrf_modes[0]),
                  std::to_string(o.nrf_modes[1]), csv_format(r.value),
                  csv_format(r.std_error)});
    body = t.str();
  } else if (o.has_g2) {
    const StatResult r = g2(samples, o.g2_mode);
    CsvTable t({"statistic", "mode", "value", "std_error"});
    t.append_row({"g2", std::to_string(o.g2_mode), csv_format(r.value),
                  csv_format(r.std_error)});
    body = t.str();
  } else if (o.orbits) {
    const std::vector<OrbitRow> rows = orbit_histogram_sixphoton(samples);
    CsvTable t({"orbit", "n0", "n1", "n2", "n3", "n4", "n5", "n6", "n7",
                "count", "fraction", "std_error"});
    for (const OrbitRow& row : rows) {
      std::vector<std::string> cells{orbit_to_string(row.orbit)};
      for (int v : row.pattern) cells.push_back(std::to_string(v));
      cells.push_back(std::to_string(row.count));
      cells.push_back(csv_format(row.fraction));
      cells.push_back(csv_format(row.std_error));
      t.append_row(cells);
    }
    body = t.str();
  } else {
    if (samples.empty())
      throw ComputationError("stats: no samples in " + samples_path);
    std::map<int, std::uint64_t> counts;
    for (const Pattern& s : samples) ++counts[pattern_total(s)];
    CsvTable t({"n", "count", "fraction"});
    const int max_n = counts.rbegin()->first;
    for (int n = 0; n <= max_n; ++n) {
      const std::uint64_t c = counts.count(n) ? counts.at(n) : 0;
      t.append_row({std::to_string(n), std::to_string(c),
                    csv_format(static_cast<double>(c) / samples.size())});
    }
    body = t.str();
  }
  write_text_file(o.out, body);
  RunManifest m = ctx.manifest(ctx.cmdline);
  m.inputs = {samples_path};
  m.outputs = {o.out};
  write_manifest(m);
}

// ---------------------------------------------------------------------------
// interference: phase sweep on one squeezer pair, NRF traces plus fit.

struct InterferenceOpts {
  std::string chip, out_prefix;
  std::vector<int> pair;
  int n_phis = 40;
  std::uint64_t shots = 400000, seed = 0;
  int threads = 0;
};

inline void run_interference(const Context& ctx, const InterferenceOpts& o) {
  const std::string chip_path = resolve_input(o.chip);
  const ChipSpec chip = load_chip(chip_path);
  require(o.n_phis >= 3, "interference: need at least 3 sweep points");
  const SweepResult sweep =
      interference_sweep(chip, o.pair[0], o.pair[1], default_sweep_phis(o.n_phis),
                         o.shots, o.seed, o.threads);
  CsvTable t({"phi", "nrf_aa", "nrf_bb", "nrf_ab", "nrf_ba", "se_aa", "se_bb",
              "se_ab", "se_ba"});
  for (const SweepPoint& pt : sweep.points) {
    std::vector<std::string> cells{csv_format(pt.phi)};
    for (int k = 0; k < 4; ++k) cells.push_back(csv_format(pt.nrf[k].value));
    for (int k = 0; k < 4; ++k)
      cells.push_back(csv_format(pt.nrf[k].std_error));
    t.append_row(cells);
  }
  Json fit;
  fit["pair_a"] = sweep.mode_k;
  fit["pair_b"] = sweep.mode_l;
  fit["n"] = sweep.fit.n;
  fit["eta"] = sweep.fit.eta;
  fit["phi0"] = sweep.fit.phi0;
  fit["n_err"] = sweep.fit.n_err;
  fit["eta_err"] = sweep.fit.eta_err;
  fit["phi0_err"] = sweep.fit.phi0_err;
  fit["chi2"] = sweep.fit.chi2;
  fit["converged"] = sweep.fit.converged;
  const std::string traces_path = o.out_prefix + "_traces.csv";
  const std::string fit_path = o.out_prefix + "_fit.json";
  write_text_file(traces_path, t.str());
  write_text_file(fit_path, fit.dump(2) + "\n");
  RunManifest m = ctx.manifest(ctx.cmdline);
  m.inputs = {chip_path};
  m.seed = o.seed;
  m.cutoff = kDeviceCutoffCap;
  m.shots = o.shots;
  m.outputs = {traces_path, fit_path};
  write_text_file(o.out_prefix + "_manifest.json",
                  manifest_to_json(m).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// nonclassicality: evaluate the classical-bound witness for a chip.

struct NonclassicalityOpts {
  std::string chip, out;
  double epsilon = 0.0;
};

inline void run_nonclassicality(const Context& ctx,
                                const NonclassicalityOpts& o) {
  const std::string chip_path = resolve_input(o.chip);
  const ChipSpec chip = load_chip(chip_path);
  const TestReport report = passes_test(chip_params_to_test_model(chip), o.epsilon);
  Json j;
  j["epsilon"] = report.epsilon;
  j["lhs"] = report.lhs;
  j["rhs"] = report.rhs;
  j["epsilon0"] = report.epsilon0;
  j["pass"] = report.pass;
  write_text_file(o.out, j.dump(2) + "\n");
  RunManifest m = ctx.manifest(ctx.cmdline);
  m.inputs = {chip_path};
  m.outputs = {o.out};
  write_manifest(m);
}

// ---------------------------------------------------------------------------
// vibronic: Franck-Condon profile of a molecule spec, exact or sampled.

struct VibronicOpts {
  std::string molecule, chip = "chip_default.json", out;
  bool exact = false;
  std::uint64_t shots = 0, seed = 0;
  double bin_width = 100.0, gamma = 100.0;
  int cutoff = kDeviceCutoffCap, threads = 0;
};

inline void run_vibronic(const Context& ctx, const VibronicOpts& o) {
  require(o.exact != (o.shots > 0),
          "vibronic: choose exactly one of --exact or --shots N");
  const std::string molecule_path = resolve_input(o.molecule);
  const std::string chip_path = resolve_input(o.chip);
  const VibronicInput input = load_vibronic(molecule_path);
  const ChipSpec chip = load_chip(chip_path);
  JobSpec job = vibronic_to_job(input).job;
  job.total_cutoff = o.cutoff;
  job.shots = o.shots;
  job.seed = o.seed;
  const FCProfile profile =
      o.exact ? franck_condon_profile_exact(chip, job, input, o.bin_width,
                                            o.threads)
              : franck_condon_profile_sampled(chip, job, input, o.bin_width,
                                              o.threads);
  CsvTable t({"bin", "omega_center", "mass", "std_error", "broadened"});
  for (const auto& [bin, mass] : profile.mass) {
    const double center = (bin + 0.5) * profile.bin_width;
    const double se =
        profile.std_error.count(bin) ? profile.std_error.at(bin) : 0.0;
    t.append_row({std::to_string(bin), csv_format(center), csv_format(mass),
                  csv_format(se), csv_format(profile.broadened(center, o.gamma))});
  }
  write_text_file(o.out, t.str());
  RunManifest m = ctx.manifest(ctx.cmdline);
  m.inputs = {molecule_path, chip_path};
  m.cutoff = o.cutoff;
  if (!o.exact) {
    m.seed = o.seed;
    m.shots = o.shots;
  }
  m.outputs = {o.out};
  write_manifest(m);
}

// ---------------------------------------------------------------------------
// graph: orbit feature vectors for one or more graphs and relabelings.

struct GraphOpts {
  std::vector<std::string> graphs;
  std::vector<std::string> permutations;
  std::string orbits = "1,1,1;1,1,1,1;2,1,1,1";
  std::string chip = "chip_default.json", out;
  bool exact = false;
  std::uint64_t shots = 0, seed = 0;
  int cutoff = 6, threads = 0;
};

inline std::vector<Pattern> parse_orbits(const std::string& text) {
  std::vector<Pattern> orbits;
  std::istringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    Pattern orbit;
    std::istringstream fields(group);
    std::string field;
    while (std::getline(fields, field, ',')) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(field, &used);
      } catch (const std::exception&) {
        throw ValidationError("graph: bad orbit entry \"" + field + "\"");
      }
      require(used == field.size() && v >= 1,
              "graph: orbit entries must be positive integers");
      orbit.push_back(v);
    }
    require(!orbit.empty(), "graph: empty orbit in \"" + text + "\"");
    orbits.push_back(orbit_of(orbit));
  }
  require(!orbits.empty(), "graph: no orbits given");
  return orbits;
}

inline void run_graph(const Context& ctx, const GraphOpts& o) {
  require(o.exact != (o.shots > 0),
          "graph: choose exactly one of --exact or --shots N");
  const std::vector<Pattern> orbits = parse_orbits(o.orbits);
  const std::string chip_path = resolve_input(o.chip);
  const ChipSpec chip = uniformized_chip(load_chip(chip_path));

  std::vector<std::string> graph_paths;
  for (const std::string& g : o.graphs) graph_paths.push_back(resolve_input(g));
  std::vector<std::string> perm_paths;
  for (const std::string& p : o.permutations)
    perm_paths.push_back(resolve_input(p));

  std::vector<std::string> header{"graph", "permutation"};
  for (const Pattern& orbit : orbits)
    header.push_back("p_" + orbit_to_string(orbit));
  for (const Pattern& orbit : orbits)
    header.push_back("se_" + orbit_to_string(orbit));
  CsvTable t(header);

  std::uint64_t row = 0;
  for (const std::string& graph_path : graph_paths) {
    const GraphInput base = load_graph(graph_path);
    for (std::size_t v = 0; v <= perm_paths.size(); ++v, ++row) {
      GraphInput in = base;
      std::string label = "identity";
      if (v > 0) {
        in = permute_graph(base, load_permutation(perm_paths[v - 1]));
        label = file_stem(perm_paths[v - 1]);
      }
      JobSpec job = graph_to_job(in).job;
      job.total_cutoff = o.cutoff;
      std::vector<std::string> cells{file_stem(graph_path), label};
      if (o.exact) {
        const PatternDistribution dist =
            exact_pattern_distribution(chip, job, o.cutoff, o.threads);
        const RVec f = feature_vector(dist, orbits);
        for (int i = 0; i < f.size(); ++i) cells.push_back(csv_format(f(i)));
        for (int i = 0; i < f.size(); ++i) cells.push_back(csv_format(0.0));
      } else {
        job.shots = o.shots;
        job.seed = o.seed + row;
        const SampledFeatureVector f =
            feature_vector(sample(chip, job, o.threads), orbits);
        for (int i = 0; i < f.values.size(); ++i)
          cells.push_back(csv_format(f.values(i)));
        for (int i = 0; i < f.values.size(); ++i)
          cells.push_back(csv_format(f.std_errors(i)));
      }
      t.append_row(cells);
    }
  }
  write_text_file(o.out, t.str());
  RunManifest m = ctx.manifest(ctx.cmdline);
  m.inputs = graph_paths;
  m.inputs.insert(m.inputs.end(), perm_paths.begin(), perm_paths.end());
  m.inputs.push_back(chip_path);
  m.cutoff = o.cutoff;
  if (!o.exact) {
    m.seed = o.seed;
    m.shots = o.shots;
  }
  m.outputs = {o.out};
  write_manifest(m);
}

}  // namespace cli

/// Builds the command tree, parses, runs, and maps failures to exit codes.
inline int run_cli(int argc, char** argv) {
  cli::Context ctx;
  for (int i = 1; i < argc; ++i) {
    if (i > 1) ctx.cmdline += ' ';
    ctx.cmdline += argv[i];
  }

  CLI::App app{"Gaussian boson sampling device simulator and analysis toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto sample_opts = std::make_shared<cli::SampleOpts>();
  CLI::App* c = app.add_subcommand("sample", "Draw detector samples for a job");
  c->add_option("--chip", sample_opts->chip, "Chip spec JSON")->required();
  c->add_option("--job", sample_opts->job, "Job spec JSON")->required();
  c->add_option("-o,--out", sample_opts->out, "Output sample file")->required();
  auto* shots_opt =
      c->add_option("--shots", sample_opts->shots, "Override job shot count");
  auto* seed_opt = c->add_option("--seed", sample_opts->seed, "Override job seed");
  auto* cutoff_opt =
      c->add_option("--cutoff", sample_opts->cutoff, "Override job total cutoff");
  c->add_option("--threads", sample_opts->threads, "Worker threads (0 = auto)");
  c->callback([&ctx, sample_opts, shots_opt, seed_opt, cutoff_opt]() {
    sample_opts->has_shots = shots_opt->count() > 0;
    sample_opts->has_seed = seed_opt->count() > 0;
    sample_opts->has_cutoff = cutoff_opt->count() > 0;
    cli::run_sample(ctx, *sample_opts);
  });

  auto stats_opts = std::make_shared<cli::StatsOpts>();
  c = app.add_subcommand("stats", "Compute statistics from a sample file");
  c->add_option("--samples", stats_opts->samples, "Sample file")->required();
  c->add_option("-o,--out", stats_opts->out, "Output CSV")->required();
  c->add_option("--nrf", stats_opts->nrf_modes,
                "Noise reduction factor for a mode pair")
      ->expected(2);
  auto* g2_opt = c->add_option("--g2", stats_opts->g2_mode,
                               "Unheralded g2 for one mode");
  c->add_flag("--orbits", stats_opts->orbits,
              "Six-photon orbit histogram table");
  c->add_flag("--total-photons", stats_opts->total_photons,
              "Total photon number histogram");
  c->callback([&ctx, stats_opts, g2_opt]() {
    stats_opts->has_g2 = g2_opt->count() > 0;
    cli::run_stats(ctx, *stats_opts);
  });

  auto intf_opts = std::make_shared<cli::InterferenceOpts>();
  c = app.add_subcommand("interference",
                         "Phase sweep with NRF traces and joint fit");
  c->add_option("--chip", intf_opts->chip, "Chip spec JSON")->required();
  c->add_option("--pair", intf_opts->pair, "Two distinct squeezer indices 0..3")
      ->expected(2)
      ->required();
  c->add_option("--n-phis", intf_opts->n_phis, "Number of sweep phases");
  c->add_option("--shots", intf_opts->shots, "Shots per sweep point");
  c->add_option("--seed", intf_opts->seed, "Base seed");
  c->add_option("--threads", intf_opts->threads, "Worker threads (0 = auto)");
  c->add_option("-o,--out-prefix", intf_opts->out_prefix,
                "Output path prefix for _traces.csv and _fit.json")
      ->required();
  c->callback([&ctx, intf_opts]() { cli::run_interference(ctx, *intf_opts); });

  auto ncl_opts = std::make_shared<cli::NonclassicalityOpts>();
  c = app.add_subcommand("nonclassicality",
                         "Classical-bound witness report for a chip");
  c->add_option("--chip", ncl_opts->chip, "Chip spec JSON")->required();
  c->add_option("--epsilon", ncl_opts->epsilon, "Detection threshold epsilon")
      ->required();
  c->add_option("-o,--out", ncl_opts->out, "Output report JSON")->required();
  c->callback([&ctx, ncl_opts]() { cli::run_nonclassicality(ctx, *ncl_opts); });

  auto vib_opts = std::make_shared<cli::VibronicOpts>();
  c = app.add_subcommand("vibronic",
                         "Franck-Condon profile for a molecule spec");
  c->add_option("--molecule", vib_opts->molecule, "Molecule JSON")->required();
  c->add_option("--chip", vib_opts->chip, "Chip spec JSON (loss/noise model)");
  c->add_flag("--exact", vib_opts->exact, "Exact truncated profile");
  c->add_option("--shots", vib_opts->shots, "Sampled profile shot count");
  c->add_option("--seed", vib_opts->seed, "Sampling seed");
  c->add_option("--bin-width", vib_opts->bin_width, "Frequency bin width");
  c->add_option("--gamma", vib_opts->gamma, "Lorentzian broadening width");
  c->add_option("--cutoff", vib_opts->cutoff, "Total photon cutoff");
  c->add_option("--threads", vib_opts->threads, "Worker threads (0 = auto)");
  c->add_option("-o,--out", vib_opts->out, "Output profile CSV")->required();
  c->callback([&ctx, vib_opts]() { cli::run_vibronic(ctx, *vib_opts); });

  auto graph_opts = std::make_shared<cli::GraphOpts>();
  c = app.add_subcommand("graph",
                         "Orbit feature vectors for encoded graphs");
  c->add_option("--graphs", graph_opts->graphs, "Graph JSON file(s)")
      ->required();
  c->add_option("--permutations", graph_opts->permutations,
                "Vertex permutation JSON file(s), applied to every graph");
  c->add_option("--orbits", graph_opts->orbits,
                "Semicolon-separated orbit list, e.g. \"1,1,1;2,1,1,1\"");
  c->add_option("--chip", graph_opts->chip,
                "Chip spec JSON (uniformized before encoding)");
  c->add_flag("--exact", graph_opts->exact, "Exact feature vectors");
  c->add_option("--shots", graph_opts->shots, "Sampled shot count per row");
  c->add_option("--seed", graph_opts->seed, "Base sampling seed");
  c->add_option("--cutoff", graph_opts->cutoff,
                "Total photon cutoff (>= largest orbit total)");
  c->add_option("--threads", graph_opts->threads, "Worker threads (0 = auto)");
  c->add_option("-o,--out", graph_opts->out, "Output feature CSV")->required();
  c->callback([&ctx, graph_opts]() { cli::run_graph(ctx, *graph_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ComputationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace gbsim
