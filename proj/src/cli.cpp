#include "pitsim/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pitsim/analysis.hpp"
#include "pitsim/branching.hpp"
#include "pitsim/errors.hpp"

#ifndef PITSIM_BUILD_TAG
#define PITSIM_BUILD_TAG "unknown"
#endif

namespace pitsim {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kInvariantTol = 1e-9;

Json real(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

std::string csv_preamble(const Scenario& s) { return "# scenario " + s.hash() + "\n"; }

Json scenario_echo(const Scenario& s) {
  Json out = Json::object();
  std::istringstream in(s.to_text());
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

const char* kind_name(EventKind k) {
  switch (k) {
    case EventKind::Immigration: return "immigration";
    case EventKind::ResidentChange: return "resident_change";
    case EventKind::Extinction: return "extinction";
  }
  return "?";
}

constexpr const char* kEventsHeader =
    "replicate,time,kind,trajectory_id,v_star_or_slope,resident_id,fitness,solitary\n";

void append_events(std::string& out, std::size_t replicate, const PitSystem& sys) {
  char buf[256];
  for (const auto& ev : sys.log()) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%s,%lld,%.17g,%lld,%.17g,%d\n", replicate, ev.time,
                  kind_name(ev.kind), static_cast<long long>(ev.trajectory_id), ev.value,
                  static_cast<long long>(ev.resident_id), ev.fitness, ev.solitary() ? 1 : 0);
    out += buf;
  }
}

void append_trajectories(std::string& out, std::size_t replicate, const PitSystem& sys,
                         const std::string& hash) {
  for (const auto& tr : sys.trajectories()) {
    Json segs = Json::array();
    for (const auto& seg : tr.segments) segs.push_back({seg.start_time, seg.start_height, seg.slope});
    Json row;
    row["replicate"] = replicate;
    row["id"] = tr.id;
    row["parent"] = tr.parent ? Json(*tr.parent) : Json(nullptr);
    row["birth"] = tr.birth_time;
    row["fitness"] = tr.fitness;
    row["increment"] = tr.increment;
    row["segments"] = std::move(segs);
    row["extinction"] = real(tr.extinction_time);
    row["scenario_hash"] = hash;
    out += row.dump() + "\n";
  }
}

Json fixation_json(const FixationReport& rep) {
  return {{"resident", rep.ids(&FixationFlags::resident).size()},
          {"solitary", rep.ids(&FixationFlags::solitary).size()},
          {"ancestral", rep.ids(&FixationFlags::ancestral).size()},
          {"final", rep.ids(&FixationFlags::final).size()},
          {"lattice_holds", rep.lattice_holds()}};
}

struct PitCheck {
  Json json;
  bool ok = true;
};

PitCheck check_pit(const PitSystem& sys, Rng rng) {
  const double f = sys.resident_fitness();
  const double kink_error = std::abs(f - sys.f0() - sys.sum_of_kinks());
  const double coupling = slope_coupling_violation(sys, rng, 8);
  const double excess = fitness_bound_excess(sys);
  const auto fixation = classify_fixation(sys);
  const double scale = std::max(1.0, std::abs(f));
  PitCheck out;
  out.ok = kink_error <= kInvariantTol * scale && coupling <= kInvariantTol * scale &&
           excess <= kInvariantTol * scale && fixation.lattice_holds();
  out.json = {{"sum_of_kinks_error", kink_error},
              {"slope_coupling_violation", coupling},
              {"fitness_bound_excess", excess},
              {"fixation", fixation_json(fixation)},
              {"ok", out.ok}};
  return out;
}

ContenderLaw law_of(const Scenario& s) {
  return s.input == "contenders" ? ContenderLaw::direct(s.lambda, s.gamma) : contender_params(s.lambda, s.gamma);
}

PitSystem fresh_pit(const Scenario& s, Rng rng, PitOptions opts) {
  if (s.input == "contenders") return PitSystem::contenders(law_of(s), rng, opts);
  return PitSystem::poisson(s.lambda, s.gamma, rng, opts);
}

// Streams for invariant checkers are kept apart from the simulation streams.
Rng checker_stream(const Scenario& s, std::size_t r) { return Rng::stream(~s.seed, r); }

struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;
  Json results;
  bool invariants_ok = true;
};

Artifacts cmd_pit_run(const Scenario& s) {
  auto systems = run_replicates(
      s.replicates,
      [&](std::size_t r) {
        auto sys = fresh_pit(s, Rng::stream(s.seed, r), {});
        sys.advance(s.horizon);
        return std::make_shared<PitSystem>(std::move(sys));
      },
      s.threads);
  Artifacts a;
  std::string events = csv_preamble(s) + kEventsHeader;
  std::string trajectories;
  Json reps = Json::array();
  for (std::size_t r = 0; r < systems.size(); ++r) {
    const auto& sys = *systems[r];
    append_events(events, r, sys);
    append_trajectories(trajectories, r, sys, s.hash());
    auto check = check_pit(sys, checker_stream(s, r));
    a.invariants_ok = a.invariants_ok && check.ok;
    reps.push_back({{"replicate", r},
                    {"final_fitness", sys.resident_fitness()},
                    {"fitness_per_time", sys.resident_fitness() / s.horizon},
                    {"events", sys.log().size()},
                    {"solitary_changes", sys.solitary_count()},
                    {"trajectories", sys.trajectories().size()},
                    {"invariants", std::move(check.json)}});
  }
  a.files = {{"events.csv", std::move(events)}, {"trajectories.jsonl", std::move(trajectories)}};
  a.results = {{"replicates", std::move(reps)}};
  return a;
}

Artifacts cmd_pit_replay(const Scenario& s) {
  auto sys = PitSystem::replay(s.start, s.immigration(), s.f0);
  sys.advance(s.horizon);
  Artifacts a;
  std::string events = csv_preamble(s) + kEventsHeader;
  append_events(events, 0, sys);
  std::string trajectories;
  append_trajectories(trajectories, 0, sys, s.hash());

  Json changes = Json::array();
  for (const auto& ev : sys.log()) {
    if (ev.kind != EventKind::ResidentChange) continue;
    changes.push_back({{"time", ev.time},
                       {"resident", ev.resident_id},
                       {"v_star", ev.value},
                       {"fitness", ev.fitness},
                       {"solitary", ev.solitary()}});
  }
  const auto renewals = detect_renewals(sys.log(), s.f0, sys.starts_in_bottleneck());
  Json parents = sys.genealogy().parents();
  auto check = check_pit(sys, checker_stream(s, 0));
  a.invariants_ok = check.ok;
  a.files = {{"events.csv", std::move(events)}, {"trajectories.jsonl", std::move(trajectories)}};
  a.results = {{"final_fitness", sys.resident_fitness()},
               {"resident_changes", std::move(changes)},
               {"renewal_times", renewals.times},
               {"parents", std::move(parents)},
               {"invariants", std::move(check.json)}};
  return a;
}

void append_trace(std::string& out, std::size_t replicate, const MoranRun& run) {
  const double L = run.final_state.log_n;
  char buf[200];
  for (const auto& smp : run.trace) {
    for (const auto& [id, n] : smp.counts) {
      const double h = std::min(1.0, std::log1p(static_cast<double>(n)) / L);
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%lld,%lld,%.17g,%.17g\n", replicate, smp.time,
                    static_cast<long long>(id), static_cast<long long>(n), h, smp.mean_fitness);
      out += buf;
    }
  }
}

void append_genealogy(std::string& out, std::size_t replicate, const MoranRun& run, const std::string& hash) {
  const auto& st = run.final_state;
  for (std::size_t id = 0; id < st.type_count(); ++id) {
    Json row;
    row["replicate"] = replicate;
    row["id"] = id;
    row["parent"] = id == 0 ? Json(nullptr) : Json(st.parents[id]);
    double birth = 0.0;
    Json contender = nullptr;
    if (id >= st.initial_types) {
      const auto& ind = run.indicators.at(id - st.initial_types);
      birth = ind.birth;
      if (ind.evaluated) contender = ind.contender;
    }
    row["birth"] = birth;
    row["fitness"] = st.fitness[id];
    row["segments"] = Json::array();
    row["contender"] = contender;
    row["scenario_hash"] = hash;
    out += row.dump() + "\n";
  }
}

constexpr const char* kTraceHeader = "replicate,time,type_id,count,H,mean_fitness\n";

Artifacts cmd_moran_run(const Scenario& s) {
  MoranRunOptions opts;
  opts.horizon = s.horizon;
  opts.grid_step = s.grid_step;
  opts.lambda = s.lambda;
  opts.gamma = s.gamma;
  auto runs = run_replicates(
      s.replicates,
      [&](std::size_t r) {
        Rng rng = Rng::stream(s.seed, r);
        return moran_run(moran_init(s.population, {s.population}, {0.0}), opts, rng);
      },
      s.threads);
  Artifacts a;
  std::string trace = csv_preamble(s) + kTraceHeader;
  std::string genealogy;
  Json reps = Json::array();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    append_trace(trace, r, run);
    append_genealogy(genealogy, r, run, s.hash());
    std::size_t contenders = 0;
    for (const auto& ind : run.indicators) contenders += ind.evaluated && ind.contender;
    const double m = mean_fitness(run.final_state);
    reps.push_back({{"replicate", r},
                    {"final_mean_fitness", m},
                    {"mean_fitness_per_time", m / s.horizon},
                    {"mutations", run.final_state.mutation_count},
                    {"contenders", contenders},
                    {"live_types", run.final_state.live.size()},
                    {"genealogy_is_tree", run.final_state.genealogy().is_tree_rooted_at_zero(
                                              run.final_state.type_count() - 1)}});
  }
  a.files = {{"trace.csv", std::move(trace)}, {"genealogy.jsonl", std::move(genealogy)}};
  a.results = {{"replicates", std::move(reps)}};
  return a;
}

Artifacts cmd_couple(const Scenario& s) {
  const auto schedule = s.immigration();
  if (schedule.empty()) throw ConfigError("immigration.times: couple needs a mutation schedule");
  auto runs = run_replicates(
      s.replicates,
      [&](std::size_t r) {
        Rng rng = Rng::stream(s.seed, r);
        return std::make_shared<CoupledRun>(couple_run(s.population, schedule, s.horizon, s.grid_step, rng));
      },
      s.threads);
  Artifacts a;
  std::string events = csv_preamble(s) + kEventsHeader;
  std::string trace = csv_preamble(s) + kTraceHeader;
  Json reps = Json::array();
  std::vector<double> sups, fits;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& c = *runs[r];
    append_events(events, r, c.pit);
    append_trace(trace, r, c.moran);
    Json flags = Json::array();
    for (const auto& ind : c.moran.indicators) flags.push_back(ind.evaluated ? Json(ind.contender) : Json(nullptr));
    sups.push_back(c.sup_distance);
    fits.push_back(c.fitness_distance);
    reps.push_back({{"replicate", r},
                    {"sup_distance", c.sup_distance},
                    {"fitness_distance", c.fitness_distance},
                    {"contender_flags", std::move(flags)}});
  }
  a.files = {{"events.csv", std::move(events)}, {"trace.csv", std::move(trace)}};
  a.results = {{"median_sup_distance", median(sups)},
               {"median_fitness_distance", median(fits)},
               {"replicates", std::move(reps)}};
  return a;
}

Json speed_json(const SpeedEstimate& e) {
  return {{"v_hat", e.v_hat}, {"std_error", e.std_error}, {"n_cycles", e.n_cycles}, {"sigma2_hat", e.sigma2_hat}};
}

Artifacts cmd_speed(const Scenario& s) {
  auto renewals = run_replicates(
      s.replicates,
      [&](std::size_t r) {
        return simulate_renewals(fresh_pit(s, Rng::stream(s.seed, r), {.record_paths = false, .check_invariants = false}),
                                 s.cycles);
      },
      s.threads);
  Artifacts a;
  std::string csv = csv_preamble(s) + "replicate,cycle,length,reward\n";
  std::vector<RenewalRecord> pooled;
  Json reps = Json::array();
  char buf[128];
  for (std::size_t r = 0; r < renewals.size(); ++r) {
    const auto& rec = renewals[r].records;
    for (std::size_t k = 0; k < rec.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", r, k + 1, rec[k].length, rec[k].reward);
      csv += buf;
    }
    pooled.insert(pooled.end(), rec.begin(), rec.end());
    Json row = speed_json(speed_estimate(rec));
    row["replicate"] = r;
    reps.push_back(std::move(row));
  }
  a.files = {{"renewals.csv", std::move(csv)}};
  a.results = speed_json(speed_estimate(pooled));
  if (s.gamma.kind() == IncrementDistribution::Kind::PointMass && s.input == "limit")
    a.results["closed_form"] = point_mass_speed(s.lambda, s.gamma.params().at(0));
  a.results["replicates"] = std::move(reps);
  return a;
}

Artifacts cmd_heuristics(const Scenario& s) {
  const auto law = law_of(s);
  Artifacts a;
  a.results = {{"lambda_star", law.rate()},
               {"contender_law", law.describe()},
               {"v_GL", glh_speed(law)},
               {"v_rGL", rglh_speed(law)}};
  if (s.input == "limit") a.results["thinning_factor"] = thinning_factor(s.gamma);
  return a;
}

Artifacts cmd_gw(const Scenario& s) {
  const GwParams params{s.gw_birth, s.gw_death, s.gw_initial};
  GwOptions opts;
  opts.horizon = s.horizon;
  opts.cap = s.gw_cap;
  auto paths = run_replicates(
      s.replicates,
      [&](std::size_t r) {
        Rng rng = Rng::stream(s.seed, r);
        return gw_run(params, opts, rng);
      },
      s.threads);
  std::size_t extinct = 0, escaped = 0, horizon = 0;
  for (const auto& p : paths) {
    extinct += p.outcome == GwPath::Outcome::Extinct;
    escaped += p.outcome == GwPath::Outcome::Escaped;
    horizon += p.outcome == GwPath::Outcome::Horizon;
  }
  const double n = static_cast<double>(paths.size());
  const double freq = static_cast<double>(escaped + horizon) / n;
  Artifacts a;
  a.files = {{"gw.csv", csv_preamble(s) + gw_summary_csv(params, paths)}};
  a.results = {{"extinct", extinct},
               {"escaped", escaped},
               {"horizon", horizon},
               {"survival_frequency", freq},
               {"binomial_std_error", std::sqrt(freq * (1.0 - freq) / n)}};
  if (s.gw_birth > s.gw_death) a.results["survival_formula"] = gw_survival_formula(s.gw_birth, s.gw_death, s.gw_initial);
  return a;
}

Artifacts cmd_fclt(const Scenario& s) {
  double v = s.fclt_v.value_or(0.0);
  double sigma2 = s.fclt_sigma2.value_or(0.0);
  Json pilot = nullptr;
  if (!s.fclt_v || !s.fclt_sigma2) {
    // The pilot uses the stream right after the ensemble streams.
    const auto est = speed_estimate(
        simulate_renewals(PitSystem::poisson(s.lambda, s.gamma, Rng::stream(s.seed, s.replicates),
                                             {.record_paths = false, .check_invariants = false}),
                          s.cycles)
            .records);
    if (!s.fclt_v) v = est.v_hat;
    if (!s.fclt_sigma2) sigma2 = est.sigma2_hat;
    pilot = speed_json(est);
  }
  const auto rep = fclt_diagnostic(s.lambda, s.gamma, s.fclt_n, s.fclt_times, s.replicates, v, sigma2, s.seed,
                                   s.threads);
  std::string csv = csv_preamble(s) + "run,time,value\n";
  char buf[128];
  for (std::size_t r = 0; r < rep.runs; ++r) {
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r, rep.times[k], rep.samples[k][r]);
      csv += buf;
    }
  }
  Artifacts a;
  a.files = {{"fclt.csv", std::move(csv)}};
  a.results = {{"n", rep.n},
               {"v", v},
               {"sigma2", sigma2},
               {"pilot", std::move(pilot)},
               {"times", rep.times},
               {"variance", rep.variance},
               {"mean", rep.mean},
               {"lag_correlation", rep.lag_correlation},
               {"runs", rep.runs},
               {"low_n", rep.low_n}};
  return a;
}

Artifacts dispatch(const Scenario& s) {
  switch (s.command) {
    case Command::PitRun: return cmd_pit_run(s);
    case Command::PitReplay: return cmd_pit_replay(s);
    case Command::MoranRun: return cmd_moran_run(s);
    case Command::Couple: return cmd_couple(s);
    case Command::Speed: return cmd_speed(s);
    case Command::Heuristics: return cmd_heuristics(s);
    case Command::Gw: return cmd_gw(s);
    case Command::Fclt: return cmd_fclt(s);
  }
  throw ConfigError("command: not handled");
}

}  // namespace

std::string build_tag() { return PITSIM_BUILD_TAG; }

fs::path output_directory(const Scenario& scenario) {
  if (!scenario.out.empty()) return scenario.out;
  if (const char* env = std::getenv("PITSIM_OUT_DIR"); env && *env) return env;
  return "pitsim_out";
}

int run_scenario(const Scenario& s, const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  Artifacts a = dispatch(s);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(dir);
  for (const auto& [name, text] : a.files) write_file(dir / name, text);
  Json summary;
  summary["command"] = std::string(command_name(s.command));
  summary["scenario_hash"] = s.hash();
  summary["seed"] = s.seed;
  summary["build_tag"] = build_tag();
  summary["wall_time_seconds"] = wall;
  summary["invariants_ok"] = a.invariants_ok;
  summary["scenario"] = scenario_echo(s);
  summary["results"] = std::move(a.results);
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  return a.invariants_ok ? kExitOk : kExitInvariant;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Simulator for Poissonian interacting trajectories and their Moran prelimit"};
  std::string command, config, out;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> overrides;
  bool print_config = false;

  app.add_option("command", command, "pit-run | pit-replay | moran-run | couple | speed | heuristics | gw | fclt");
  app.add_option("--config", config, "Scenario file (key = value per line)");
  // Flags map onto scenario keys and override the file.
  const std::pair<const char*, const char*> flag_keys[] = {
      {"--seed", "seed"},       {"--replicates", "replicates"}, {"--horizon", "horizon"},
      {"--grid-step", "grid_step"}, {"--lambda", "lambda"},     {"--gamma", "gamma"},
      {"--N", "N"},             {"--cycles", "cycles"},         {"--threads", "threads"},
      {"--input", "input"}};
  std::vector<std::string> flag_values(std::size(flag_keys));
  std::vector<CLI::Option*> flag_opts;
  for (std::size_t k = 0; k < std::size(flag_keys); ++k)
    flag_opts.push_back(app.add_option(flag_keys[k].first, flag_values[k], std::string("Sets ") + flag_keys[k].second));
  app.add_option("--out", out, "Output directory (default $PITSIM_OUT_DIR or ./pitsim_out)");
  app.add_option("--set", sets, "Any scenario key as key=value; repeatable");
  app.add_flag("--print-config", print_config, "Print the resolved scenario and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    Scenario s = config.empty() ? Scenario{} : load_scenario(config);
    if (!command.empty()) s.command = parse_command(command);
    else if (config.empty()) throw ConfigError("command: missing (give it as the first argument or in --config)");
    for (std::size_t k = 0; k < flag_opts.size(); ++k)
      if (flag_opts[k]->count()) s.set(flag_keys[k].second, flag_values[k]);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      s.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!out.empty()) s.out = out;
    s.validate();
    if (print_config) {
      std::cout << s.to_text();
      return kExitOk;
    }
    const auto dir = output_directory(s);
    const int code = run_scenario(s, dir);
    std::cerr << "pitsim: " << command_name(s.command) << " done, scenario " << s.hash() << ", output in "
              << dir.string() << "\n";
    if (code == kExitInvariant) std::cerr << "pitsim: invariant check failed, see summary.json\n";
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "pitsim: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvariantError& e) {
    std::cerr << "pitsim: invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "pitsim: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> storage{"pitsim"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : storage) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run_cli(static_cast<int>(storage.size()), argv.data());
}

}  // namespace pitsim
