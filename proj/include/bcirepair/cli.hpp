#pragma once

// Subcommands behind the bcirepair executable. Exit codes: 0 success,
// 1 configuration or usage error, 2 runtime error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcirepair/config.hpp"
#include "bcirepair/datamodel.hpp"
#include "bcirepair/evaluation.hpp"
#include "bcirepair/localization.hpp"
#include "bcirepair/oracles.hpp"
#include "bcirepair/slicing.hpp"
#include "bcirepair/synthgen.hpp"

namespace bcirepair {

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string trial_dir(std::size_t trial) {
  std::ostringstream os;
  os << "trial_" << std::setw(2) << std::setfill('0') << trial;
  return os.str();
}

}  // namespace detail

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> parallel_trials;
  std::optional<std::vector<std::string>> strategies;
};

/// Reads the config document and applies command-line overrides before
/// validation, so an overridden seed also reaches scenario defaults.
inline RunConfig load_with_overrides(const std::string& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.out) j["output_dir"] = *ov.out;
  if (ov.parallel_trials) j["parallel_trials"] = *ov.parallel_trials;
  if (ov.strategies) {
    if (!j.contains("acquisition")) j["acquisition"] = nlohmann::json::object();
    if (j["acquisition"].is_object()) j["acquisition"]["strategies"] = *ov.strategies;
  }
  return parse_run_config(j);
}

/// Writes dataset.csv and manifest.json for a synthetic source. Returns the
/// manifest.
inline nlohmann::json cmd_generate(const RunConfig& rc) {
  if (std::holds_alternative<CsvSource>(rc.source)) throw ConfigError("generate needs a synthetic dataset source");
  const std::filesystem::path dir(rc.output_dir);
  Dataset ds;
  nlohmann::json artifacts = nlohmann::json::array();
  std::uint64_t seed = 0;
  if (const auto* d = std::get_if<DiscreteScenario>(&rc.source)) {
    auto gen = gen_discrete(*d);
    ds = std::move(gen.dataset);
    for (const auto& a : gen.artifacts)
      artifacts.push_back({{"start", a.start}, {"length", a.length}, {"kind", a.hyper ? "hyper" : "hypo"}});
    seed = d->seed;
  } else {
    const auto& c = std::get<ContinuousScenario>(rc.source);
    ds = gen_continuous(c);
    seed = c.seed;
  }
  std::ostringstream csv;
  write_csv(csv, ds);
  const std::string bytes = csv.str();
  detail::write_file(dir / "dataset.csv", bytes);

  nlohmann::json manifest = {{"file", "dataset.csv"},
                             {"kind", to_string(ds.kind)},
                             {"seed", seed},
                             {"length", ds.samples.size()},
                             {"feature_dim", ds.feature_dim()},
                             {"checksum", "fnv1a64:" + hex64(fnv1a64(bytes))},
                             {"parameters", rc.raw.at("dataset")}};
  if (ds.kind == LabelKind::Discrete) {
    manifest["states"] = ds.states;
    manifest["artifact_segments"] = artifacts;
  }
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

/// Runs the experiment and writes experiment.json plus, when enabled, the
/// event/correction/localization sidecars.
inline ExperimentReport cmd_run(RunConfig rc) {
  load_dataset(rc);
  rc.experiment.keep_sidecars = rc.write_sidecars;
  ExperimentReport rep = run_trials(rc.experiment);
  const std::filesystem::path dir(rc.output_dir);
  detail::write_file(dir / "experiment.json", to_json(rep).dump(2) + "\n");
  if (!rc.write_sidecars) return rep;

  const auto& states = rc.experiment.dataset.states;
  std::ostringstream events, corrections;
  nlohmann::json localization = nlohmann::json::array();
  for (const TrialReport& t : rep.trials) {
    if (t.error) continue;
    std::ostringstream tev, tcorr, tslices;
    for (const FaultEvent& e : t.observe_events) {
      auto j = to_json(e);
      tev << j.dump() << '\n';
      j["trial"] = t.trial;
      events << j.dump() << '\n';
    }
    for (const CorrectionRecord& c : t.correction_records) {
      auto j = to_json(c, states);
      tcorr << j.dump() << '\n';
      j["trial"] = t.trial;
      corrections << j.dump() << '\n';
    }
    write_slices_csv(tslices, t.slices);
    const auto td = dir / detail::trial_dir(t.trial);
    detail::write_file(td / "events.jsonl", tev.str());
    detail::write_file(td / "corrections.jsonl", tcorr.str());
    detail::write_file(td / "slices.csv", tslices.str());
    auto lj = to_json(t.localization);
    lj["trial"] = t.trial;
    localization.push_back(lj);
  }
  detail::write_file(dir / "events.jsonl", events.str());
  detail::write_file(dir / "corrections.jsonl", corrections.str());
  detail::write_file(dir / "localization.json", nlohmann::json{{"trials", localization}}.dump(2) + "\n");
  return rep;
}

/// Localization from an events JSONL file and a slices CSV file: one table
/// and test per (fault type, family). Families keep their order of first
/// appearance; rows keep the order in which labels first appear.
inline LocalizationReport localize_files(std::istream& events_in, std::istream& slices_in) {
  const auto events = read_events_jsonl(events_in);
  const auto slices = read_slices_csv(slices_in);
  std::vector<FamilyLabels> families;
  for (const auto& a : slices) {
    auto it = std::find_if(families.begin(), families.end(), [&](const FamilyLabels& f) { return f.id == a.family; });
    if (it == families.end()) {
      families.push_back({a.family, {}});
      it = families.end() - 1;
    }
    if (std::find(it->row_order.begin(), it->row_order.end(), a.label) == it->row_order.end())
      it->row_order.push_back(a.label);
  }
  if (families.empty()) throw Error("slices file has no assignments");
  const std::size_t n = family_labels(slices, families.front().id).size();
  for (const auto& f : families)
    if (family_labels(slices, f.id).size() != n) throw Error("slice families cover different stream lengths");
  const std::vector<FaultType> types(kAllFaultTypes.begin(), kAllFaultTypes.end());
  return localize(events, slices, families, types, n);
}

inline nlohmann::json cmd_localize(const std::string& events_path, const std::string& slices_path,
                                   const std::string& out_dir) {
  std::ifstream ev(events_path);
  if (!ev) throw Error("cannot open events file '" + events_path + "'");
  std::ifstream sl(slices_path);
  if (!sl) throw Error("cannot open slices file '" + slices_path + "'");
  const auto rep = localize_files(ev, sl);
  const nlohmann::json j = to_json(rep);
  detail::write_file(std::filesystem::path(out_dir) / "localization.json", j.dump(2) + "\n");
  return j;
}

/// Entry point of the executable; returns the process exit code.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Fault detection, localization and repair for streaming decoders"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t parallel = 1;
  std::vector<std::string> strategies;

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset CSV and manifest");
  auto* run = app.add_subcommand("run", "run the configured experiment");
  auto* loc = app.add_subcommand("localize", "chi-square localization from events and slices files");
  for (auto* sc : {gen, run}) {
    sc->add_option("--config", config_path, "run configuration (JSON)")->required();
    sc->add_option("--seed", seed, "override the master seed");
    sc->add_option("--out", out_dir, "override the output directory");
  }
  run->add_option("--parallel-trials", parallel, "trials to run concurrently")->check(CLI::PositiveNumber);
  run->add_option("--strategies", strategies, "override acquisition strategies")->delimiter(',');
  std::string events_path, slices_path, loc_out = ".";
  loc->add_option("--events", events_path, "fault events (JSON lines)")->required();
  loc->add_option("--slices", slices_path, "slice assignments (CSV)")->required();
  loc->add_option("--out", loc_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  const auto opt_set = [](CLI::App* sc, const char* name) { return sc->count(name) > 0; };
  try {
    if (*loc) {
      cmd_localize(events_path, slices_path, loc_out);
      out << "wrote " << (std::filesystem::path(loc_out) / "localization.json").string() << "\n";
      return 0;
    }
    CLI::App* sc = *gen ? gen : run;
    if (opt_set(sc, "--seed")) ov.seed = seed;
    if (opt_set(sc, "--out")) ov.out = out_dir;
    if (sc == run && opt_set(run, "--parallel-trials")) ov.parallel_trials = parallel;
    if (sc == run && opt_set(run, "--strategies")) ov.strategies = strategies;
    RunConfig rc = load_with_overrides(config_path, ov);
    if (sc == gen) {
      const auto m = cmd_generate(rc);
      out << "wrote " << m.at("length").get<std::size_t>() << " samples to " << rc.output_dir << "/dataset.csv\n";
      return 0;
    }
    const auto rep = cmd_run(rc);
    std::size_t failed = 0;
    for (const auto& t : rep.trials)
      if (t.error) {
        ++failed;
        err << "trial " << t.trial << " failed: " << *t.error << "\n";
      }
    out << "ran " << rep.trials.size() << " trials (" << failed << " failed); report in " << rc.output_dir
        << "/experiment.json\n";
    return failed == rep.trials.size() ? 2 : 0;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace bcirepair
