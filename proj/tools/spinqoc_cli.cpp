/* Copyright 2026 The spinqoc Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// spinqoc: optimize | sweep | spectrum | gradcheck
//
// Exit status: 0 success, 1 runtime failure, 2 bad config or arguments,
// 3 gradcheck failed.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinqoc/experiment.hpp"

namespace fs = std::filesystem;
using namespace spinqoc;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int trials = 0;
  int threads = 0;
  std::string variable;
  std::vector<std::string> values;
  std::vector<std::string> methods;
};

ExperimentConfig load(const Overrides& o, CLI::App* sub) {
  ExperimentConfig cfg = o.config.empty() ? parse_config_text("", "<defaults>") : parse_config(o.config);
  if (sub->count("--seed")) cfg.seed = o.seed;
  if (o.trials > 0) cfg.trials = o.trials;
  if (o.threads > 0) cfg.threads = o.threads;
  if (!o.out.empty()) cfg.output_dir = o.out;
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

nlohmann::json campaign_json(const CampaignResult& c, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["method"] = c.label;
  j["config_hash"] = cfg.config_hash;
  j["seed"] = cfg.seed;
  j["trials"] = c.finals.size();
  j["final_true_fidelity"] = c.finals;
  j["mean"] = c.mean;
  j["std"] = c.stddev;
  j["runtime_s"] = c.runtime_s;
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& t : c.trials) iters.push_back(static_cast<int>(t.history.size()) - 1);
  j["iterations"] = iters;
  return j;
}

int cmd_optimize(const ExperimentConfig& cfg) {
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  const CampaignResult c = run_campaign(cfg);
  {
    auto f = open_out(out / "history.jsonl");
    write_campaign_jsonl(f, c, cfg);
  }
  {
    auto f = open_out(out / "history.csv");
    write_campaign_csv(f, c, cfg);
  }
  {
    auto f = open_out(out / "summary.json");
    f << campaign_json(c, cfg).dump(2) << '\n';
  }
  {
    auto f = open_out(out / "convergence.svg");
    f << convergence_svg(c, c.label + " (" + std::to_string(c.finals.size()) + " trials)");
  }
  const auto best = std::max_element(c.trials.begin(), c.trials.end(), [](const auto& a, const auto& b) {
    return a.final_fidelity < b.final_fidelity;
  });
  save_pulse((out / "best_pulse.txt").string(), best->history.back().pulse);
  for (const auto& t : c.trials)
    for (const auto& r : t.history)
      if (!r.warning.empty()) std::cerr << "trial " << t.trial << " iter " << r.index << ": " << r.warning << '\n';
  std::cout << std::fixed << std::setprecision(4) << c.label << ": F = " << c.mean << " +/- " << c.stddev
            << " over " << c.finals.size() << " trials (" << std::setprecision(1) << c.runtime_s << " s) -> "
            << out.string() << '\n';
  return 0;
}

int cmd_sweep(ExperimentConfig cfg, const Overrides& o) {
  if (!o.variable.empty()) cfg.sweep_variable = o.variable;
  if (!o.values.empty()) cfg.sweep_values = o.values;
  if (!o.methods.empty()) cfg.sweep_methods = o.methods;
  if (cfg.sweep_variable.empty()) throw ConfigError(o.config, 0, "sweep.variable", "no sweep variable given");
  if (cfg.sweep_values.empty()) throw ConfigError(o.config, 0, "sweep.values", "sweep needs at least one value");
  for (const auto& v : cfg.sweep_values) {
    ExperimentConfig probe = cfg;
    try {
      apply_sweep_value(probe, cfg.sweep_variable, v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(o.config, 0, "sweep.values", e.what());
    }
  }
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  const SweepTable t = run_sweep(cfg);
  {
    auto f = open_out(out / "sweep.csv");
    write_sweep_csv(f, t, cfg);
  }
  nlohmann::json j;
  j["variable"] = t.variable;
  j["config_hash"] = cfg.config_hash;
  j["cells"] = nlohmann::json::array();
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (const auto& c : t.cells[i]) {
      auto cj = campaign_json(c, cfg);
      cj["value"] = t.rows[i];
      j["cells"].push_back(cj);
    }
  {
    auto f = open_out(out / "sweep.json");
    f << j.dump(2) << '\n';
  }
  std::cout << format_sweep_table(t);
  return 0;
}

int cmd_spectrum(const ExperimentConfig& cfg) {
  std::cout << spectrum_report(cfg.truth);
  return 0;
}

int cmd_gradcheck(const ExperimentConfig& cfg, int pulses) {
  const GradcheckReport r = run_gradcheck(cfg, pulses);
  for (const auto& l : r.lines) std::cout << l << '\n';
  std::cout << (r.passed ? "gradcheck passed\n" : "gradcheck FAILED\n");
  return r.passed ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop pulse optimization on an emulated electron-nuclear spectrometer"};
  app.require_subcommand(1);
  Overrides o;
  int pulses = 10;

  auto common = [&](CLI::App* s, bool need_config) {
    auto* c = s->add_option("-c,--config", o.config, "INI experiment config");
    if (need_config) c->required();
    c->check(CLI::ExistingFile);
    s->add_option("-o,--out", o.out, "output directory (overrides run.output_dir)");
    s->add_option("--seed", o.seed, "master seed (overrides run.seed)");
    s->add_option("--trials", o.trials, "trials per campaign")->check(CLI::PositiveNumber);
    s->add_option("--threads", o.threads, "worker threads for trials")->check(CLI::PositiveNumber);
  };
  auto* opt = app.add_subcommand("optimize", "run one optimization campaign");
  common(opt, true);
  auto* sweep = app.add_subcommand("sweep", "run campaigns over a sweep variable and methods");
  common(sweep, true);
  sweep->add_option("--var", o.variable, "sigma | transfer_fwhm | method | basis");
  sweep->add_option("--values", o.values, "comma-separated values")->delimiter(',');
  sweep->add_option("--methods", o.methods, "comma-separated method labels")->delimiter(',');
  auto* spec = app.add_subcommand("spectrum", "print levels and allowed electron lines");
  common(spec, false);
  auto* grad = app.add_subcommand("gradcheck", "compare gradient estimators on random pulses");
  common(grad, false);
  grad->add_option("--pulses", pulses, "number of random pulses")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*opt) return cmd_optimize(load(o, opt));
    if (*sweep) return cmd_sweep(load(o, sweep), o);
    if (*spec) return cmd_spectrum(load(o, spec));
    if (*grad) return cmd_gradcheck(load(o, grad), pulses);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
