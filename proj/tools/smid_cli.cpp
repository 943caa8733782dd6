#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smid/error.hpp"
#include "smid/harness.hpp"
#include "smid/io.hpp"
#include "smid/observation.hpp"
#include "smid/rng.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string methods;
  std::string out = "out";
  bool timings = false;
};

smid::ExperimentConfig load_config(const Common& c) {
  smid::ExperimentConfig cfg;
  if (!c.config_path.empty()) {
    cfg = smid::Json::parse(smid::read_file(c.config_path)).get<smid::ExperimentConfig>();
  }
  if (c.seed) cfg.seed = *c.seed;
  if (!c.methods.empty()) {
    cfg.methods.clear();
    std::stringstream ss(c.methods);
    std::string name;
    while (std::getline(ss, name, ',')) {
      smid::method_from_name(name);
      cfg.methods.push_back(name);
    }
  }
  return cfg;
}

void add_common(CLI::App* cmd, Common& c, bool with_methods) {
  cmd->add_option("--config", c.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed, overrides the config");
  if (with_methods) cmd->add_option("--methods", c.methods, "comma list of gmm,vgmm,gmm-ae,vgmm-ae,gmm-dnn,vgmm-dnn");
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_flag("--timings", c.timings, "include wall-clock timings in reports");
}

int cmd_gen(const Common& c) {
  const auto cfg = load_config(c);
  const auto model = smid::experiment_model(cfg, cfg.seed);
  const auto data = smid::generate_dataset(model, cfg.n_observations, smid::derive_seed(cfg.seed, 1));
  smid::write_file(fs::path(c.out) / "model.json", smid::dump(smid::Json(model)));
  std::ostringstream csv;
  smid::write_dataset_csv(csv, data);
  smid::write_file(fs::path(c.out) / "dataset.csv", csv.str());
  std::cout << "wrote " << data.size() << " observations of " << data.dim() << " cameras to " << c.out << "\n";
  return 0;
}

int cmd_identify(const Common& c, const std::string& dataset_path, const std::string& method) {
  const auto cfg = load_config(c);
  std::ifstream in(dataset_path);
  if (!in) throw smid::Error(smid::ErrorCode::ParseError, "cannot open " + dataset_path);
  const auto data = smid::read_dataset_csv(in);
  if (static_cast<int>(data.dim()) != cfg.n_cameras && cfg.stim.empty()) {
    std::cerr << "note: dataset has " << data.dim() << " cameras, config says " << cfg.n_cameras << "\n";
  }
  const auto report = smid::identify(data, smid::method_config(cfg, method, cfg.seed));
  smid::write_file(fs::path(c.out) / "report.json", smid::dump(smid::report_json(report, {c.timings})));
  std::cout << method << ": M_hat=" << report.m_hat << " M_hat_eff=" << report.m_hat_eff << "\n";
  return 0;
}

int cmd_single(const Common& c) {
  const auto cfg = load_config(c);
  const auto single = smid::run_single(cfg);
  smid::write_file(fs::path(c.out) / "single.json", smid::dump(smid::single_json(single, {c.timings})));
  const auto table = smid::format_table(single);
  smid::write_file(fs::path(c.out) / "single.txt", table);
  std::cout << table;
  return 0;
}

int cmd_mc(const Common& c, int runs) {
  const auto cfg = load_config(c);
  const auto camp = smid::run_mc(cfg, runs);
  const fs::path out(c.out);
  smid::write_file(out / "campaign.json", smid::dump(smid::campaign_json(camp, {c.timings})));
  std::ostringstream hist;
  smid::write_histogram_csv(hist, camp.aggregates);
  smid::write_file(out / "histograms.csv", hist.str());
  std::ostringstream ecdf;
  smid::write_ecdf_csv(ecdf, camp.aggregates);
  smid::write_file(out / "ecdf.csv", ecdf.str());
  const auto table = smid::format_campaign_table(camp);
  smid::write_file(out / "campaign.txt", table);
  std::cout << table;
  for (const auto& rec : camp.records) {
    if (!rec.error.empty()) std::cerr << "run " << rec.index << " failed: " << rec.error << "\n";
  }
  return 0;
}

int cmd_metrics(const Common& c, const std::string& model_path, const std::string& report_path) {
  const auto cfg = load_config(c);
  const auto model = smid::Json::parse(smid::read_file(model_path)).get<smid::StimulationModel>();
  smid::require_valid(model);
  const auto report = smid::report_from_json(smid::Json::parse(smid::read_file(report_path)));
  const auto metrics = smid::evaluate(model, report, cfg.kl_reading);
  smid::write_file(fs::path(c.out) / "metrics.json", smid::dump(smid::Json(metrics)));
  std::cout << "e_r=" << smid::sig3(metrics.e_r) << " D_KL=" << (metrics.d_kl ? smid::sig3(*metrics.d_kl) : "/")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stimulation-model identification for camera networks"};
  app.require_subcommand(1);

  Common gen_opts, id_opts, single_opts, mc_opts, metrics_opts;
  std::string dataset_path, method = "gmm-ae", model_path, report_path;
  int runs = 50;

  auto* gen = app.add_subcommand("gen", "simulate a dataset from a model or config");
  add_common(gen, gen_opts, false);

  auto* ident = app.add_subcommand("identify", "run one method on a dataset");
  add_common(ident, id_opts, false);
  ident->add_option("--dataset", dataset_path, "dataset CSV")->required()->check(CLI::ExistingFile);
  ident->add_option("--method", method, "identification method")->capture_default_str();

  auto* single = app.add_subcommand("single", "compare methods on one simulated network");
  add_common(single, single_opts, true);

  auto* mc = app.add_subcommand("mc", "Monte Carlo campaign");
  add_common(mc, mc_opts, true);
  mc->add_option("--runs", runs, "number of runs")->check(CLI::PositiveNumber)->capture_default_str();

  auto* met = app.add_subcommand("metrics", "score a report against the true model");
  add_common(met, metrics_opts, false);
  met->add_option("--model", model_path, "true model JSON")->required()->check(CLI::ExistingFile);
  met->add_option("--report", report_path, "identification report JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_opts);
    if (ident->parsed()) return cmd_identify(id_opts, dataset_path, method);
    if (single->parsed()) return cmd_single(single_opts);
    if (mc->parsed()) return cmd_mc(mc_opts, runs);
    if (met->parsed()) return cmd_metrics(metrics_opts, model_path, report_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
