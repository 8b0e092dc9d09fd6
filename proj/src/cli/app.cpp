#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "hoigen/cli/commands.hpp"
#include "hoigen/core/error.hpp"

namespace hoigen::cli {

namespace {

using Command = void (*)(const RunConfig&, std::ostream&);

struct Subcommand {
  const char* name;
  const char* help;
  Command run;
};

const Subcommand kSubcommands[] = {
    {"extract", "extract key actions from motion containers", cmd_extract},
    {"interp", "interpolate key-action sets back to dense motion", cmd_interp},
    {"synth", "generate the synthetic carry-box corpus", cmd_synth},
    {"train", "train or fine-tune the denoiser", cmd_train},
    {"sample", "sample one window per condition", cmd_sample},
    {"genlong", "generate long sequences from overlapping windows", cmd_genlong},
    {"rollout", "run oracle rollouts, tracking metrics and the fine-tuning filter", cmd_rollout},
    {"metrics", "evaluate generated motions against ground truth", cmd_metrics},
    {"report", "render a metrics CSV as a table or CSV", cmd_report},
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hoigen: key-action extraction, interaction diffusion and tracking evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  std::string config_path;
  bool dump = false;
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& s : kSubcommands) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_path, "configuration file of `key = value` lines");
    sub->add_flag("--dump-config", dump, "print the resolved configuration and exit");
    for (const auto& f : config_fields()) sub->add_option("--" + f.name, flags[f.name], f.help);
    subs[s.name] = sub;
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    for (const auto& s : kSubcommands) {
      auto* sub = subs[s.name];
      if (!sub->parsed()) continue;
      RunConfig cfg;
      if (!config_path.empty()) apply_config_file(cfg, config_path);
      apply_environment(cfg);
      for (const auto& f : config_fields())
        if (sub->count("--" + f.name) > 0) f.set(cfg, flags[f.name]);
      if (dump) {
        out << dump_config(cfg);
        return kExitOk;
      }
      s.run(cfg, out);
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace hoigen::cli
