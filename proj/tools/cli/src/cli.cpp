#include "melada_cli/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "melada/adaptation/adaptation.hpp"
#include "melada/data/meld_io.hpp"
#include "melada/data/synthetic.hpp"
#include "melada/error.hpp"
#include "melada/model/checkpoint.hpp"
#include "melada/selfcheck.hpp"
#include "melada/signal/features.hpp"
#include "melada/training/trainer.hpp"
#include "melada/util/binary.hpp"
#include "melada_cli/settings.hpp"

#ifndef MELADA_VERSION
#define MELADA_VERSION "0.0.0"
#endif

namespace melada::cli {

namespace {

namespace fs = std::filesystem;

/// Raised for bad option values found after CLI11 parsing.
struct UsageError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto log = std::make_shared<spdlog::logger>("melada", sink);
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::info);
  if (const char* env = std::getenv("MELADA_LOG")) {
    const std::string level(env);
    if (level == "error") {
      log->set_level(spdlog::level::err);
    } else if (level == "debug") {
      log->set_level(spdlog::level::debug);
    } else if (level != "info") {
      log->warn("MELADA_LOG='{}' not recognised (error, info, debug); using info", level);
    }
  }
  return log;
}

/// Options shared by every subcommand: config file, preset and one flag per
/// setting key.
struct CommonOptions {
  std::string config;
  std::map<std::string, std::string> values;

  void attach(CLI::App& sub) {
    sub.add_option("--config", config, "key=value settings file (flags override it)");
    for (const auto& key : setting_keys()) {
      std::string names = "--" + key;
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key) names += ",--" + dashed;
      sub.add_option(names, values[key], fmt::format("setting '{}'", key));
    }
  }

  Settings resolve(const CLI::App& sub) const {
    std::vector<std::pair<std::string, std::string>> file;
    if (!config.empty()) file = read_config_file(config);
    std::string preset_name = "desk";
    for (const auto& [k, v] : file) {
      if (k == "preset") preset_name = v;
    }
    const auto given = [&](const std::string& key) {
      return sub.get_option("--" + key)->count() > 0;
    };
    if (given("preset")) preset_name = values.at("preset");
    Settings s = preset(preset_name);
    for (const auto& [k, v] : file) {
      if (k != "preset") apply_setting(s, k, v);
    }
    for (const auto& key : setting_keys()) {
      if (key != "preset" && given(key)) apply_setting(s, key, values.at(key));
    }
    return s;
  }
};

void log_settings(spdlog::logger& log, const Settings& s) {
  log.info("resolved configuration:");
  const std::string all = describe(s);
  for (std::string_view text = all; !text.empty();) {
    const auto nl = text.find('\n');
    log.info("  {}", text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
  }
}

std::vector<data::Domain> load(const std::string& path, spdlog::logger& log) {
  auto domains = data::read_dataset(path);
  data::validate_dataset(domains);
  log.info("loaded {} domain(s) from {}", domains.size(), path);
  return domains;
}

std::vector<data::Domain> without_subject(std::vector<data::Domain> domains,
                                          std::optional<std::uint32_t> excluded) {
  if (!excluded) return domains;
  const auto before = domains.size();
  std::erase_if(domains, [&](const auto& d) { return d.subject_id == *excluded; });
  if (domains.size() == before) {
    throw UsageError(fmt::format("subject {} is not in the dataset", *excluded));
  }
  return domains;
}

const char* status_name(train::PretrainStatus s) {
  return s == train::PretrainStatus::GateReached ? "gate reached" : "iteration cap reached";
}

void report_pretrain(spdlog::logger& log, const train::PretrainResult& r, double gate) {
  if (r.status == train::PretrainStatus::GateReached) {
    log.info("pretraining: {} after {} update(s), training accuracy {:.4f}", status_name(r.status),
             r.updates, r.accuracy);
  } else {
    log.warn("pretraining: accuracy gate {} not reached after {} update(s) (accuracy {:.4f}); "
             "continuing with the current parameters",
             gate, r.updates, r.accuracy);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);

  CLI::App app{"MeLaDA: meta-learned domain adaptation for EEG emotion recognition", "melada"};
  app.set_version_flag("--version", MELADA_VERSION);
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Generate the synthetic multi-domain benchmark");
  CommonOptions gen_common;
  std::string gen_out;
  std::string gen_csv;
  gen_common.attach(*gen);
  gen->add_option("--out", gen_out, "output MELD file")->required();
  gen->add_option("--csv", gen_csv, "also write a flat CSV view");

  // features
  auto* feat = app.add_subcommand("features", "Raw multichannel CSV to DE feature sequences");
  CommonOptions feat_common;
  std::string feat_in;
  std::string feat_out;
  double feat_fs = 200.0;
  std::uint32_t feat_subject = 0;
  unsigned feat_label = 0;
  bool feat_append = false;
  feat_common.attach(*feat);
  feat->add_option("--input", feat_in, "raw CSV, one column per channel")->required();
  feat->add_option("--fs", feat_fs, "sampling rate in Hz")->default_val(200.0);
  feat->add_option("--subject", feat_subject, "subject id")->required();
  feat->add_option("--label", feat_label, "class label of the recording")->required();
  feat->add_option("--out", feat_out, "output MELD file")->required();
  feat->add_flag("--append", feat_append, "add to an existing MELD file");

  // pretrain / train
  auto* pre = app.add_subcommand("pretrain", "Supervised pretraining until the accuracy gate");
  auto* trn = app.add_subcommand("train", "Pretraining followed by meta-training");
  CommonOptions pre_common;
  CommonOptions trn_common;
  std::string pre_data, pre_out, trn_data, trn_out, trn_history;
  std::optional<std::uint32_t> pre_exclude, trn_exclude;
  pre_common.attach(*pre);
  pre->add_option("--data", pre_data, "MELD dataset")->required();
  pre->add_option("--out", pre_out, "output checkpoint")->required();
  pre->add_option("--exclude", pre_exclude, "subject id to hold out");
  trn_common.attach(*trn);
  trn->add_option("--data", trn_data, "MELD dataset")->required();
  trn->add_option("--out", trn_out, "output checkpoint")->required();
  trn->add_option("--history", trn_history, "per-iteration history CSV");
  trn->add_option("--exclude", trn_exclude, "subject id to hold out");

  // adapt
  auto* adp = app.add_subcommand("adapt", "Self-adapt a trained model to one target subject");
  CommonOptions adp_common;
  std::string adp_model, adp_data, adp_curve = "adaptation_curve.csv", adp_out;
  std::uint32_t adp_subject = 0;
  adp_common.attach(*adp);
  adp->add_option("--model", adp_model, "trained checkpoint")->required();
  adp->add_option("--data", adp_data, "MELD dataset containing the target")->required();
  adp->add_option("--subject", adp_subject, "target subject id")->required();
  adp->add_option("--curve", adp_curve, "adaptation curve CSV")->default_val(adp_curve);
  adp->add_option("--out", adp_out, "adapted checkpoint");

  // loso
  auto* loso = app.add_subcommand("loso", "Leave-one-subject-out evaluation");
  CommonOptions loso_common;
  std::string loso_data, loso_dir = ".";
  loso_common.attach(*loso);
  loso->add_option("--data", loso_data, "MELD dataset")->required();
  loso->add_option("--out-dir", loso_dir, "directory for the result CSVs")->default_val(loso_dir);

  // selfcheck
  auto* check = app.add_subcommand("selfcheck", "Run the invariant suite");
  std::uint64_t check_seed = 7;
  check->add_option("--seed", check_seed, "seed of the randomised checks")->default_val(7);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << MELADA_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  const auto* sub = app.get_subcommands().front();
  const auto usage = [&](const std::exception& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  };

  try {
    if (sub == check) {
      const auto results = run_selfcheck(check_seed);
      bool ok = true;
      for (const auto& r : results) {
        out << fmt::format("{} {}: {}\n", r.passed ? "PASS" : "FAIL", r.name, r.detail);
        ok = ok && r.passed;
      }
      out << (ok ? "selfcheck passed\n" : "selfcheck FAILED\n");
      return ok ? kExitOk : kExitRuntime;
    }

    CommonOptions* common = sub == gen    ? &gen_common
                            : sub == feat ? &feat_common
                            : sub == pre  ? &pre_common
                            : sub == trn  ? &trn_common
                            : sub == adp  ? &adp_common
                                          : &loso_common;
    Settings s;
    try {
      s = common->resolve(*sub);
      s.synth.validate();
      s.dims.validate();
      s.train.validate();
    } catch (const InvalidArgument& e) {
      return usage(e);
    }
    log_settings(*log, s);

    if (sub == gen) {
      const auto domains = data::gen_synthetic(s.synth);
      data::write_dataset(domains, gen_out);
      if (!gen_csv.empty()) data::write_dataset_csv(domains, gen_csv);
      const auto digest = util::sha256_hex(util::read_file(gen_out));
      log->info("wrote {} domain(s) to {}", domains.size(), gen_out);
      out << fmt::format("{}  {}\n", digest, gen_out);
      return kExitOk;
    }

    if (sub == feat) {
      if (feat_label >= s.synth.n_classes) {
        return usage(UsageError(fmt::format("label {} out of range for {} classes", feat_label,
                                            s.synth.n_classes)));
      }
      const auto recording = signal::read_raw_csv(feat_in, feat_fs);
      signal::PipelineOptions opts;
      opts.n_classes = s.synth.n_classes;
      auto domain = signal::recording_to_domain(recording, feat_subject,
                                                static_cast<std::uint8_t>(feat_label), opts);
      const auto n_sequences = domain.size();
      std::vector<data::Domain> domains;
      if (feat_append && fs::exists(feat_out)) domains = data::read_dataset(feat_out);
      auto existing = std::find_if(domains.begin(), domains.end(),
                                   [&](const auto& d) { return d.subject_id == feat_subject; });
      if (existing != domains.end()) {
        for (std::size_t i = 0; i < domain.size(); ++i) {
          existing->push_back(domain.sample(i), domain.labels[i]);
        }
      } else {
        domains.push_back(std::move(domain));
      }
      data::validate_dataset(domains);
      data::write_dataset(domains, feat_out);
      log->info("{} sequence(s) for subject {} written to {}", n_sequences, feat_subject, feat_out);
      out << fmt::format("{} domain(s) in {}\n", domains.size(), feat_out);
      return kExitOk;
    }

    if (sub == pre || sub == trn) {
      const bool full = sub == trn;
      const auto& path = full ? trn_data : pre_data;
      auto sources = without_subject(load(path, *log), full ? trn_exclude : pre_exclude);
      const auto dims = train::dims_for(sources, s.dims);
      auto session = train::start_session(sources, dims, s.train);
      report_pretrain(*log, session.pretrain, s.train.pretrain_acc_gate);
      model::ModelParams params = session.state.params;
      if (full) {
        auto result = train::continue_meta(
            std::move(session), sources, s.train, [&](const train::HistoryRow& r, const auto&) {
              log->debug("iteration {}: l_c {:.6f} train {:.6f} valid {:.6f} meta {:.6f}",
                         r.iteration, r.l_c, r.loss_train, r.loss_valid, r.l_meta);
            });
        if (!trn_history.empty()) train::write_history_csv(result.history, trn_history);
        params = std::move(result.params);
      }
      const auto& dest = full ? trn_out : pre_out;
      model::write_checkpoint(params, dest);
      out << fmt::format("checkpoint written to {}\n", dest);
      return kExitOk;
    }

    if (sub == adp) {
      const auto params = model::read_checkpoint(adp_model);
      const auto domains = load(adp_data, *log);
      const auto target = std::find_if(domains.begin(), domains.end(),
                                       [&](const auto& d) { return d.subject_id == adp_subject; });
      if (target == domains.end()) {
        return usage(UsageError(fmt::format("subject {} is not in {}", adp_subject, adp_data)));
      }
      const auto result = adapt::self_adapt(params, data::whole_domain(*target), s.adapt,
                                            std::span<const std::uint8_t>(target->labels));
      adapt::write_adaptation_report_csv(result.report, adp_curve);
      if (!adp_out.empty()) model::write_checkpoint(result.params, adp_out);
      const auto& first = result.report.steps.front();
      const auto& last = result.report.steps.back();
      out << fmt::format("subject {}: L_C {:.6f} -> {:.6f}, accuracy {:.4f} -> {:.4f}\n",
                         adp_subject, first.l_c, last.l_c, first.accuracy.value_or(0.0),
                         last.accuracy.value_or(0.0));
      return kExitOk;
    }

    // loso
    const auto dataset = load(loso_data, *log);
    fs::create_directories(loso_dir);
    adapt::LosoConfig cfg{s.dims, s.train, s.adapt, s.jobs, s.baseline};
    const auto report = adapt::loso_evaluate(dataset, cfg, [&](const adapt::FoldResult& f) {
      report_pretrain(*log, f.pretrain, s.train.pretrain_acc_gate);
      log->info("subject {}: accuracy {:.4f} (before adaptation {:.4f}){}", f.subject_id,
                f.accuracy, f.accuracy_before,
                f.baseline_accuracy ? fmt::format(", reference {:.4f}", *f.baseline_accuracy) : "");
    });
    const auto results_csv = fs::path(loso_dir) / "loso_results.csv";
    const auto curve_csv = fs::path(loso_dir) / "adaptation_curve.csv";
    adapt::write_loso_csv(report, results_csv);
    adapt::write_adaptation_curve_csv(report, curve_csv);
    out << fmt::format("mean accuracy {:.4f}, std {:.4f} over {} folds\n", report.mean_accuracy,
                       report.std_deviation, report.folds.size());
    if (report.mean_baseline_accuracy) {
      out << fmt::format("reference (no adaptation) mean accuracy {:.4f}\n",
                         *report.mean_baseline_accuracy);
    }
    out << fmt::format("wrote {} and {}\n", results_csv.string(), curve_csv.string());
    return kExitOk;
  } catch (const UsageError& e) {
    return usage(e);
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitRuntime;
  }
}

}  // namespace melada::cli
