// cndr: train, predict, bounds, rademacher, verify, demo.

#include "cndr/complexity.hpp"
#include "cndr/config.hpp"
#include "cndr/demo.hpp"
#include "cndr/errors.hpp"
#include "cndr/io.hpp"
#include "cndr/trainer.hpp"
#include "cndr/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace cndr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitVerify = 4;

constexpr const char* kVersion = "1.0.0";

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

// Wall-clock data lives here so that reports stay byte-identical across reruns.
void write_metadata(const fs::path& dir, const std::string& command, const std::string& config_path) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  nlohmann::json j{{"command", command}, {"config", config_path}, {"timestamp", buf}, {"version", kVersion}};
  write_text_file((dir / ("metadata_" + command + ".json")).string(), dump(j));
}

struct Samples {
  LabeledData labeled;
  PointSet anchor;
};

Samples load_samples(const RunConfig& cfg) {
  if (cfg.labeled_path.empty()) throw ConfigError("data.labeled is required for this command");
  Samples s;
  s.labeled = load_labeled(cfg.labeled_path, cfg.format, cfg.dim);
  s.anchor = cfg.unlabeled_path.empty()
                 ? s.labeled.points
                 : load_unlabeled(cfg.unlabeled_path, cfg.format, static_cast<int>(s.labeled.points.cols()));
  if (s.anchor.cols() != s.labeled.points.cols())
    throw DataError("labeled and unlabeled samples have different dimensions");
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_train(const RunConfig& cfg, const std::string& config_path) {
  const Samples s = load_samples(cfg);
  const auto kernels = resolve_kernels(cfg, s.anchor);
  const TrainResult res = train(s.labeled.points, s.labeled.labels, s.anchor, kernels, cfg.constraints, cfg.train);
  const fs::path dir = prepare_dir(cfg.output_dir);
  save_model(res.model, (dir / "model.json").string());
  write_text_file((dir / "trace.csv").string(), res.trace.to_csv());

  const FeasibilityReport feas = check_M(res.model.mu, cfg.constraints, res.model.bundle);
  const double error = classification_error(res.train_scores, s.labeled.labels);
  if (cfg.write_json) {
    nlohmann::json j;
    j["config"] = config_to_json(cfg);
    j["objective"] = res.objective;
    j["training_error"] = error;
    j["rounds"] = res.trace.rows.size();
    j["stop_reason"] = res.trace.stop_reason;
    j["weight_energy"] = res.model.weight_energy();
    j["mu"] = std::vector<double>(res.model.mu.data(), res.model.mu.data() + res.model.mu.size());
    j["feasible"] = feas.feasible();
    j["kyfan"] = feas.kyfan;
    j["kyfan_budget"] = feas.budget;
    write_text_file((dir / "train_report.json").string(), dump(j));
  }
  if (cfg.write_csv) {
    std::string csv = "objective,training_error,weight_energy,kyfan,feasible\n";
    csv += fmt(res.objective) + "," + fmt(error) + "," + fmt(res.model.weight_energy()) + "," + fmt(feas.kyfan) + "," +
           (feas.feasible() ? "true" : "false") + "\n";
    write_text_file((dir / "train_report.csv").string(), csv);
  }
  write_metadata(dir, "train", config_path);
  std::cout << "trained " << res.trace.rows.size() << " rounds (" << res.trace.stop_reason << "), objective "
            << fmt(res.objective) << ", training error " << error << "\n"
            << "wrote " << (dir / "model.json").string() << "\n";
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& format_name,
                std::string out_path) {
  const Model model = load_model(model_path);
  const DataFormat format = data_format_from_string(format_name);
  const int d = static_cast<int>(model.anchor.cols());

  std::ifstream in(data_path);
  if (!in) throw DataError("cannot open '" + data_path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  // Labeled rows carry one extra CSV column, or a leading token without ':'.
  bool labeled = false;
  {
    std::istringstream ls(text);
    std::string line;
    while (std::getline(ls, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      if (format == DataFormat::csv) {
        const auto cols = 1 + std::count(line.begin(), line.end(), ',');
        if (cols == d + 1) {
          labeled = true;
        } else if (cols != d) {
          throw DataError(data_path + ": rows have " + std::to_string(cols) + " columns, model expects " +
                          std::to_string(d) + " features (optionally preceded by a label)");
        }
      } else {
        std::istringstream ts(line);
        std::string first;
        ts >> first;
        labeled = first.find(':') == std::string::npos;
      }
      break;
    }
  }

  std::istringstream data(text);
  PointSet points;
  Vector labels;
  if (labeled) {
    LabeledData ld = parse_labeled(data, format, data_path, d);
    points = std::move(ld.points);
    labels = std::move(ld.labels);
  } else {
    points = parse_unlabeled(data, format, data_path, d);
  }
  const Vector scores = evaluate_batch(model, points);
  std::string csv = "index,score,label\n";
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    csv += std::to_string(i) + "," + fmt(scores(i)) + "," + (sign_label(scores(i)) > 0 ? "+1" : "-1") + "\n";
  if (out_path.empty()) out_path = (fs::path(model_path).parent_path() / "predictions.csv").string();
  write_text_file(out_path, csv);
  std::cout << "scored " << scores.size() << " points";
  if (labeled) std::cout << ", error " << classification_error(scores, labels);
  std::cout << "\nwrote " << out_path << "\n";
  return kExitOk;
}

int cmd_bounds(const RunConfig& cfg, const std::string& config_path, const std::string& model_path) {
  BoundReport rep;
  nlohmann::json extra;
  if (!model_path.empty()) {
    const Model model = load_model(model_path);
    if (cfg.labeled_path.empty()) throw ConfigError("data.labeled is required for the margin bound");
    const LabeledData s = load_labeled(cfg.labeled_path, cfg.format, cfg.dim);
    rep = margin_bound(model, s.points, s.labels, cfg.rho);
    if (cfg.exact_gap) {
      const Eigengap gap{*cfg.exact_gap, *cfg.exact_gap <= 1e-12, false};
      rep = margin_bound(model.params, model.num_kernels(), static_cast<int>(s.points.rows()), gap, rep.margin_loss,
                         cfg.rho);
    }
    const ComplexityTerms terms = compare_complexity_terms(model.bundle, model.params.r);
    extra = {{"coupled", terms.coupled}, {"standard", terms.standard}};
  } else {
    const Samples s = load_samples(cfg);
    const auto kernels = resolve_kernels(cfg, s.anchor);
    const SpectralBundle bundle = build_bundle(kernels, s.anchor);
    cfg.constraints.validate(bundle.num_kernels());
    Eigengap gap = eigengap_plugin(bundle, cfg.constraints.r);
    if (cfg.exact_gap) gap = Eigengap{*cfg.exact_gap, *cfg.exact_gap <= 1e-12, false};
    rep = complexity_bound(cfg.constraints, bundle.num_kernels(), static_cast<int>(s.labeled.points.rows()), gap);
    const ComplexityTerms terms = compare_complexity_terms(bundle, cfg.constraints.r);
    extra = {{"coupled", terms.coupled}, {"standard", terms.standard}};
  }
  const fs::path dir = prepare_dir(cfg.output_dir);
  if (cfg.write_json) {
    nlohmann::json j;
    j["config"] = config_to_json(cfg);
    j["model"] = model_path;
    j["bound"] = to_json(rep);
    j["complexity_terms"] = extra;
    write_text_file((dir / "bounds.json").string(), dump(j));
  }
  if (cfg.write_csv) write_text_file((dir / "bounds.csv").string(), csv_header(rep) + "\n" + csv_row(rep) + "\n");
  write_metadata(dir, "bounds", config_path);
  std::cout << "complexity bound " << fmt(rep.total) << " (term1 " << fmt(rep.term1) << ", term2 " << fmt(rep.term2)
            << ", " << (rep.gap_plugin ? "plug-in" : "exact") << " gap " << fmt(rep.gap) << ")\n";
  if (rep.has_margin_bound) std::cout << "margin bound " << fmt(rep.margin_bound) << "\n";
  for (const auto& d : rep.diagnostics) std::cout << "note: " << d << "\n";
  return kExitOk;
}

int cmd_rademacher(const RunConfig& cfg, const std::string& config_path) {
  if (cfg.labeled_path.empty()) throw ConfigError("data.labeled is required for this command");
  const LabeledData s = load_labeled(cfg.labeled_path, cfg.format, cfg.dim);
  const auto kernels = resolve_kernels(cfg, s.points);
  const SpectralBundle bundle = build_bundle(kernels, s.points);
  const RademacherEstimate est = cfg.rademacher_exhaustive
                                     ? rademacher_exhaustive(bundle, cfg.constraints)
                                     : estimate_rademacher(bundle, cfg.constraints, cfg.rademacher_draws, cfg.seed);
  const int m = static_cast<int>(s.points.rows());
  Eigengap gap = eigengap_plugin(bundle, cfg.constraints.r);
  if (cfg.exact_gap) gap = Eigengap{*cfg.exact_gap, *cfg.exact_gap <= 1e-12, false};
  const BoundReport upper = complexity_bound(cfg.constraints, bundle.num_kernels(), m, gap);

  const fs::path dir = prepare_dir(cfg.output_dir);
  if (cfg.write_json) {
    nlohmann::json j;
    j["config"] = config_to_json(cfg);
    j["estimate"] = to_json(est);
    j["upper_bound"] = to_json(upper);
    write_text_file((dir / "rademacher.json").string(), dump(j));
  }
  if (cfg.write_csv) {
    std::string csv = "estimate,std_error,draws,seed,method,lower_estimate,exhaustive,upper_bound\n";
    csv += fmt(est.estimate) + "," + fmt(est.std_error) + "," + std::to_string(est.draws) + "," +
           std::to_string(est.seed) + "," + est.method + "," + (est.lower_estimate ? "true" : "false") + "," +
           (est.exhaustive ? "true" : "false") + "," + fmt(upper.total) + "\n";
    write_text_file((dir / "rademacher.csv").string(), csv);
  }
  write_metadata(dir, "rademacher", config_path);
  std::cout << "rademacher " << fmt(est.estimate) << " +- " << fmt(est.std_error) << " (" << est.method
            << (est.lower_estimate ? ", lower estimate" : "") << ")\n";
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, const std::string& config_path) {
  const VerifyReport rep = run_verification(cfg);
  const fs::path dir = prepare_dir(cfg.output_dir);
  nlohmann::json j = rep.to_json();
  j["config"] = config_to_json(cfg);
  write_text_file((dir / "verify.json").string(), dump(j));
  if (cfg.write_csv) {
    std::string csv = "check,passed\n";
    for (const auto& c : rep.checks) csv += c.name + "," + (c.passed ? "true" : "false") + "\n";
    write_text_file((dir / "verify.csv").string(), csv);
  }
  write_metadata(dir, "verify", config_path);
  for (const auto& c : rep.checks) std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "\n";
  std::cout << (rep.passed() ? "all checks passed" : "verification failed") << "\n";
  return rep.passed() ? kExitOk : kExitVerify;
}

int cmd_demo(const std::string& out_dir) {
  const DemoResult res = run_demo();
  const fs::path dir = prepare_dir(out_dir);
  write_text_file((dir / "demo.json").string(), dump(to_json(res)));
  write_text_file((dir / "demo_data.csv").string(), to_csv(res.data));
  write_text_file((dir / "demo_plain_trace.csv").string(), res.plain.trace.to_csv());
  write_text_file((dir / "demo_coupled_trace.csv").string(), res.coupled.trace.to_csv());
  write_metadata(dir, "demo", "");
  std::cout << "plain rank-1 pipeline training error   " << res.plain_error << "\n"
            << "coupled rank-1 pipeline training error " << res.coupled_error << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled kernel mixture, rank-r projection and linear separator; bound verification lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path, output_dir, model_path, data_path, out_path, format = "csv";

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "run configuration (key = value)")->required();
    sub->add_option("-o,--output-dir", output_dir, "override output.dir");
  };
  CLI::App* train_cmd = app.add_subcommand("train", "train a model; writes model.json and trace.csv");
  add_config(train_cmd);
  CLI::App* predict_cmd = app.add_subcommand("predict", "score points with a saved model");
  predict_cmd->add_option("-m,--model", model_path, "model file")->required();
  predict_cmd->add_option("-d,--data", data_path, "points, labeled or not")->required();
  predict_cmd->add_option("-f,--format", format, "csv or svmlight");
  predict_cmd->add_option("--out", out_path, "predictions CSV (default: next to the model)");
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "complexity and margin bounds");
  add_config(bounds_cmd);
  bounds_cmd->add_option("-m,--model", model_path, "trained model for the margin bound");
  CLI::App* rad_cmd = app.add_subcommand("rademacher", "estimate the empirical Rademacher complexity");
  add_config(rad_cmd);
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the verification suite");
  add_config(verify_cmd);
  CLI::App* demo_cmd = app.add_subcommand("demo", "four-point demonstration: plain versus coupled projection");
  demo_cmd->add_option("-o,--output-dir", output_dir, "output directory")->default_val("demo_out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (predict_cmd->parsed()) return cmd_predict(model_path, data_path, format, out_path);
    if (demo_cmd->parsed()) return cmd_demo(output_dir);
    RunConfig cfg = load_config(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (train_cmd->parsed()) return cmd_train(cfg, config_path);
    if (bounds_cmd->parsed()) return cmd_bounds(cfg, config_path, model_path);
    if (rad_cmd->parsed()) return cmd_rademacher(cfg, config_path);
    if (verify_cmd->parsed()) return cmd_verify(cfg, config_path);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
