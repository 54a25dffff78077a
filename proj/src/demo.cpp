#include "cndr/demo.hpp"

#include "cndr/io.hpp"

namespace cndr {

LabeledData demo_dataset() {
  LabeledData d;
  d.points.resize(4, 2);
  d.points << -2.0, 1.0, 2.0, 1.0, -2.0, -1.0, 2.0, -1.0;
  d.labels.resize(4);
  d.labels << 1.0, 1.0, -1.0, -1.0;
  return d;
}

DemoResult run_demo(const TrainConfig& cfg) {
  DemoResult out;
  out.data = demo_dataset();
  const PointSet& x = out.data.points;
  const Vector& y = out.data.labels;

  // A single kernel leaves no choice of projection: M is the point mu = 1.
  ConstraintParams plain_params;
  plain_params.r = 1;
  plain_params.lambda_r = 1.0;
  plain_params.nu = 1.0;
  const std::vector<KernelSpec> plain_kernels{normalize_spec(KernelSpec::linear(), x)};
  out.plain = train(x, y, x, plain_kernels, plain_params, cfg);
  out.plain_error = classification_error(out.plain.train_scores, y);

  ConstraintParams coupled_params;
  coupled_params.r = 1;
  coupled_params.lambda_r = 1.0;
  coupled_params.nu = 8.0;
  TrainConfig coupled_cfg = cfg;
  coupled_cfg.mode = TrainMode::coupled;
  const std::vector<KernelSpec> coupled_kernels{
      normalize_spec(KernelSpec::coordinate_linear({0}), x),
      normalize_spec(KernelSpec::coordinate_linear({1}), x)};
  out.coupled = train(x, y, x, coupled_kernels, coupled_params, coupled_cfg);
  out.coupled_error = classification_error(out.coupled.train_scores, y);
  return out;
}

namespace {

nlohmann::json run_json(const TrainResult& r, double error) {
  nlohmann::json j;
  j["training_error"] = error;
  j["objective"] = r.objective;
  j["mu"] = std::vector<double>(r.model.mu.data(), r.model.mu.data() + r.model.mu.size());
  j["scores"] = std::vector<double>(r.train_scores.data(), r.train_scores.data() + r.train_scores.size());
  std::string sel;
  for (const auto& p : r.model.selection) {
    if (!sel.empty()) sel += ';';
    sel += std::to_string(p.kernel) + ":" + std::to_string(p.index);
  }
  j["index_set"] = sel;
  j["rounds"] = r.trace.rows.size();
  j["stop_reason"] = r.trace.stop_reason;
  return j;
}

}  // namespace

nlohmann::json to_json(const DemoResult& r) {
  nlohmann::json j;
  j["dataset"] = to_csv(r.data);
  j["plain"] = run_json(r.plain, r.plain_error);
  j["plain"]["kernels"] = "linear (normalized), r = 1";
  j["coupled"] = run_json(r.coupled, r.coupled_error);
  j["coupled"]["kernels"] = "coordinate_linear x, coordinate_linear y (normalized), r = 1";
  return j;
}

}  // namespace cndr
