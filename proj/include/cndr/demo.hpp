#pragma once

#include "cndr/io.hpp"
#include "cndr/trainer.hpp"

#include "json.hpp"

namespace cndr {

// Four points, two per class: blue (-2, 1), (2, 1) and red (-2, -1), (2, -1).
// The first coordinate carries most of the variance, so the top principal
// direction of a single linear kernel mixes the classes.
LabeledData demo_dataset();

struct DemoResult {
  LabeledData data;
  TrainResult plain;    // one normalized linear kernel, rank 1
  TrainResult coupled;  // one normalized coordinate-linear kernel per axis, rank 1
  double plain_error = 0.0;
  double coupled_error = 0.0;
};

DemoResult run_demo(const TrainConfig& cfg = {});

nlohmann::json to_json(const DemoResult& r);

}  // namespace cndr
