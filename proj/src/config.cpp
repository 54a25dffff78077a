#include "cndr/config.hpp"

#include "cndr/errors.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cndr {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(std::string source, std::string base_dir) : source_(std::move(source)), base_(std::move(base_dir)) {}

  [[noreturn]] void fail(const std::string& key, const Entry& e, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(e.line) + ": " + key + ": " + msg);
  }

  double real(const std::string& key, const Entry& e) const {
    std::string v = e.value;
    if (!v.empty() && v.front() == '+') v.erase(0, 1);
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
      fail(key, e, "expected a number, got '" + e.value + "'");
    return out;
  }

  long long integer(const std::string& key, const Entry& e) const {
    long long out = 0;
    const auto& v = e.value;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
      fail(key, e, "expected an integer, got '" + v + "'");
    return out;
  }

  std::uint64_t unsigned_integer(const std::string& key, const Entry& e) const {
    std::uint64_t out = 0;
    const auto& v = e.value;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
      fail(key, e, "expected a non-negative integer, got '" + v + "'");
    return out;
  }

  bool boolean(const std::string& key, const Entry& e) const {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    fail(key, e, "expected true or false, got '" + e.value + "'");
  }

  std::vector<std::string> list(const Entry& e) const {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(e.value);
    while (std::getline(is, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::string path(const std::string& key, const Entry& e) const {
    if (e.value.empty()) fail(key, e, "empty path");
    fs::path p(e.value);
    if (p.is_relative()) p = fs::path(base_) / p;
    if (!fs::exists(p)) fail(key, e, "file not found: " + p.string());
    return p.lexically_normal().string();
  }

  template <class F>
  void rethrow(const std::string& key, const Entry& e, F&& f) const {
    try {
      f();
    } catch (const ConfigError& err) {
      fail(key, e, err.what());
    } catch (const InputError& err) {
      fail(key, e, err.what());
    }
  }

 private:
  std::string source_;
  std::string base_;
};

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source, const std::string& base_dir) {
  std::map<std::string, Entry> entries;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(line) + ": expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line) + ": empty key");
    if (!entries.emplace(key, Entry{value, line}).second)
      throw ConfigError(source + ":" + std::to_string(line) + ": duplicate key '" + key + "'");
  }

  const Reader rd(source, base_dir);
  RunConfig cfg;
  std::map<int, std::map<std::string, std::pair<std::string, Entry>>> kernel_keys;
  std::optional<std::pair<std::uint64_t, Entry>> top_seed, train_seed;

  for (const auto& [key, e] : entries) {
    if (key == "seed") {
      top_seed.emplace(rd.unsigned_integer(key, e), e);
    } else if (key == "data.labeled") {
      cfg.labeled_path = rd.path(key, e);
    } else if (key == "data.unlabeled") {
      cfg.unlabeled_path = rd.path(key, e);
    } else if (key == "data.predict") {
      cfg.predict_path = rd.path(key, e);
    } else if (key == "data.format") {
      rd.rethrow(key, e, [&] { cfg.format = data_format_from_string(e.value); });
    } else if (key == "data.dim") {
      const long long d = rd.integer(key, e);
      if (d < 1) rd.fail(key, e, "must be positive");
      cfg.dim = static_cast<int>(d);
    } else if (key.rfind("kernel.", 0) == 0) {
      const auto dot = key.find('.', 7);
      if (dot == std::string::npos) rd.fail(key, e, "unknown key");
      const std::string idx_s = key.substr(7, dot - 7);
      int idx = 0;
      const auto res = std::from_chars(idx_s.data(), idx_s.data() + idx_s.size(), idx);
      if (idx_s.empty() || res.ec != std::errc() || res.ptr != idx_s.data() + idx_s.size() || idx < 1)
        rd.fail(key, e, "kernel index must be a positive integer");
      kernel_keys[idx][key.substr(dot + 1)] = {key, e};
    } else if (key == "constraints.r") {
      cfg.constraints.r = static_cast<int>(rd.integer(key, e));
    } else if (key == "constraints.lambda_r") {
      cfg.constraints.lambda_r = rd.real(key, e);
    } else if (key == "constraints.nu") {
      cfg.constraints.nu = rd.real(key, e);
    } else if (key == "constraints.delta") {
      cfg.constraints.delta = rd.real(key, e);
    } else if (key == "train.loss") {
      rd.rethrow(key, e, [&] { cfg.train.loss = loss_from_string(e.value); });
    } else if (key == "train.mode") {
      rd.rethrow(key, e, [&] { cfg.train.mode = train_mode_from_string(e.value); });
    } else if (key == "train.max_rounds") {
      cfg.train.max_rounds = static_cast<int>(rd.integer(key, e));
    } else if (key == "train.inner_iters") {
      cfg.train.inner_iters = static_cast<int>(rd.integer(key, e));
    } else if (key == "train.step") {
      cfg.train.step = rd.real(key, e);
    } else if (key == "train.tol") {
      cfg.train.tol = rd.real(key, e);
    } else if (key == "train.flip_margin") {
      cfg.train.flip_margin = rd.real(key, e);
    } else if (key == "train.seed") {
      train_seed.emplace(rd.unsigned_integer(key, e), e);
    } else if (key == "output.dir") {
      if (e.value.empty()) rd.fail(key, e, "empty path");
      fs::path p(e.value);
      if (p.is_relative()) p = fs::path(base_dir) / p;
      cfg.output_dir = p.lexically_normal().string();
    } else if (key == "output.formats") {
      cfg.write_json = cfg.write_csv = false;
      for (const auto& f : rd.list(e)) {
        if (f == "json") {
          cfg.write_json = true;
        } else if (f == "csv") {
          cfg.write_csv = true;
        } else {
          rd.fail(key, e, "unknown report format '" + f + "' (json, csv)");
        }
      }
      if (!cfg.write_json && !cfg.write_csv) rd.fail(key, e, "no report format selected");
    } else if (key == "bounds.rho") {
      cfg.rho = rd.real(key, e);
      if (!(cfg.rho > 0.0)) rd.fail(key, e, "must be positive");
    } else if (key == "bounds.exact_gap") {
      cfg.exact_gap = rd.real(key, e);
      if (!(*cfg.exact_gap >= 0.0)) rd.fail(key, e, "must be non-negative");
    } else if (key == "rademacher.draws") {
      cfg.rademacher_draws = rd.integer(key, e);
      if (cfg.rademacher_draws < 2) rd.fail(key, e, "need at least 2 draws");
    } else if (key == "rademacher.exhaustive") {
      cfg.rademacher_exhaustive = rd.boolean(key, e);
    } else if (key == "verify.draws") {
      cfg.verify.draws = rd.integer(key, e);
      if (cfg.verify.draws < 2) rd.fail(key, e, "need at least 2 draws");
    } else if (key == "verify.concentration_trials") {
      cfg.verify.concentration_trials = static_cast<int>(rd.integer(key, e));
      if (cfg.verify.concentration_trials < 1) rd.fail(key, e, "must be positive");
    } else if (key == "verify.concentration_sizes") {
      cfg.verify.concentration_sizes.clear();
      for (const auto& item : rd.list(e)) {
        const long long v = rd.integer(key, Entry{item, e.line});
        if (v < 4) rd.fail(key, e, "sizes must be at least 4");
        cfg.verify.concentration_sizes.push_back(static_cast<int>(v));
      }
      if (cfg.verify.concentration_sizes.size() < 2) rd.fail(key, e, "need at least two sizes");
    } else {
      rd.fail(key, e, "unknown key");
    }
  }

  if (top_seed && train_seed && top_seed->first != train_seed->first)
    rd.fail("train.seed", train_seed->second, "conflicts with 'seed'");
  if (top_seed) cfg.seed = top_seed->first;
  else if (train_seed) cfg.seed = train_seed->first;
  cfg.train.seed = cfg.seed;

  int expected = 1;
  for (auto& [idx, fields] : kernel_keys) {
    if (idx != expected)
      throw ConfigError(source + ": kernel indices must be contiguous from 1 (missing kernel." +
                        std::to_string(expected) + ")");
    ++expected;
    const std::string prefix = "kernel." + std::to_string(idx);
    const auto kind_it = fields.find("kind");
    if (kind_it == fields.end()) throw ConfigError(source + ": " + prefix + ".kind is required");
    KernelDecl decl;
    {
      const auto& [key, e] = kind_it->second;
      rd.rethrow(key, e, [&] { decl.spec.kind = kernel_kind_from_string(e.value); });
    }
    for (const auto& [field, ke] : fields) {
      const auto& [key, e] = ke;
      if (field == "kind") continue;
      if (field == "degree") {
        if (decl.spec.kind != KernelKind::polynomial) rd.fail(key, e, "only polynomial kernels take a degree");
        decl.spec.degree = static_cast<int>(rd.integer(key, e));
      } else if (field == "bandwidth") {
        if (decl.spec.kind != KernelKind::gaussian) rd.fail(key, e, "only gaussian kernels take a bandwidth");
        decl.spec.bandwidth = rd.real(key, e);
      } else if (field == "coords") {
        if (decl.spec.kind != KernelKind::coordinate_linear)
          rd.fail(key, e, "only coordinate_linear kernels take coords");
        for (const auto& item : rd.list(e)) {
          const long long c = rd.integer(key, Entry{item, e.line});
          if (c < 1) rd.fail(key, e, "coordinates are 1-based");
          decl.spec.coords.push_back(static_cast<std::size_t>(c - 1));
        }
      } else if (field == "normalize") {
        decl.spec.normalize = rd.boolean(key, e);
      } else if (field == "matrix") {
        if (decl.spec.kind != KernelKind::precomputed) rd.fail(key, e, "only precomputed kernels take a matrix");
        decl.matrix_path = rd.path(key, e);
      } else {
        rd.fail(key, e, "unknown key");
      }
    }
    if (decl.spec.kind == KernelKind::polynomial && decl.spec.degree < 1)
      throw ConfigError(source + ": " + prefix + ".degree must be at least 1");
    if (decl.spec.kind == KernelKind::gaussian && !(decl.spec.bandwidth > 0.0))
      throw ConfigError(source + ": " + prefix + ".bandwidth must be positive");
    if (decl.spec.kind == KernelKind::coordinate_linear && decl.spec.coords.empty())
      throw ConfigError(source + ": " + prefix + ".coords is required");
    if (decl.spec.kind == KernelKind::precomputed && decl.matrix_path.empty())
      throw ConfigError(source + ": " + prefix + ".matrix is required");
    cfg.kernels.push_back(std::move(decl));
  }

  if (!cfg.kernels.empty()) {
    try {
      cfg.constraints.validate(cfg.num_kernels());
    } catch (const Error& err) {
      throw ConfigError(source + ": " + err.what());
    }
  }
  try {
    cfg.train.validate();
  } catch (const Error& err) {
    throw ConfigError(source + ": " + err.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path + "'");
  const fs::path base = fs::path(path).parent_path();
  return parse_config(in, path, base.empty() ? std::string(".") : base.string());
}

std::vector<KernelSpec> resolve_kernels(const RunConfig& cfg, const PointSet& anchor) {
  if (cfg.kernels.empty()) throw ConfigError("no kernels declared (kernel.1.kind = ...)");
  std::vector<KernelSpec> out;
  out.reserve(cfg.kernels.size());
  for (const auto& decl : cfg.kernels) {
    KernelSpec spec = decl.spec;
    if (spec.kind == KernelKind::precomputed) {
      const bool norm = spec.normalize;
      spec = KernelSpec::precomputed(load_matrix_csv(decl.matrix_path));
      spec.normalize = norm;
    }
    if (spec.normalize) {
      spec = normalize_spec(spec, anchor);
    } else {
      spec.validate(anchor.cols());
    }
    out.push_back(std::move(spec));
  }
  return out;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["data.labeled"] = cfg.labeled_path;
  j["data.unlabeled"] = cfg.unlabeled_path;
  j["data.predict"] = cfg.predict_path;
  j["data.format"] = cfg.format == DataFormat::csv ? "csv" : "svmlight";
  j["data.dim"] = cfg.dim;
  for (std::size_t i = 0; i < cfg.kernels.size(); ++i) {
    const auto& s = cfg.kernels[i].spec;
    const std::string prefix = "kernel." + std::to_string(i + 1) + ".";
    j[prefix + "kind"] = std::string(to_string(s.kind));
    j[prefix + "normalize"] = s.normalize;
    if (s.kind == KernelKind::polynomial) j[prefix + "degree"] = s.degree;
    if (s.kind == KernelKind::gaussian) j[prefix + "bandwidth"] = s.bandwidth;
    if (s.kind == KernelKind::coordinate_linear) {
      std::vector<std::size_t> one_based;
      for (auto c : s.coords) one_based.push_back(c + 1);
      j[prefix + "coords"] = one_based;
    }
    if (s.kind == KernelKind::precomputed) j[prefix + "matrix"] = cfg.kernels[i].matrix_path;
  }
  j["constraints.r"] = cfg.constraints.r;
  j["constraints.lambda_r"] = cfg.constraints.lambda_r;
  j["constraints.nu"] = cfg.constraints.nu;
  j["constraints.delta"] = cfg.constraints.delta;
  j["train.loss"] = std::string(to_string(cfg.train.loss));
  j["train.mode"] = std::string(to_string(cfg.train.mode));
  j["train.max_rounds"] = cfg.train.max_rounds;
  j["train.inner_iters"] = cfg.train.inner_iters;
  j["train.step"] = cfg.train.step;
  j["train.tol"] = cfg.train.tol;
  j["train.flip_margin"] = cfg.train.flip_margin;
  j["bounds.rho"] = cfg.rho;
  if (cfg.exact_gap) j["bounds.exact_gap"] = *cfg.exact_gap;
  j["rademacher.draws"] = cfg.rademacher_draws;
  j["rademacher.exhaustive"] = cfg.rademacher_exhaustive;
  j["verify.draws"] = cfg.verify.draws;
  j["verify.concentration_trials"] = cfg.verify.concentration_trials;
  j["verify.concentration_sizes"] = cfg.verify.concentration_sizes;
  return j;
}

}  // namespace cndr
