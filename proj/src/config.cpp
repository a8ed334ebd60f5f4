#include "rolnn/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rolnn::cli {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt_g17(double v) {
  char buf[32];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

const std::vector<std::string> kKnownKeys = {
    "kind", "seed", "dataset", "out",
    "data.mode", "data.dt", "data.horizon_s", "data.trajectories", "data.q0_min_deg",
    "data.q0_max_deg", "data.amp_min_deg", "data.amp_max_deg", "data.freq_min_hz",
    "data.freq_max_hz",
    "train_samples", "train_windows", "test_trajectories",
    "mass_net", "basepoint", "spd_layers", "hidden", "latent_dim", "ae_sizes", "ae_mode",
    "alpha", "reeig_eps",
    "loss", "h_train", "schedule", "sequential_split", "epochs", "lr_ae", "lr_lnn", "reg",
    "overparam_weight", "chunk",
    "h_test", "scheme", "plots"};

}  // namespace

KvFile KvFile::parse_string(const std::string& text) {
  KvFile kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown key '" + key +
                               "'");
    kv.values[key] = val;
  }
  return kv;
}

KvFile KvFile::parse_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("cannot open config " + p.string());
  std::string text((std::istreambuf_iterator<char>(f)), {});
  return parse_string(text);
}

void KvFile::write_file(const std::filesystem::path& p) const {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write config " + p.string());
  for (const auto& [k, v] : values) f << k << " = " << v << "\n";
}

std::string KvFile::get(const std::string& k, const std::string& dflt) const {
  auto it = values.find(k);
  return it == values.end() ? dflt : it->second;
}

double KvFile::get_num(const std::string& k, double dflt) const {
  auto it = values.find(k);
  return it == values.end() ? dflt : std::stod(it->second);
}

long KvFile::get_int(const std::string& k, long dflt) const {
  auto it = values.find(k);
  return it == values.end() ? dflt : std::stol(it->second);
}

std::vector<int> KvFile::get_ints(const std::string& k, const std::vector<int>& dflt) const {
  auto it = values.find(k);
  if (it == values.end()) return dflt;
  std::vector<int> out;
  for (const auto& s : split_list(it->second)) out.push_back(std::stoi(s));
  return out;
}

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Lnn2Dof: return "lnn-2dof";
    case ExperimentKind::RolnnCoupled16: return "rolnn-coupled16";
    case ExperimentKind::RolnnIngested: return "rolnn-ingested";
  }
  return "unknown";
}

std::optional<ExperimentKind> kind_from_name(const std::string& s) {
  if (s == "lnn-2dof") return ExperimentKind::Lnn2Dof;
  if (s == "rolnn-coupled16") return ExperimentKind::RolnnCoupled16;
  if (s == "rolnn-ingested") return ExperimentKind::RolnnIngested;
  return std::nullopt;
}

RunConfig RunConfig::from_kv(const KvFile& kv) {
  RunConfig c;
  auto kind = kind_from_name(kv.get("kind", "lnn-2dof"));
  if (!kind) throw std::runtime_error("config: unknown experiment kind");
  c.kind = *kind;

  // per-kind defaults before explicit keys are applied
  switch (c.kind) {
    case ExperimentKind::Lnn2Dof:
      c.data.mode = sys::DatasetMode::Unactuated;
      c.data.trajectories = 30;
      c.data.horizon_s = 2.0;
      c.lr_lnn = 1e-3;
      c.reg = 1e-6;
      c.epochs = 2000;
      break;
    case ExperimentKind::RolnnCoupled16:
      c.data.mode = sys::DatasetMode::Coupled16;
      c.data.trajectories = 20;
      c.data.horizon_s = 3.0;
      c.latent_dim = 4;
      c.ae_sizes = {8, 16, 16, 16};
      c.loss = LossKind::Ode;
      c.lr_ae = 5e-2;
      c.lr_lnn = 2e-4;
      c.reg = 2e-5;
      c.epochs = 800;
      break;
    case ExperimentKind::RolnnIngested:
      c.latent_dim = 10;
      c.ae_sizes = {};
      c.loss = LossKind::Ode;
      c.lr_ae = 5e-2;
      c.lr_lnn = 2e-4;
      c.reg = 2e-5;
      c.epochs = 500;
      break;
  }

  c.seed = static_cast<uint64_t>(kv.get_int("seed", static_cast<long>(c.seed)));
  c.dataset = kv.get("dataset", c.dataset);
  c.out = kv.get("out", c.out);

  if (auto m = sys::mode_from_name(kv.get("data.mode", sys::mode_name(c.data.mode))))
    c.data.mode = *m;
  else
    throw std::runtime_error("config: unknown data.mode");
  c.data.dt = kv.get_num("data.dt", c.data.dt);
  c.data.horizon_s = kv.get_num("data.horizon_s", c.data.horizon_s);
  c.data.trajectories = static_cast<int>(kv.get_int("data.trajectories", c.data.trajectories));
  c.data.q0_min_deg = kv.get_num("data.q0_min_deg", c.data.q0_min_deg);
  c.data.q0_max_deg = kv.get_num("data.q0_max_deg", c.data.q0_max_deg);
  c.data.amp_min_deg = kv.get_num("data.amp_min_deg", c.data.amp_min_deg);
  c.data.amp_max_deg = kv.get_num("data.amp_max_deg", c.data.amp_max_deg);
  c.data.freq_min_hz = kv.get_num("data.freq_min_hz", c.data.freq_min_hz);
  c.data.freq_max_hz = kv.get_num("data.freq_max_hz", c.data.freq_max_hz);
  c.data.seed = c.seed;

  c.train_samples = static_cast<int>(kv.get_int("train_samples", c.train_samples));
  c.train_windows = static_cast<int>(kv.get_int("train_windows", c.train_windows));
  c.test_trajectories = static_cast<int>(kv.get_int("test_trajectories", c.test_trajectories));

  c.mass_net = kv.get("mass_net", c.mass_net);
  c.learned_basepoint =
      kv.get("basepoint", c.learned_basepoint ? "learned" : "identity") == "learned";
  for (const auto& s : split_list(kv.get("spd_layers", ""))) c.spd_layers.push_back(s);
  c.hidden = kv.get_ints("hidden", c.hidden);
  c.latent_dim = static_cast<int>(kv.get_int("latent_dim", c.latent_dim));
  c.ae_sizes = kv.get_ints("ae_sizes", c.ae_sizes);
  c.ae_mode = kv.get("ae_mode", c.ae_mode);
  c.alpha = kv.get_num("alpha", c.alpha);
  c.reeig_eps = kv.get_num("reeig_eps", c.reeig_eps);

  std::string loss = kv.get("loss", c.loss == LossKind::Acc ? "acc" : "ode");
  if (loss == "acc")
    c.loss = LossKind::Acc;
  else if (loss == "ode")
    c.loss = LossKind::Ode;
  else
    throw std::runtime_error("config: loss must be acc or ode");
  c.h_train = static_cast<int>(kv.get_int("h_train", c.h_train));
  std::string sched = kv.get("schedule", c.schedule == Schedule::Joint ? "joint" : "sequential");
  if (sched == "joint")
    c.schedule = Schedule::Joint;
  else if (sched == "sequential")
    c.schedule = Schedule::Sequential;
  else
    throw std::runtime_error("config: schedule must be joint or sequential");
  c.sequential_split = kv.get_num("sequential_split", c.sequential_split);
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.lr_ae = kv.get_num("lr_ae", c.lr_ae);
  c.lr_lnn = kv.get_num("lr_lnn", c.lr_lnn);
  c.reg = kv.get_num("reg", c.reg);
  c.overparam_weight = kv.get_num("overparam_weight", c.overparam_weight);
  c.chunk = static_cast<int>(kv.get_int("chunk", c.chunk));

  if (kv.has("h_test")) c.h_test = kv.get_ints("h_test", c.h_test);
  c.scheme = kv.get("scheme", c.scheme);
  c.plots = kv.get("plots", c.plots ? "true" : "false") == "true";
  c.validate();
  return c;
}

KvFile RunConfig::to_kv() const {
  KvFile kv;
  kv.values["kind"] = kind_name(kind);
  kv.values["seed"] = std::to_string(seed);
  kv.values["dataset"] = dataset;
  kv.values["out"] = out;
  kv.values["data.mode"] = sys::mode_name(data.mode);
  kv.values["data.dt"] = fmt_g17(data.dt);
  kv.values["data.horizon_s"] = fmt_g17(data.horizon_s);
  kv.values["data.trajectories"] = std::to_string(data.trajectories);
  kv.values["data.q0_min_deg"] = fmt_g17(data.q0_min_deg);
  kv.values["data.q0_max_deg"] = fmt_g17(data.q0_max_deg);
  kv.values["data.amp_min_deg"] = fmt_g17(data.amp_min_deg);
  kv.values["data.amp_max_deg"] = fmt_g17(data.amp_max_deg);
  kv.values["data.freq_min_hz"] = fmt_g17(data.freq_min_hz);
  kv.values["data.freq_max_hz"] = fmt_g17(data.freq_max_hz);
  kv.values["train_samples"] = std::to_string(train_samples);
  kv.values["train_windows"] = std::to_string(train_windows);
  kv.values["test_trajectories"] = std::to_string(test_trajectories);
  kv.values["mass_net"] = mass_net;
  kv.values["basepoint"] = learned_basepoint ? "learned" : "identity";
  std::string layers;
  for (size_t i = 0; i < spd_layers.size(); ++i) {
    if (i) layers += ",";
    layers += spd_layers[i];
  }
  kv.values["spd_layers"] = layers;
  kv.values["hidden"] = join_ints(hidden);
  kv.values["latent_dim"] = std::to_string(latent_dim);
  kv.values["ae_sizes"] = join_ints(ae_sizes);
  kv.values["ae_mode"] = ae_mode;
  kv.values["alpha"] = fmt_g17(alpha);
  kv.values["reeig_eps"] = fmt_g17(reeig_eps);
  kv.values["loss"] = loss == LossKind::Acc ? "acc" : "ode";
  kv.values["h_train"] = std::to_string(h_train);
  kv.values["schedule"] = schedule == Schedule::Joint ? "joint" : "sequential";
  kv.values["sequential_split"] = fmt_g17(sequential_split);
  kv.values["epochs"] = std::to_string(epochs);
  kv.values["lr_ae"] = fmt_g17(lr_ae);
  kv.values["lr_lnn"] = fmt_g17(lr_lnn);
  kv.values["reg"] = fmt_g17(reg);
  kv.values["overparam_weight"] = fmt_g17(overparam_weight);
  kv.values["chunk"] = std::to_string(chunk);
  kv.values["h_test"] = join_ints(h_test);
  kv.values["scheme"] = scheme;
  kv.values["plots"] = plots ? "true" : "false";
  return kv;
}

void RunConfig::validate() const {
  if (epochs <= 0) throw std::runtime_error("config: epochs must be positive");
  if (data.dt <= 0.0) throw std::runtime_error("config: data.dt must be positive");
  if (h_train < 1) throw std::runtime_error("config: h_train must be >= 1");
  if (chunk < 1) throw std::runtime_error("config: chunk must be >= 1");
  if (!(alpha > 0.0 && alpha < M_PI / 4.0))
    throw std::runtime_error("config: alpha must lie in (0, pi/4)");
  if (mass_net != "spdnet" && mass_net != "cholesky" && mass_net != "shared-cholesky")
    throw std::runtime_error("config: unknown mass_net");
  if (ae_mode != "biorth" && ae_mode != "overparam")
    throw std::runtime_error("config: ae_mode must be biorth or overparam");
  if (scheme != "euler" && scheme != "rk4")
    throw std::runtime_error("config: scheme must be euler or rk4");
  for (const auto& s : spd_layers)
    if (s != "gyroai" && s != "gyrospdpp" && s != "reeig")
      throw std::runtime_error("config: unknown spd layer '" + s + "'");
  if (sequential_split <= 0.0 || sequential_split >= 1.0)
    throw std::runtime_error("config: sequential_split must lie in (0, 1)");
  if (kind != ExperimentKind::Lnn2Dof) {
    if (latent_dim < 1) throw std::runtime_error("config: latent_dim must be >= 1");
    for (size_t i = 0; i + 1 < ae_sizes.size(); ++i)
      if (ae_sizes[i] > ae_sizes[i + 1])
        throw std::runtime_error("config: ae_sizes must be monotone non-decreasing");
    if (!ae_sizes.empty() && latent_dim > ae_sizes.front())
      throw std::runtime_error("config: latent_dim must be <= first ae size");
  }
}

}  // namespace rolnn::cli
