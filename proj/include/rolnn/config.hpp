#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rolnn/systems.hpp"

namespace rolnn::cli {

/// Flat key = value configuration file. Lines starting with '#' are
/// comments; unknown keys are rejected. Writing back emits keys sorted.
struct KvFile {
  std::map<std::string, std::string> values;

  static KvFile parse_file(const std::filesystem::path& p);
  static KvFile parse_string(const std::string& text);
  void write_file(const std::filesystem::path& p) const;

  bool has(const std::string& k) const { return values.count(k) > 0; }
  std::string get(const std::string& k, const std::string& dflt) const;
  double get_num(const std::string& k, double dflt) const;
  long get_int(const std::string& k, long dflt) const;
  std::vector<int> get_ints(const std::string& k, const std::vector<int>& dflt) const;
};

enum class ExperimentKind { Lnn2Dof, RolnnCoupled16, RolnnIngested };
enum class LossKind { Acc, Ode };
enum class Schedule { Joint, Sequential };

/// Fully-resolved run settings; defaults follow the reference experiment
/// recipes and every run writes the resolved copy next to its outputs.
struct RunConfig {
  ExperimentKind kind = ExperimentKind::Lnn2Dof;
  uint64_t seed = 0;
  std::string dataset;      // path; empty = generate per spec below
  std::string out = "run";  // output directory

  // data generation (when dataset is empty)
  sys::DatasetSpec data;
  int train_samples = 1000;   // subsampled from the pool, acc training
  int train_windows = 512;    // ode training
  int test_trajectories = 4;  // held out from the pool tail

  // model
  std::string mass_net = "spdnet";  // spdnet | cholesky | shared-cholesky
  bool learned_basepoint = false;
  std::vector<std::string> spd_layers;  // gyroai | gyrospdpp | reeig
  std::vector<int> hidden = {64, 64};
  int latent_dim = 4;
  std::vector<int> ae_sizes = {8, 16, 16, 16};  // n_1..n_L
  std::string ae_mode = "biorth";               // biorth | overparam
  double alpha = M_PI / 8.0;
  double reeig_eps = 1e-4;

  // training
  LossKind loss = LossKind::Acc;
  int h_train = 8;
  Schedule schedule = Schedule::Joint;
  double sequential_split = 0.5;
  int epochs = 2000;
  double lr_ae = 5e-2;
  double lr_lnn = 1e-5;
  double reg = 1e-6;
  double overparam_weight = 1e-5;
  int chunk = 256;

  // evaluation
  std::vector<int> h_test = {8, 25, 50};
  std::string scheme = "euler";  // euler | rk4
  bool plots = false;

  static RunConfig from_kv(const KvFile& kv);
  KvFile to_kv() const;
  void validate() const;
};

std::string kind_name(ExperimentKind k);
std::optional<ExperimentKind> kind_from_name(const std::string& s);

}  // namespace rolnn::cli
