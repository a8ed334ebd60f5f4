#pragma once

#include "rolnn/checkpoint.hpp"
#include "rolnn/config.hpp"
#include "rolnn/svg.hpp"

namespace rolnn::cli {

struct EpochLog {
  int epoch = 0;
  lag::LossBreakdown loss;
  double ae_residual = 0.0;  // max biorthogonality violation (ROLNN runs)
};

/// Training pools: acc-loss samples, ode-loss windows, held-out test
/// trajectories, all carved deterministically from one dataset.
struct TrainData {
  double dt = 0.0;
  int dof = 0;
  std::vector<lag::State> samples;
  std::vector<lag::Window> windows;
  std::vector<lag::Trajectory> test;
};

TrainData prepare_data(const RunConfig& cfg, const sys::Dataset& ds);
sys::Dataset obtain_dataset(const RunConfig& cfg);

lag::LagrangianModel build_lnn_model(const RunConfig& cfg, int dof);
rom::ROLNNModel build_rolnn_model(const RunConfig& cfg, int dof);

struct LnnRun {
  lag::LagrangianModel model;
  std::vector<EpochLog> log;
  int64_t adam_step = 0;
  std::vector<opt::RiemannianAdam::CompState> adam_state;
  std::vector<opt::ParamGroup> groups;
};
LnnRun train_lnn(const RunConfig& cfg, const TrainData& data);

struct RolnnRun {
  rom::ROLNNModel model;
  std::vector<EpochLog> log;
  int64_t adam_step = 0;
  std::vector<opt::RiemannianAdam::CompState> adam_state;
  std::vector<opt::ParamGroup> groups;
  /// projection-property residuals sampled during training (criterion
  /// hooks): pairs of (step, max |rho(phi(z)) - z|) and d(rho)d(phi) drift
  std::vector<std::pair<int, double>> projection_residuals;
  std::vector<std::pair<int, double>> tangent_residuals;
};
RolnnRun train_rolnn(const RunConfig& cfg, const TrainData& data);

void write_loss_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);

/// Mean test acceleration error of a full-order model.
double lnn_test_acc_error(const lag::LagrangianModel& m,
                          const std::vector<lag::Trajectory>& test, int max_samples = 2000);
/// Mean H-step velocity rollout error with re-encoding every H steps.
double lnn_rollout_vel_error(const lag::LagrangianModel& m,
                             const std::vector<lag::Trajectory>& test, int h_test,
                             lag::Scheme scheme);

// ---------------------------------------------------------------------------
// CLI commands; each returns a process exit code (0 ok, 1 usage, 2 numeric).
// ---------------------------------------------------------------------------

int cmd_gen_data(const std::filesystem::path& config, const std::filesystem::path& out_dir);
int cmd_train(const std::filesystem::path& config, uint64_t seed_override, bool has_seed,
              const std::filesystem::path& out_override);
int cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
             const std::vector<int>& h_test, const std::string& scheme,
             const std::filesystem::path& out_dir, bool plots);
int cmd_inspect(const std::filesystem::path& checkpoint);

}  // namespace rolnn::cli
