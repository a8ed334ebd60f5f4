#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "rolnn/lagrangian.hpp"

namespace rolnn::sys {

using lag::State;
using lag::Trajectory;
using num::Mat;
using num::Vec;

/// Planar chain of hinged uniform solid cylinders, hanging at q = 0.
struct PendulumConfig {
  std::vector<double> mass;    // kg
  std::vector<double> length;  // m
  std::vector<double> radius;  // m
  double gravity = 9.81;

  int dof() const { return static_cast<int>(mass.size()); }
  static PendulumConfig two_link();   // m=0.1, l=0.4, r=0.025 per link
  static PendulumConfig four_link();  // m=1.0, l=0.5, r=0.05 per link
};

/// Mass matrix, Coriolis vector and gravity vector of the chain.
struct ChainTerms {
  Mat mass;
  Vec coriolis;
  Vec gravity;
};
ChainTerms chain_terms(const PendulumConfig& cfg, const Vec& q, const Vec& dq);

/// Forward dynamics of the chain: M ddq = tau - c - g.
Vec chain_dynamics(const PendulumConfig& cfg, const Vec& q, const Vec& dq, const Vec& tau);

/// Two-link closed form (independent cross-check of chain_terms at n = 2).
ChainTerms double_pendulum_terms(const PendulumConfig& cfg, const Vec& q, const Vec& dq);
Vec double_pendulum_dynamics(const PendulumConfig& cfg, const Vec& q, const Vec& dq,
                             const Vec& tau);

double chain_energy(const PendulumConfig& cfg, const Vec& q, const Vec& dq);

/// RK4 (or Euler) rollout of the true system under a force callback.
using ForceFn = std::function<Vec(double t, const Vec& q, const Vec& dq)>;
Trajectory simulate(const PendulumConfig& cfg, const Vec& q0, const Vec& dq0, double dt, int steps,
                    const ForceFn& force, lag::Scheme scheme = lag::Scheme::RK4);

/// Sinusoidal joint references q_ref,i = A_i sin(2 pi f_i t + phase_i) with
/// phase_i = arcsin(q0_i / A_i).
struct SineReference {
  Vec amplitude;  // rad
  Vec frequency;  // Hz
  Vec phase;      // rad
  Vec q(double t) const;
  Vec dq(double t) const;
  Vec ddq(double t) const;
};
SineReference make_sine_reference(const Vec& q0, const Vec& amplitude, const Vec& frequency);

/// Computed-torque tracking: tau = M(q)(ddq_ref + Kp e + Kd de) + c + g.
struct SineTrackingController {
  PendulumConfig cfg;
  SineReference ref;
  double kp = 100.0;
  double kd = 20.0;
  Vec operator()(double t, const Vec& q, const Vec& dq) const;
};

/// Nonlinear couplings that expand 4 DoF into DoFs 5..16, with exact first
/// and second time derivatives by the chain rule.
void coupled16_expand(const Vec& q4, const Vec& dq4, const Vec& ddq4, Vec& q16, Vec& dq16,
                      Vec& ddq16);

enum class DatasetMode { Unactuated, SineTracking, Coupled16 };

struct DatasetSpec {
  DatasetMode mode = DatasetMode::Unactuated;
  double dt = 1e-3;
  double horizon_s = 2.0;
  int trajectories = 30;
  double q0_min_deg = 0.0;
  double q0_max_deg = 30.0;
  double amp_min_deg = 1.0;   // sine-tracking amplitude range
  double amp_max_deg = 30.0;
  double freq_min_hz = 1.0 / 15.0;
  double freq_max_hz = 1.0;
  uint64_t seed = 0;
};

struct Dataset {
  int dof = 0;
  double dt = 0.0;
  DatasetMode mode = DatasetMode::Unactuated;
  uint64_t seed = 0;
  std::vector<Trajectory> trajectories;

  std::vector<State> flatten() const;
  /// H-step windows with stride, from every trajectory.
  std::vector<lag::Window> windows(int horizon, int stride) const;
};

Dataset generate_dataset(const DatasetSpec& spec);

/// Columnar text format (version header, then one row per step) and a
/// binary container; both round-trip exactly.
void save_dataset_text(const Dataset& ds, const std::filesystem::path& path);
void save_dataset_binary(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);  // sniffs the format

/// Structured ingestion failure with row/column position.
struct SchemaError : std::runtime_error {
  int row, col;
  SchemaError(const std::string& w, int r, int c) : std::runtime_error(w), row(r), col(c) {}
};

/// Validating reader for external trajectory files (text format): checks
/// dimensions, uniform dt, and finiteness.
Dataset ingest_trajectories(const std::filesystem::path& path);

std::string mode_name(DatasetMode m);
std::optional<DatasetMode> mode_from_name(const std::string& s);

}  // namespace rolnn::sys
