#include "rolnn/systems.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace rolnn::sys {

PendulumConfig PendulumConfig::two_link() {
  return {{0.1, 0.1}, {0.4, 0.4}, {0.025, 0.025}, 9.81};
}

PendulumConfig PendulumConfig::four_link() {
  return {{1.0, 1.0, 1.0, 1.0}, {0.5, 0.5, 0.5, 0.5}, {0.05, 0.05, 0.05, 0.05}, 9.81};
}

namespace {

// transverse moment of inertia of a uniform solid cylinder about its center
double cylinder_inertia(double m, double l, double r) {
  return m * (3.0 * r * r + l * l) / 12.0;
}

}  // namespace

ChainTerms chain_terms(const PendulumConfig& cfg, const Vec& q, const Vec& dq) {
  const int n = cfg.dof();
  if (q.size() != n || dq.size() != n) throw num::DomainError("chain_terms: dimension mismatch");
  Vec th(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += q(i);
    th(i) = acc;
  }
  Vec lc(n), inertia(n);
  for (int i = 0; i < n; ++i) {
    lc(i) = 0.5 * cfg.length[i];
    inertia(i) = cylinder_inertia(cfg.mass[i], cfg.length[i], cfg.radius[i]);
  }
  auto u1 = [&](int j) { return Eigen::Vector2d(std::cos(th(j)), std::sin(th(j))); };
  auto u2 = [&](int j) { return Eigen::Vector2d(-std::sin(th(j)), std::cos(th(j))); };

  Mat m = Mat::Zero(n, n);
  std::vector<Mat> dm(n, Mat::Zero(n, n));
  Vec g = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    // J(:,k) = d p_i / d q_k, dJ[kk](:,k) = d^2 p_i / d q_k d q_kk
    Mat jac = Mat::Zero(2, n);
    std::vector<Mat> djac(n, Mat::Zero(2, n));
    for (int k = 0; k <= i; ++k) {
      Eigen::Vector2d col = lc(i) * u1(i);
      for (int j = k; j < i; ++j) col += cfg.length[j] * u1(j);
      jac.col(k) = col;
      for (int kk = 0; kk <= i; ++kk) {
        Eigen::Vector2d dcol = (kk <= i) ? Eigen::Vector2d(lc(i) * u2(i)) : Eigen::Vector2d::Zero();
        for (int j = k; j < i; ++j)
          if (kk <= j) dcol += cfg.length[j] * u2(j);
        djac[kk].col(k) = dcol;
      }
    }
    Vec jw = Vec::Zero(n);
    for (int k = 0; k <= i; ++k) jw(k) = 1.0;
    m += cfg.mass[i] * (jac.transpose() * jac) + inertia(i) * (jw * jw.transpose());
    for (int k = 0; k < n; ++k)
      dm[k] += cfg.mass[i] * (djac[k].transpose() * jac + jac.transpose() * djac[k]);
    for (int k = 0; k <= i; ++k) {
      double val = lc(i) * std::sin(th(i));
      for (int j = k; j < i; ++j) val += cfg.length[j] * std::sin(th(j));
      g(k) += cfg.mass[i] * cfg.gravity * val;
    }
  }
  Vec c(n);
  for (int k = 0; k < n; ++k) {
    double a1 = 0.0, a2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        a1 += dm[i](k, j) * dq(i) * dq(j);
        a2 += dm[k](i, j) * dq(i) * dq(j);
      }
    c(k) = a1 - 0.5 * a2;
  }
  return {m, c, g};
}

Vec chain_dynamics(const PendulumConfig& cfg, const Vec& q, const Vec& dq, const Vec& tau) {
  ChainTerms t = chain_terms(cfg, q, dq);
  return t.mass.llt().solve(tau - t.coriolis - t.gravity);
}

ChainTerms double_pendulum_terms(const PendulumConfig& cfg, const Vec& q, const Vec& dq) {
  if (cfg.dof() != 2) throw num::DomainError("double_pendulum_terms: config must have 2 links");
  const double m1 = cfg.mass[0], m2 = cfg.mass[1];
  const double l1 = cfg.length[0];
  const double lc1 = 0.5 * cfg.length[0], lc2 = 0.5 * cfg.length[1];
  const double i1 = cylinder_inertia(m1, cfg.length[0], cfg.radius[0]);
  const double i2 = cylinder_inertia(m2, cfg.length[1], cfg.radius[1]);
  const double grav = cfg.gravity;
  const double c2 = std::cos(q(1)), s2 = std::sin(q(1));

  Mat m(2, 2);
  m(0, 0) = i1 + m1 * lc1 * lc1 + i2 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2);
  m(0, 1) = i2 + m2 * (lc2 * lc2 + l1 * lc2 * c2);
  m(1, 0) = m(0, 1);
  m(1, 1) = i2 + m2 * lc2 * lc2;

  const double h = m2 * l1 * lc2 * s2;
  Vec c(2);
  c(0) = -h * dq(1) * (2.0 * dq(0) + dq(1));
  c(1) = h * dq(0) * dq(0);

  Vec g(2);
  g(0) = (m1 * lc1 + m2 * l1) * grav * std::sin(q(0)) + m2 * grav * lc2 * std::sin(q(0) + q(1));
  g(1) = m2 * grav * lc2 * std::sin(q(0) + q(1));
  return {m, c, g};
}

Vec double_pendulum_dynamics(const PendulumConfig& cfg, const Vec& q, const Vec& dq,
                             const Vec& tau) {
  ChainTerms t = double_pendulum_terms(cfg, q, dq);
  return t.mass.llt().solve(tau - t.coriolis - t.gravity);
}

double chain_energy(const PendulumConfig& cfg, const Vec& q, const Vec& dq) {
  const int n = cfg.dof();
  ChainTerms t = chain_terms(cfg, q, dq);
  double kin = 0.5 * dq.dot(t.mass * dq);
  // potential relative to the hanging configuration
  Vec th(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += q(i);
    th(i) = acc;
  }
  double pot = 0.0;
  for (int i = 0; i < n; ++i) {
    double y = -0.5 * cfg.length[i] * std::cos(th(i));
    for (int j = 0; j < i; ++j) y -= cfg.length[j] * std::cos(th(j));
    pot += cfg.mass[i] * cfg.gravity * y;
  }
  return kin + pot;
}

Trajectory simulate(const PendulumConfig& cfg, const Vec& q0, const Vec& dq0, double dt, int steps,
                    const ForceFn& force, lag::Scheme scheme) {
  Trajectory out;
  out.dt = dt;
  out.states.reserve(steps + 1);
  Vec q = q0, dq = dq0;
  for (int k = 0; k <= steps; ++k) {
    double t = k * dt;
    Vec tau = force ? force(t, q, dq) : Vec(Vec::Zero(q.size()));
    State s;
    s.q = q;
    s.dq = dq;
    s.tau = tau;
    s.ddq = chain_dynamics(cfg, q, dq, tau);
    out.states.push_back(s);
    if (k == steps) break;
    if (scheme == lag::Scheme::EulerForward) {
      q = q + dt * s.dq;
      dq = dq + dt * s.ddq;
    } else {
      auto acc = [&](double tt, const Vec& qq, const Vec& vv) {
        Vec tt_tau = force ? force(tt, qq, vv) : Vec(Vec::Zero(qq.size()));
        return chain_dynamics(cfg, qq, vv, tt_tau);
      };
      Vec k1q = dq, k1v = s.ddq;
      Vec k2q = dq + 0.5 * dt * k1v;
      Vec k2v = acc(t + 0.5 * dt, q + 0.5 * dt * k1q, dq + 0.5 * dt * k1v);
      Vec k3q = dq + 0.5 * dt * k2v;
      Vec k3v = acc(t + 0.5 * dt, q + 0.5 * dt * k2q, dq + 0.5 * dt * k2v);
      Vec k4q = dq + dt * k3v;
      Vec k4v = acc(t + dt, q + dt * k3q, dq + dt * k3v);
      q = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
      dq = dq + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
  }
  return out;
}

Vec SineReference::q(double t) const {
  Vec out(amplitude.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out(i) = amplitude(i) * std::sin(2.0 * M_PI * frequency(i) * t + phase(i));
  return out;
}

Vec SineReference::dq(double t) const {
  Vec out(amplitude.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    double w = 2.0 * M_PI * frequency(i);
    out(i) = amplitude(i) * w * std::cos(w * t + phase(i));
  }
  return out;
}

Vec SineReference::ddq(double t) const {
  Vec out(amplitude.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    double w = 2.0 * M_PI * frequency(i);
    out(i) = -amplitude(i) * w * w * std::sin(w * t + phase(i));
  }
  return out;
}

SineReference make_sine_reference(const Vec& q0, const Vec& amplitude, const Vec& frequency) {
  for (Eigen::Index i = 0; i < q0.size(); ++i)
    if (std::abs(q0(i)) > amplitude(i))
      throw num::DomainError("make_sine_reference: |q0| exceeds the amplitude");
  Vec phase(q0.size());
  for (Eigen::Index i = 0; i < q0.size(); ++i) phase(i) = std::asin(q0(i) / amplitude(i));
  return {amplitude, frequency, phase};
}

Vec SineTrackingController::operator()(double t, const Vec& q, const Vec& dq) const {
  ChainTerms terms = chain_terms(cfg, q, dq);
  Vec e = ref.q(t) - q;
  Vec de = ref.dq(t) - dq;
  Vec v = ref.ddq(t) + kp * e + kd * de;
  return terms.mass * v + terms.coriolis + terms.gravity;
}

void coupled16_expand(const Vec& q4, const Vec& dq4, const Vec& ddq4, Vec& q16, Vec& dq16,
                      Vec& ddq16) {
  if (q4.size() != 4 || dq4.size() != 4 || ddq4.size() != 4)
    throw num::DomainError("coupled16_expand: expected 4-DoF input");
  const double q1 = q4(0), q2 = q4(1), q3 = q4(2), qq4 = q4(3);
  const double d1 = dq4(0), d2 = dq4(1), d3 = dq4(2), d4 = dq4(3);
  const double a1 = ddq4(0), a2 = ddq4(1), a3 = ddq4(2), a4 = ddq4(3);
  q16.resize(16);
  dq16.resize(16);
  ddq16.resize(16);
  q16.head<4>() = q4;
  dq16.head<4>() = dq4;
  ddq16.head<4>() = ddq4;

  // q5 = q3 - cos(q2)
  q16(4) = q3 - std::cos(q2);
  dq16(4) = d3 + std::sin(q2) * d2;
  ddq16(4) = a3 + std::cos(q2) * d2 * d2 + std::sin(q2) * a2;
  // q6 = q1 + 0.1 sin(q2)
  q16(5) = q1 + 0.1 * std::sin(q2);
  dq16(5) = d1 + 0.1 * std::cos(q2) * d2;
  ddq16(5) = a1 + 0.1 * (-std::sin(q2) * d2 * d2 + std::cos(q2) * a2);
  // q7 = q4 cos(q2)
  q16(6) = qq4 * std::cos(q2);
  dq16(6) = d4 * std::cos(q2) - qq4 * std::sin(q2) * d2;
  ddq16(6) = a4 * std::cos(q2) - 2.0 * d4 * std::sin(q2) * d2 -
             qq4 * (std::cos(q2) * d2 * d2 + std::sin(q2) * a2);
  // q8 = q1 + q3^2
  q16(7) = q1 + q3 * q3;
  dq16(7) = d1 + 2.0 * q3 * d3;
  ddq16(7) = a1 + 2.0 * (d3 * d3 + q3 * a3);
  // q9 = 1.5 sin(q2)
  q16(8) = 1.5 * std::sin(q2);
  dq16(8) = 1.5 * std::cos(q2) * d2;
  ddq16(8) = 1.5 * (-std::sin(q2) * d2 * d2 + std::cos(q2) * a2);
  // q10 = -q4 q1
  q16(9) = -qq4 * q1;
  dq16(9) = -(d4 * q1 + qq4 * d1);
  ddq16(9) = -(a4 * q1 + 2.0 * d4 * d1 + qq4 * a1);
  // q11 = sin(q1)
  q16(10) = std::sin(q1);
  dq16(10) = std::cos(q1) * d1;
  ddq16(10) = -std::sin(q1) * d1 * d1 + std::cos(q1) * a1;
  // q12 = 0.4 q3 q4
  q16(11) = 0.4 * q3 * qq4;
  dq16(11) = 0.4 * (d3 * qq4 + q3 * d4);
  ddq16(11) = 0.4 * (a3 * qq4 + 2.0 * d3 * d4 + q3 * a4);
  // q13 = -0.9 q1 - q2 + q3 - 2 q4^2
  q16(12) = -0.9 * q1 - q2 + q3 - 2.0 * qq4 * qq4;
  dq16(12) = -0.9 * d1 - d2 + d3 - 4.0 * qq4 * d4;
  ddq16(12) = -0.9 * a1 - a2 + a3 - 4.0 * (d4 * d4 + qq4 * a4);
  // q14 = -3 sin(q3)
  q16(13) = -3.0 * std::sin(q3);
  dq16(13) = -3.0 * std::cos(q3) * d3;
  ddq16(13) = -3.0 * (-std::sin(q3) * d3 * d3 + std::cos(q3) * a3);
  // q15 = -2 q3^2
  q16(14) = -2.0 * q3 * q3;
  dq16(14) = -4.0 * q3 * d3;
  ddq16(14) = -4.0 * (d3 * d3 + q3 * a3);
  // q16 = -0.9 q1^2
  q16(15) = -0.9 * q1 * q1;
  dq16(15) = -1.8 * q1 * d1;
  ddq16(15) = -1.8 * (d1 * d1 + q1 * a1);
}

namespace {

constexpr double kDeg = M_PI / 180.0;

Trajectory expand_coupled(const Trajectory& base) {
  Trajectory out;
  out.dt = base.dt;
  out.states.reserve(base.states.size());
  for (const State& s : base.states) {
    State e;
    coupled16_expand(s.q, s.dq, s.ddq, e.q, e.dq, e.ddq);
    e.tau = Vec::Zero(16);
    e.tau.head<4>() = s.tau;
    out.states.push_back(std::move(e));
  }
  return out;
}

}  // namespace

Dataset generate_dataset(const DatasetSpec& spec) {
  if (spec.dt <= 0.0) throw num::DomainError("generate_dataset: dt must be positive");
  Dataset ds;
  ds.dt = spec.dt;
  ds.mode = spec.mode;
  ds.seed = spec.seed;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> q0d(spec.q0_min_deg * kDeg, spec.q0_max_deg * kDeg);
  const int steps = static_cast<int>(std::llround(spec.horizon_s / spec.dt));

  const bool coupled = spec.mode == DatasetMode::Coupled16;
  PendulumConfig cfg = coupled ? PendulumConfig::four_link() : PendulumConfig::two_link();
  const int n = cfg.dof();
  ds.dof = coupled ? 16 : n;

  for (int tr = 0; tr < spec.trajectories; ++tr) {
    Vec q0(n);
    for (int i = 0; i < n; ++i) q0(i) = q0d(rng);
    Vec dq0 = Vec::Zero(n);
    Trajectory t;
    switch (spec.mode) {
      case DatasetMode::Unactuated:
        t = simulate(cfg, q0, dq0, spec.dt, steps, nullptr);
        break;
      case DatasetMode::SineTracking: {
        std::uniform_real_distribution<double> ampd(spec.amp_min_deg * kDeg,
                                                    spec.amp_max_deg * kDeg);
        std::uniform_real_distribution<double> fd(spec.freq_min_hz, spec.freq_max_hz);
        Vec amp(n), freq(n);
        for (int i = 0; i < n; ++i) {
          amp(i) = ampd(rng);
          freq(i) = fd(rng);
        }
        // keep the start on the reference
        for (int i = 0; i < n; ++i)
          if (std::abs(q0(i)) > amp(i)) q0(i) = 0.9 * amp(i);
        SineReference ref = make_sine_reference(q0, amp, freq);
        SineTrackingController ctrl{cfg, ref};
        dq0 = ref.dq(0.0);
        t = simulate(cfg, q0, dq0, spec.dt, steps,
                     [&](double tt, const Vec& q, const Vec& dq) { return ctrl(tt, q, dq); });
        break;
      }
      case DatasetMode::Coupled16:
        t = expand_coupled(simulate(cfg, q0, dq0, spec.dt, steps, nullptr));
        break;
    }
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

std::vector<State> Dataset::flatten() const {
  std::vector<State> out;
  for (const auto& t : trajectories)
    out.insert(out.end(), t.states.begin(), t.states.end());
  return out;
}

std::vector<lag::Window> Dataset::windows(int horizon, int stride) const {
  std::vector<lag::Window> out;
  for (const auto& t : trajectories) {
    const int last = static_cast<int>(t.states.size()) - horizon - 1;
    for (int s = 0; s <= last; s += stride) {
      lag::Window w;
      for (int j = 0; j <= horizon; ++j) {
        const State& st = t.states[s + j];
        w.q.push_back(st.q);
        w.dq.push_back(st.dq);
        w.tau.push_back(st.tau.size() ? st.tau : Vec(Vec::Zero(st.q.size())));
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::string mode_name(DatasetMode m) {
  switch (m) {
    case DatasetMode::Unactuated: return "unactuated";
    case DatasetMode::SineTracking: return "sine-tracking";
    case DatasetMode::Coupled16: return "coupled16";
  }
  return "unknown";
}

std::optional<DatasetMode> mode_from_name(const std::string& s) {
  if (s == "unactuated") return DatasetMode::Unactuated;
  if (s == "sine-tracking") return DatasetMode::SineTracking;
  if (s == "coupled16") return DatasetMode::Coupled16;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kTextMagic = "rolnn-dataset-v1";
constexpr uint64_t kBinMagic = 0x524F4C4E4E445331ULL;  // "ROLNNDS1"

void append_g17(std::string& out, double v) {
  char buf[32];
  snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void save_dataset_text(const Dataset& ds, const std::filesystem::path& path) {
  std::string out;
  out.reserve(1 << 20);
  out += kTextMagic;
  out += "\nn ";
  out += std::to_string(ds.dof);
  out += "\ndt ";
  append_g17(out, ds.dt);
  out += "\nmode ";
  out += mode_name(ds.mode);
  out += "\nseed ";
  out += std::to_string(ds.seed);
  out += "\ntrajectories ";
  out += std::to_string(ds.trajectories.size());
  out += "\n";
  for (const auto& t : ds.trajectories) {
    out += "trajectory ";
    out += std::to_string(t.states.size());
    out += "\n";
    for (size_t k = 0; k < t.states.size(); ++k) {
      const State& s = t.states[k];
      append_g17(out, static_cast<double>(k) * ds.dt);
      auto put = [&](const Vec& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
          out += ' ';
          append_g17(out, v(i));
        }
      };
      put(s.q);
      put(s.dq);
      put(s.ddq);
      put(s.tau);
      out += "\n";
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_dataset_text: cannot open " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void save_dataset_binary(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_dataset_binary: cannot open " + path.string());
  auto w64 = [&](uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
  auto wd = [&](double v) { f.write(reinterpret_cast<const char*>(&v), 8); };
  w64(kBinMagic);
  w64(static_cast<uint64_t>(ds.dof));
  wd(ds.dt);
  w64(static_cast<uint64_t>(ds.mode));
  w64(ds.seed);
  w64(ds.trajectories.size());
  for (const auto& t : ds.trajectories) {
    w64(t.states.size());
    for (const State& s : t.states) {
      for (Eigen::Index i = 0; i < ds.dof; ++i) wd(s.q(i));
      for (Eigen::Index i = 0; i < ds.dof; ++i) wd(s.dq(i));
      for (Eigen::Index i = 0; i < ds.dof; ++i) wd(s.ddq(i));
      for (Eigen::Index i = 0; i < ds.dof; ++i) wd(s.tau(i));
    }
  }
}

namespace {

Dataset load_text(std::ifstream& f, const std::filesystem::path& path) {
  Dataset ds;
  std::string line;
  std::getline(f, line);  // magic, checked by caller
  int row = 1;
  auto fail = [&](const std::string& why, int col) -> void { throw SchemaError(path.string() + ": " + why, row, col); };
  auto expect_kv = [&](const std::string& key) -> std::string {
    if (!std::getline(f, line)) fail("missing header line '" + key + "'", 0);
    ++row;
    std::istringstream ss(line);
    std::string k, v;
    ss >> k;
    std::getline(ss, v);
    if (k != key) fail("expected header '" + key + "', got '" + k + "'", 0);
    return v.empty() ? v : v.substr(1);
  };
  ds.dof = std::stoi(expect_kv("n"));
  if (ds.dof <= 0) fail("n must be positive", 0);
  ds.dt = std::stod(expect_kv("dt"));
  if (!(ds.dt > 0.0)) fail("dt must be positive", 0);
  auto mode = mode_from_name(expect_kv("mode"));
  if (!mode) fail("unknown mode", 0);
  ds.mode = *mode;
  ds.seed = std::stoull(expect_kv("seed"));
  const long ntraj = std::stol(expect_kv("trajectories"));

  const int per_row = 1 + 4 * ds.dof;
  for (long tr = 0; tr < ntraj; ++tr) {
    if (!std::getline(f, line)) fail("missing trajectory header", 0);
    ++row;
    std::istringstream hs(line);
    std::string key;
    long count = -1;
    hs >> key >> count;
    if (key != "trajectory" || count < 0) fail("bad trajectory header", 0);
    Trajectory t;
    t.dt = ds.dt;
    double prev_t = 0.0;
    for (long k = 0; k < count; ++k) {
      if (!std::getline(f, line)) fail("truncated trajectory", 0);
      ++row;
      std::istringstream ss(line);
      std::vector<double> vals;
      vals.reserve(per_row);
      double v;
      while (ss >> v) vals.push_back(v);
      if (static_cast<int>(vals.size()) != per_row)
        fail("expected " + std::to_string(per_row) + " columns, got " +
                 std::to_string(vals.size()),
             static_cast<int>(vals.size()));
      for (size_t i = 0; i < vals.size(); ++i)
        if (!std::isfinite(vals[i])) fail("non-finite value", static_cast<int>(i));
      if (k > 0) {
        double step = vals[0] - prev_t;
        if (std::abs(step - ds.dt) > 1e-9 * std::max(1.0, std::abs(vals[0])))
          fail("non-uniform time step", 0);
      }
      prev_t = vals[0];
      State s;
      s.q.resize(ds.dof);
      s.dq.resize(ds.dof);
      s.ddq.resize(ds.dof);
      s.tau.resize(ds.dof);
      for (int i = 0; i < ds.dof; ++i) {
        s.q(i) = vals[1 + i];
        s.dq(i) = vals[1 + ds.dof + i];
        s.ddq(i) = vals[1 + 2 * ds.dof + i];
        s.tau(i) = vals[1 + 3 * ds.dof + i];
      }
      t.states.push_back(std::move(s));
    }
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

Dataset load_binary(std::ifstream& f, const std::filesystem::path& path) {
  auto r64 = [&]() {
    uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto rd = [&]() {
    double v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  Dataset ds;
  r64();  // magic
  ds.dof = static_cast<int>(r64());
  ds.dt = rd();
  ds.mode = static_cast<DatasetMode>(r64());
  ds.seed = r64();
  uint64_t ntraj = r64();
  for (uint64_t tr = 0; tr < ntraj; ++tr) {
    uint64_t count = r64();
    Trajectory t;
    t.dt = ds.dt;
    for (uint64_t k = 0; k < count; ++k) {
      State s;
      s.q.resize(ds.dof);
      s.dq.resize(ds.dof);
      s.ddq.resize(ds.dof);
      s.tau.resize(ds.dof);
      for (int i = 0; i < ds.dof; ++i) s.q(i) = rd();
      for (int i = 0; i < ds.dof; ++i) s.dq(i) = rd();
      for (int i = 0; i < ds.dof; ++i) s.ddq(i) = rd();
      for (int i = 0; i < ds.dof; ++i) s.tau(i) = rd();
      t.states.push_back(std::move(s));
    }
    if (!f) throw SchemaError(path.string() + ": truncated binary dataset", -1, -1);
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_dataset: cannot open " + path.string());
  uint64_t magic = 0;
  f.read(reinterpret_cast<char*>(&magic), 8);
  f.seekg(0);
  if (magic == kBinMagic) return load_binary(f, path);
  std::string first;
  std::getline(f, first);
  f.seekg(0);
  if (first == kTextMagic) return load_text(f, path);
  throw SchemaError(path.string() + ": unrecognized dataset header", 0, 0);
}

Dataset ingest_trajectories(const std::filesystem::path& path) { return load_dataset(path); }

}  // namespace rolnn::sys
