#include "rolnn/experiments.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

namespace rolnn::cli {

namespace {

std::string g17(double v) {
  char buf[32];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int env_threads() {
  const char* s = std::getenv("ROLNN_THREADS");
  if (!s) return 1;
  int n = std::atoi(s);
  return n < 1 ? 1 : n;
}

net::SpdLayerKind layer_from_name(const std::string& s) {
  if (s == "gyroai") return net::SpdLayerKind::GyroAI;
  if (s == "gyrospdpp") return net::SpdLayerKind::GyroSpdPP;
  return net::SpdLayerKind::ReEig;
}

}  // namespace

sys::Dataset obtain_dataset(const RunConfig& cfg) {
  if (!cfg.dataset.empty()) return sys::ingest_trajectories(cfg.dataset);
  return sys::generate_dataset(cfg.data);
}

TrainData prepare_data(const RunConfig& cfg, const sys::Dataset& ds) {
  TrainData out;
  out.dt = ds.dt;
  out.dof = ds.dof;
  const int ntest = std::min<int>(cfg.test_trajectories,
                                  std::max<int>(0, static_cast<int>(ds.trajectories.size()) - 1));
  const int ntrain = static_cast<int>(ds.trajectories.size()) - ntest;
  for (int i = ntrain; i < static_cast<int>(ds.trajectories.size()); ++i)
    out.test.push_back(ds.trajectories[i]);

  sys::Dataset pool;
  pool.dt = ds.dt;
  pool.dof = ds.dof;
  for (int i = 0; i < ntrain; ++i) pool.trajectories.push_back(ds.trajectories[i]);

  // deterministic subsampling from the training pool
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<lag::State> all = pool.flatten();
  if (cfg.train_samples >= static_cast<int>(all.size())) {
    out.samples = all;
  } else {
    std::vector<size_t> idx(all.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cfg.train_samples);
    std::sort(idx.begin(), idx.end());
    for (size_t i : idx) out.samples.push_back(all[i]);
  }
  std::vector<lag::Window> allw = pool.windows(cfg.h_train, 1);
  if (cfg.train_windows >= static_cast<int>(allw.size())) {
    out.windows = allw;
  } else {
    std::vector<size_t> idx(allw.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cfg.train_windows);
    std::sort(idx.begin(), idx.end());
    for (size_t i : idx) out.windows.push_back(allw[i]);
  }
  return out;
}

lag::LagrangianModel build_lnn_model(const RunConfig& cfg, int dof) {
  std::mt19937_64 rng(cfg.seed);
  lag::LagrangianModel m;
  m.dim = dof;
  m.reg = cfg.reg;
  if (cfg.mass_net == "spdnet") {
    m.kind = lag::MassKind::SpdNet;
    std::vector<net::SpdLayerKind> layers;
    for (const auto& s : cfg.spd_layers) layers.push_back(layer_from_name(s));
    m.spd = net::spdnet_init(dof, dof, cfg.hidden, cfg.learned_basepoint, layers, rng,
                             cfg.reeig_eps);
  } else if (cfg.mass_net == "cholesky") {
    m.kind = lag::MassKind::Cholesky;
    m.chol = net::cholesky_init(dof, dof, cfg.hidden, rng);
  } else {
    m.kind = lag::MassKind::SharedCholesky;
    m.shared = net::shared_trunk_init(dof, dof, cfg.hidden, rng);
  }
  if (m.kind != lag::MassKind::SharedCholesky) {
    std::vector<int> sizes{dof};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(1);
    m.potential = net::mlp_init(sizes, net::Activation::SoftPlus, rng);
  }
  return m;
}

rom::ROLNNModel build_rolnn_model(const RunConfig& cfg, int dof) {
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> sizes{cfg.latent_dim};
  sizes.insert(sizes.end(), cfg.ae_sizes.begin(), cfg.ae_sizes.end());
  if (sizes.back() != dof)
    throw std::runtime_error("config: last ae size (" + std::to_string(sizes.back()) +
                             ") must equal the data dimension (" + std::to_string(dof) + ")");
  rom::ROLNNModel m = rom::rolnn_init(sizes, cfg.hidden, cfg.alpha, cfg.reg, rng,
                                      cfg.ae_mode == "biorth");
  return m;
}

namespace {

// Deterministic chunked gradient accumulation: per-chunk tapes evaluated in
// any order (optionally by worker threads) and reduced in chunk order.
struct ChunkGrad {
  geo::ProductTangent ambient;
  lag::LossBreakdown parts;
};

template <class ChunkFn>
std::pair<geo::ProductTangent, lag::LossBreakdown> accumulate_chunks(
    const geo::ProductPoint& pt, int nitems, int chunk_size, const ChunkFn& eval_chunk) {
  const int nchunks = (nitems + chunk_size - 1) / chunk_size;
  std::vector<ChunkGrad> grads(static_cast<size_t>(std::max(nchunks, 1)));
  const int threads = std::min(env_threads(), std::max(nchunks, 1));
  if (threads <= 1) {
    for (int c = 0; c < nchunks; ++c)
      grads[c] = eval_chunk(c * chunk_size, std::min(nitems, (c + 1) * chunk_size), c == 0);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (;;) {
        int c = next.fetch_add(1);
        if (c >= nchunks) return;
        grads[c] = eval_chunk(c * chunk_size, std::min(nitems, (c + 1) * chunk_size), c == 0);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  geo::ProductTangent acc = geo::zero_tangent(pt);
  lag::LossBreakdown parts;
  for (int c = 0; c < nchunks; ++c) {
    for (size_t i = 0; i < acc.comps.size(); ++i) {
      acc.comps[i].a += grads[c].ambient.comps[i].a;
      if (acc.comps[i].b.size()) acc.comps[i].b += grads[c].ambient.comps[i].b;
    }
    parts.ae += grads[c].parts.ae;
    parts.lnn_d += grads[c].parts.lnn_d;
    parts.lnn_n += grads[c].parts.lnn_n;
    parts.reg += grads[c].parts.reg;
    parts.clamped_windows += grads[c].parts.clamped_windows;
  }
  parts.total = ((parts.ae + parts.lnn_d) + parts.lnn_n) + parts.reg;
  return {acc, parts};
}

template <class LossFn>
ChunkGrad tape_chunk(const geo::ProductPoint& pt, const LossFn& loss) {
  diff::Tape tape;
  diff::TapeEngine eng{&tape};
  std::vector<diff::LeafPair> leaves;
  leaves.reserve(pt.comps.size());
  for (const auto& c : pt.comps) {
    diff::LeafPair lp;
    lp.a = eng.lift(c.a);
    lp.b = (c.kind == geo::Kind::Biorth) ? eng.lift(c.b) : diff::MVar{};
    leaves.push_back(lp);
  }
  auto [out, parts] = loss(eng, leaves);
  if (!std::isfinite(parts.total))
    throw diff::TrainingDivergence("training: non-finite loss value");
  tape.backward(out.i);
  ChunkGrad g;
  g.parts = parts;
  g.ambient.comps.reserve(pt.comps.size());
  for (size_t i = 0; i < pt.comps.size(); ++i) {
    geo::Component c;
    c.kind = pt.comps[i].kind;
    c.a = tape.adjoint(leaves[i].a.i);
    if (c.kind == geo::Kind::Biorth) c.b = tape.adjoint(leaves[i].b.i);
    if (!c.a.allFinite() || (c.b.size() && !c.b.allFinite()))
      throw diff::TrainingDivergence("training: non-finite gradient component");
    g.ambient.comps.push_back(std::move(c));
  }
  return g;
}

}  // namespace

LnnRun train_lnn(const RunConfig& cfg, const TrainData& data) {
  LnnRun run;
  run.model = build_lnn_model(cfg, data.dof);
  geo::ProductPoint pt = lag::collect_params(run.model);
  std::vector<size_t> all(pt.comps.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  opt::RiemannianAdam adam({{"lnn", all, cfg.lr_lnn}}, {}, pt);

  const bool acc = cfg.loss == LossKind::Acc;
  const int nitems = acc ? static_cast<int>(data.samples.size())
                         : static_cast<int>(data.windows.size());
  if (nitems == 0) throw std::runtime_error("train_lnn: empty training set");
  double norm;
  if (acc) {
    norm = 1.0 / static_cast<double>(nitems);
  } else {
    int steps = 0;
    for (const auto& w : data.windows) steps += w.horizon();
    norm = 1.0 / static_cast<double>(steps);
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto eval_chunk = [&](int lo, int hi, bool first) {
      return tape_chunk(pt, [&](diff::TapeEngine& e, const std::vector<diff::LeafPair>& lv) {
        auto comps = lag::comps_from_leaves(lv);
        size_t k = 0;
        auto b = lag::bind_lagrangian(e, run.model, comps, k);
        if (acc) {
          std::span<const lag::State> sp(data.samples.data() + lo, data.samples.data() + hi);
          return lag::lnn_acc_loss_t(e, b, sp, norm, first);
        }
        std::span<const lag::Window> sp(data.windows.data() + lo, data.windows.data() + hi);
        return lag::lnn_multistep_loss_t(e, b, sp, data.dt, norm, first);
      });
    };
    auto [ambient, parts] = accumulate_chunks(pt, nitems, cfg.chunk, eval_chunk);
    geo::ProductTangent grad = geo::to_riemannian(pt, ambient);
    pt = adam.step(pt, grad);
    EpochLog log;
    log.epoch = epoch;
    log.loss = parts;
    run.log.push_back(log);
  }
  lag::assign_params(run.model, pt);
  run.adam_step = adam.step_count();
  run.adam_state = adam.state();
  run.groups = adam.groups();
  return run;
}

namespace {

// projection-property residuals on a deterministic probe set
std::pair<double, double> projection_probe(const rom::ROLNNModel& m) {
  diff::ValueEngine e;
  auto b = rom::bind_value(e, m);
  std::mt19937_64 rng(424243);
  std::normal_distribution<double> nd;
  double worst_p = 0.0, worst_t = 0.0;
  const int d = m.latent_dim();
  for (int rep = 0; rep < 8; ++rep) {
    num::Vec z(d);
    for (int i = 0; i < d; ++i) z(i) = nd(rng);
    num::Mat dec = net::ae_decode(e, b.ae, num::Mat(z));
    num::Mat back = net::ae_encode(e, b.ae, dec);
    worst_p = std::max(worst_p, (num::Vec(back) - z).cwiseAbs().maxCoeff());
    num::Mat dphi = net::ae_decode_jacobian(e, b.ae, num::Mat(z));
    num::Mat drho = net::ae_encode_jacobian(e, b.ae, dec);
    worst_t = std::max(
        worst_t, (num::Mat(drho * dphi) - num::Mat::Identity(d, d)).cwiseAbs().maxCoeff());
  }
  return {worst_p, worst_t};
}

}  // namespace

RolnnRun train_rolnn(const RunConfig& cfg, const TrainData& data) {
  RolnnRun run;
  run.model = build_rolnn_model(cfg, data.dof);
  geo::ProductPoint pt = rom::collect_params(run.model);
  rom::GroupSplit split = rom::param_groups(run.model);
  opt::RiemannianAdam adam({{"ae", split.ae, cfg.lr_ae}, {"lnn", split.lnn, cfg.lr_lnn}}, {}, pt);

  rom::OverparamConfig op;
  op.enabled = cfg.ae_mode == "overparam";
  op.weight = cfg.overparam_weight;

  const bool acc = cfg.loss == LossKind::Acc;
  const int nitems = acc ? static_cast<int>(data.samples.size())
                         : static_cast<int>(data.windows.size());
  if (nitems == 0) throw std::runtime_error("train_rolnn: empty training set");
  double norm;
  if (acc) {
    norm = 1.0 / static_cast<double>(nitems);
  } else {
    int steps = 0;
    for (const auto& w : data.windows) steps += w.horizon();
    norm = 1.0 / static_cast<double>(steps);
  }

  const int switch_epoch = cfg.schedule == Schedule::Sequential
                               ? static_cast<int>(cfg.sequential_split * cfg.epochs)
                               : -1;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rom::LossMask mask;
    if (cfg.schedule == Schedule::Sequential) {
      if (epoch < switch_epoch) {
        mask = {true, false};
        if (epoch == 0) adam.set_group_lr("lnn", 0.0);
      } else {
        mask = {false, true};
        if (epoch == switch_epoch) {
          adam.set_group_lr("lnn", cfg.lr_lnn);
          adam.set_group_lr("ae", 0.0);
        }
      }
    }
    const bool reg_active = mask.lnn;
    auto eval_chunk = [&](int lo, int hi, bool first) {
      return tape_chunk(pt, [&](diff::TapeEngine& e, const std::vector<diff::LeafPair>& lv) {
        auto comps = lag::comps_from_leaves(lv);
        size_t k = 0;
        auto b = rom::bind_rolnn(e, run.model, comps, k);
        if (acc) {
          std::span<const lag::State> sp(data.samples.data() + lo, data.samples.data() + hi);
          return rom::rolnn_acc_loss_t(e, b, sp, mask, op, norm, first && reg_active);
        }
        std::span<const lag::Window> sp(data.windows.data() + lo, data.windows.data() + hi);
        return rom::rolnn_ode_loss_t(e, b, sp, data.dt, mask, op, norm, first && reg_active);
      });
    };
    auto [ambient, parts] = accumulate_chunks(pt, nitems, cfg.chunk, eval_chunk);
    geo::ProductTangent grad = geo::to_riemannian(pt, ambient);
    pt = adam.step(pt, grad);

    EpochLog log;
    log.epoch = epoch;
    log.loss = parts;
    rom::ROLNNModel cur = run.model;
    rom::assign_params(cur, pt);
    log.ae_residual = cur.ae.biorth_residual();
    run.log.push_back(log);
    if (epoch % 100 == 0 || epoch + 1 == cfg.epochs) {
      auto [wp, wt] = projection_probe(cur);
      run.projection_residuals.push_back({epoch, wp});
      run.tangent_residuals.push_back({epoch, wt});
    }
  }
  rom::assign_params(run.model, pt);
  run.adam_step = adam.step_count();
  run.adam_state = adam.state();
  run.groups = adam.groups();
  return run;
}

void write_loss_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "epoch,total,ae,lnn_d,lnn_n,reg,clamped_windows,ae_residual\n";
  for (const auto& l : log)
    f << l.epoch << "," << g17(l.loss.total) << "," << g17(l.loss.ae) << ","
      << g17(l.loss.lnn_d) << "," << g17(l.loss.lnn_n) << "," << g17(l.loss.reg) << ","
      << l.loss.clamped_windows << "," << g17(l.ae_residual) << "\n";
}

double lnn_test_acc_error(const lag::LagrangianModel& m,
                          const std::vector<lag::Trajectory>& test, int max_samples) {
  double acc = 0.0;
  int count = 0;
  for (const auto& t : test) {
    size_t stride = std::max<size_t>(1, t.states.size() * test.size() / max_samples);
    for (size_t k = 0; k < t.states.size(); k += stride) {
      const lag::State& s = t.states[k];
      num::Vec pred = lag::forward_dynamics(
          m, s.q, s.dq, s.tau.size() ? s.tau : num::Vec(num::Vec::Zero(s.q.size())));
      acc += (pred - s.ddq).norm();
      ++count;
    }
  }
  return count ? acc / count : 0.0;
}

double lnn_rollout_vel_error(const lag::LagrangianModel& m,
                             const std::vector<lag::Trajectory>& test, int h_test,
                             lag::Scheme scheme) {
  double acc = 0.0;
  int count = 0;
  for (const auto& t : test) {
    const int total = static_cast<int>(t.states.size());
    for (int start = 0; start + 1 < total; start += h_test) {
      lag::State s0 = t.states[start];
      const int span = std::min(h_test, total - 1 - start);
      std::vector<num::Vec> taus;
      for (int k = 0; k <= span; ++k)
        taus.push_back(t.states[start + k].tau.size() ? t.states[start + k].tau
                                                      : num::Vec(num::Vec::Zero(s0.q.size())));
      lag::Trajectory pred;
      try {
        pred = lag::integrate(m, s0, taus, span, t.dt, scheme);
      } catch (const lag::DivergenceError&) {
        acc += 1e6 * span;
        count += span;
        continue;
      }
      for (int k = 1; k <= span; ++k) {
        acc += (pred.states[k].dq - t.states[start + k].dq).norm();
        ++count;
      }
    }
  }
  return count ? acc / count : 0.0;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_gen_data(const std::filesystem::path& config, const std::filesystem::path& out_dir) {
  try {
    RunConfig cfg = RunConfig::from_kv(KvFile::parse_file(config));
    std::filesystem::create_directories(out_dir);
    sys::Dataset ds = sys::generate_dataset(cfg.data);
    sys::save_dataset_text(ds, out_dir / "dataset.txt");
    sys::save_dataset_binary(ds, out_dir / "dataset.bin");
    KvFile manifest = cfg.to_kv();
    manifest.values["manifest.dof"] = std::to_string(ds.dof);
    manifest.values["manifest.samples_per_trajectory"] =
        std::to_string(ds.trajectories.empty() ? 0 : ds.trajectories[0].states.size());
    manifest.write_file(out_dir / "manifest.txt");
    std::cout << "wrote " << (out_dir / "dataset.txt").string() << " ("
              << ds.trajectories.size() << " trajectories, dof " << ds.dof << ")\n";
    return 0;
  } catch (const num::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

void write_checkpoint_from_lnn(const LnnRun& run, int epochs,
                               const std::filesystem::path& path) {
  ckpt::Checkpoint c;
  c.kind = ckpt::Checkpoint::ModelKind::Lnn;
  c.lnn = run.model;
  c.adam_step = run.adam_step;
  c.adam_state = run.adam_state;
  c.groups = run.groups;
  c.epoch = epochs;
  ckpt::save_checkpoint(c, path);
}

void write_checkpoint_from_rolnn(const RolnnRun& run, int epochs,
                                 const std::filesystem::path& path) {
  ckpt::Checkpoint c;
  c.kind = ckpt::Checkpoint::ModelKind::Rolnn;
  c.rolnn = run.model;
  c.adam_step = run.adam_step;
  c.adam_state = run.adam_state;
  c.groups = run.groups;
  c.epoch = epochs;
  ckpt::save_checkpoint(c, path);
}

}  // namespace

int cmd_train(const std::filesystem::path& config, uint64_t seed_override, bool has_seed,
              const std::filesystem::path& out_override) {
  try {
    RunConfig cfg = RunConfig::from_kv(KvFile::parse_file(config));
    if (has_seed) {
      cfg.seed = seed_override;
      cfg.data.seed = seed_override;
    }
    if (!out_override.empty()) cfg.out = out_override.string();
    std::filesystem::create_directories(cfg.out);
    cfg.to_kv().write_file(std::filesystem::path(cfg.out) / "config.resolved");

    sys::Dataset ds = obtain_dataset(cfg);
    TrainData data = prepare_data(cfg, ds);
    if (cfg.kind == ExperimentKind::Lnn2Dof) {
      LnnRun run = train_lnn(cfg, data);
      write_loss_log(std::filesystem::path(cfg.out) / "loss_log.csv", run.log);
      write_checkpoint_from_lnn(run, cfg.epochs, std::filesystem::path(cfg.out) / "model.ckpt");
      std::cout << "final loss " << g17(run.log.back().loss.total) << "\n";
    } else {
      RolnnRun run = train_rolnn(cfg, data);
      write_loss_log(std::filesystem::path(cfg.out) / "loss_log.csv", run.log);
      write_checkpoint_from_rolnn(run, cfg.epochs, std::filesystem::path(cfg.out) / "model.ckpt");
      std::cout << "final loss " << g17(run.log.back().loss.total) << "\n";
    }
    return 0;
  } catch (const diff::TrainingDivergence& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const num::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
             const std::vector<int>& h_test, const std::string& scheme,
             const std::filesystem::path& out_dir, bool plots) {
  try {
    ckpt::Checkpoint c = ckpt::load_checkpoint(checkpoint);
    sys::Dataset ds = sys::ingest_trajectories(dataset);
    std::filesystem::create_directories(out_dir);
    lag::Scheme sch = scheme == "rk4" ? lag::Scheme::RK4 : lag::Scheme::EulerForward;

    std::ofstream f(out_dir / "metrics.csv", std::ios::binary);
    f << "h_test,trajectory,step,position_error,velocity_error,latent_error\n";
    std::ofstream agg(out_dir / "aggregates.csv", std::ios::binary);
    agg << "h_test,mean_position_error,mean_velocity_error,mean_latent_error\n";

    for (int h : h_test) {
      double sp = 0.0, sv = 0.0, sl = 0.0;
      int n = 0;
      for (size_t t = 0; t < ds.trajectories.size(); ++t) {
        if (c.kind == ckpt::Checkpoint::ModelKind::Rolnn) {
          rom::RolloutErrors err = rom::rollout_eval(c.rolnn, ds.trajectories[t], h, sch);
          for (size_t k = 0; k < err.position.size(); ++k)
            f << h << "," << t << "," << k << "," << g17(err.position[k]) << ","
              << g17(err.velocity[k]) << "," << g17(err.latent[k]) << "\n";
          for (size_t k = 0; k < err.position.size(); ++k) {
            sp += err.position[k];
            sv += err.velocity[k];
            sl += err.latent[k];
            ++n;
          }
        } else {
          const lag::Trajectory& truth = ds.trajectories[t];
          const int total = static_cast<int>(truth.states.size());
          for (int start = 0; start + 1 < total; start += h) {
            const int span = std::min(h, total - 1 - start);
            std::vector<num::Vec> taus;
            for (int k = 0; k <= span; ++k)
              taus.push_back(truth.states[start + k].tau.size()
                                 ? truth.states[start + k].tau
                                 : num::Vec(num::Vec::Zero(ds.dof)));
            lag::Trajectory pred;
            try {
              pred = lag::integrate(c.lnn, truth.states[start], taus, span, truth.dt, sch);
            } catch (const lag::DivergenceError&) {
              continue;
            }
            for (int k = 1; k <= span; ++k) {
              double pe = (pred.states[k].q - truth.states[start + k].q).norm();
              double ve = (pred.states[k].dq - truth.states[start + k].dq).norm();
              f << h << "," << t << "," << (start + k) << "," << g17(pe) << "," << g17(ve)
                << ",0\n";
              sp += pe;
              sv += ve;
              ++n;
            }
          }
        }
      }
      agg << h << "," << g17(n ? sp / n : 0.0) << "," << g17(n ? sv / n : 0.0) << ","
          << g17(n ? sl / n : 0.0) << "\n";
    }

    // energy trace along a learned unforced rollout from the first test state
    if (!ds.trajectories.empty() && !ds.trajectories[0].states.empty()) {
      const lag::State& s0 = ds.trajectories[0].states[0];
      std::ofstream ef(out_dir / "energy.csv", std::ios::binary);
      ef << "step,energy\n";
      SvgPlot plot;
      plot.title = "predicted total energy along an unforced rollout";
      plot.provenance = "energy trace; checkpoint " + checkpoint.string();
      SvgPlot::Series se;
      se.label = "energy";
      se.color = "indianred";
      const int steps = std::min<int>(2000, static_cast<int>(ds.trajectories[0].states.size()));
      if (c.kind == ckpt::Checkpoint::ModelKind::Rolnn) {
        rom::ReducedState r0 = rom::reduce_state(c.rolnn, s0);
        auto roll = rom::latent_rollout(c.rolnn, r0, steps, ds.dt, lag::Scheme::RK4);
        for (size_t k = 0; k < roll.size(); ++k) {
          double en = rom::reduced_energy(c.rolnn, roll[k]);
          ef << k << "," << g17(en) << "\n";
          se.x.push_back(static_cast<double>(k));
          se.y.push_back(en);
        }
      } else {
        lag::Trajectory roll = lag::integrate(c.lnn, s0, {}, steps, ds.dt, lag::Scheme::RK4);
        for (size_t k = 0; k < roll.states.size(); ++k) {
          double en = lag::total_energy(c.lnn, roll.states[k]);
          ef << k << "," << g17(en) << "\n";
          se.x.push_back(static_cast<double>(k));
          se.y.push_back(en);
        }
      }
      if (plots) {
        plot.series.push_back(std::move(se));
        plot.write(out_dir / "energy.svg");
      }
    }
    std::cout << "wrote " << (out_dir / "metrics.csv").string() << "\n";
    return 0;
  } catch (const num::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_inspect(const std::filesystem::path& checkpoint) {
  try {
    ckpt::Checkpoint c = ckpt::load_checkpoint(checkpoint);
    if (c.kind == ckpt::Checkpoint::ModelKind::Rolnn) {
      const rom::ROLNNModel& m = c.rolnn;
      std::cout << "reduced-order model: n = " << m.full_dim() << ", d = " << m.latent_dim()
                << ", layers = " << m.ae.layers.size() << ", trained epochs = " << c.epoch
                << "\n";
      std::cout << "autoencoder constraint residuals per layer:\n";
      for (size_t l = 0; l < m.ae.layers.size(); ++l)
        std::cout << "  layer " << l << ": "
                  << g17(geo::bio_residual({m.ae.layers[l].phi, m.ae.layers[l].psi})) << "\n";
      std::cout << "latent mass spectrum at sampled points:\n";
      std::mt19937_64 rng(7);
      std::normal_distribution<double> nd;
      for (int rep = 0; rep < 3; ++rep) {
        num::Vec z(m.latent_dim());
        for (int i = 0; i < m.latent_dim(); ++i) z(i) = nd(rng);
        num::Mat mm = lag::mass_matrix(m.latent, z);
        num::Vec w = num::sym_eig(mm).values;
        std::cout << "  q = [" << z.transpose() << "]  eigs = [" << w.transpose() << "]\n";
      }
      std::cout << "latent potential along each axis (t = -1..1):\n";
      for (int axis = 0; axis < m.latent_dim(); ++axis) {
        std::cout << "  axis " << axis << ":";
        for (double t = -1.0; t <= 1.01; t += 0.5) {
          num::Vec z = num::Vec::Zero(m.latent_dim());
          z(axis) = t;
          lag::State s;
          s.q = z;
          s.dq = num::Vec::Zero(m.latent_dim());
          std::cout << " " << g17(lag::potential_energy(m.latent, s));
        }
        std::cout << "\n";
      }
    } else {
      const lag::LagrangianModel& m = c.lnn;
      std::cout << "full-order model: n = " << m.dim << ", mass net kind = "
                << (m.kind == lag::MassKind::SpdNet
                        ? "spdnet"
                        : (m.kind == lag::MassKind::Cholesky ? "cholesky" : "shared-cholesky"))
                << ", trained epochs = " << c.epoch << "\n";
      std::mt19937_64 rng(7);
      std::normal_distribution<double> nd;
      std::cout << "mass spectrum at sampled points:\n";
      for (int rep = 0; rep < 3; ++rep) {
        num::Vec q(m.dim);
        for (int i = 0; i < m.dim; ++i) q(i) = nd(rng);
        num::Vec w = num::sym_eig(lag::mass_matrix(m, q)).values;
        std::cout << "  q = [" << q.transpose() << "]  eigs = [" << w.transpose() << "]\n";
      }
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rolnn::cli
