#include "rolnn/checkpoint.hpp"

#include <fstream>

namespace rolnn::ckpt {

namespace {

constexpr uint64_t kMagic = 0x524F4C4E4E434B31ULL;  // "ROLNNCK1"

struct Writer {
  std::ofstream f;
  explicit Writer(const std::filesystem::path& p) : f(p, std::ios::binary) {
    if (!f) throw std::runtime_error("checkpoint: cannot open " + p.string() + " for writing");
  }
  void u64(uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); }
  void i64(int64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); }
  void d(double v) { f.write(reinterpret_cast<const char*>(&v), 8); }
  void b(bool v) { u64(v ? 1 : 0); }
  void str(const std::string& s) {
    u64(s.size());
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void mat(const num::Mat& m) {
    u64(static_cast<uint64_t>(m.rows()));
    u64(static_cast<uint64_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) d(m(i, j));
  }
  void vec(const num::Vec& v) { mat(num::Mat(v)); }
};

struct Reader {
  std::ifstream f;
  explicit Reader(const std::filesystem::path& p) : f(p, std::ios::binary) {
    if (!f) throw std::runtime_error("checkpoint: cannot open " + p.string());
  }
  uint64_t u64() {
    uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  }
  int64_t i64() {
    int64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  }
  double d() {
    double v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  }
  bool b() { return u64() != 0; }
  std::string str() {
    uint64_t n = u64();
    std::string s(n, '\0');
    f.read(s.data(), static_cast<std::streamsize>(n));
    return s;
  }
  num::Mat mat() {
    uint64_t r = u64(), c = u64();
    num::Mat m(r, c);
    for (uint64_t j = 0; j < c; ++j)
      for (uint64_t i = 0; i < r; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d();
    return m;
  }
  num::Vec vec() { return mat().col(0); }
};

void write_mlp(Writer& w, const net::MLPParams& p) {
  w.u64(static_cast<uint64_t>(p.act));
  w.b(p.act_out);
  w.u64(p.w.size());
  for (size_t l = 0; l < p.w.size(); ++l) {
    w.mat(p.w[l]);
    w.vec(p.b[l]);
  }
}

net::MLPParams read_mlp(Reader& r) {
  net::MLPParams p;
  p.act = static_cast<net::Activation>(r.u64());
  p.act_out = r.b();
  uint64_t n = r.u64();
  for (uint64_t l = 0; l < n; ++l) {
    p.w.push_back(r.mat());
    p.b.push_back(r.vec());
  }
  return p;
}

void write_lnn(Writer& w, const lag::LagrangianModel& m) {
  w.u64(static_cast<uint64_t>(m.kind));
  w.u64(static_cast<uint64_t>(m.dim));
  w.d(m.reg);
  switch (m.kind) {
    case lag::MassKind::SpdNet:
      write_mlp(w, m.spd.head);
      w.u64(static_cast<uint64_t>(m.spd.dim));
      w.b(m.spd.learned_basepoint);
      w.mat(m.spd.basepoint);
      w.u64(m.spd.layers.size());
      for (const auto& l : m.spd.layers) {
        w.u64(static_cast<uint64_t>(l.kind));
        w.d(l.eps);
        w.mat(l.kind == net::SpdLayerKind::ReEig ? num::Mat(0, 0) : l.a);
        w.mat(l.kind == net::SpdLayerKind::ReEig ? num::Mat(0, 0) : l.b);
      }
      break;
    case lag::MassKind::Cholesky:
      write_mlp(w, m.chol.mlp);
      w.u64(static_cast<uint64_t>(m.chol.dim));
      w.d(m.chol.delta);
      break;
    case lag::MassKind::SharedCholesky:
      write_mlp(w, m.shared.trunk);
      w.mat(m.shared.head_l);
      w.vec(m.shared.head_lb);
      w.mat(m.shared.head_v);
      w.vec(m.shared.head_vb);
      w.u64(static_cast<uint64_t>(m.shared.dim));
      w.d(m.shared.delta);
      break;
  }
  if (m.kind != lag::MassKind::SharedCholesky) write_mlp(w, m.potential);
}

lag::LagrangianModel read_lnn(Reader& r) {
  lag::LagrangianModel m;
  m.kind = static_cast<lag::MassKind>(r.u64());
  m.dim = static_cast<int>(r.u64());
  m.reg = r.d();
  switch (m.kind) {
    case lag::MassKind::SpdNet:
      m.spd.head = read_mlp(r);
      m.spd.dim = static_cast<int>(r.u64());
      m.spd.learned_basepoint = r.b();
      m.spd.basepoint = r.mat();
      for (uint64_t i = 0, n = r.u64(); i < n; ++i) {
        net::SpdLayer l;
        l.kind = static_cast<net::SpdLayerKind>(r.u64());
        l.eps = r.d();
        l.a = r.mat();
        l.b = r.mat();
        m.spd.layers.push_back(std::move(l));
      }
      break;
    case lag::MassKind::Cholesky:
      m.chol.mlp = read_mlp(r);
      m.chol.dim = static_cast<int>(r.u64());
      m.chol.delta = r.d();
      break;
    case lag::MassKind::SharedCholesky:
      m.shared.trunk = read_mlp(r);
      m.shared.head_l = r.mat();
      m.shared.head_lb = r.vec();
      m.shared.head_v = r.mat();
      m.shared.head_vb = r.vec();
      m.shared.dim = static_cast<int>(r.u64());
      m.shared.delta = r.d();
      break;
  }
  if (m.kind != lag::MassKind::SharedCholesky) m.potential = read_mlp(r);
  return m;
}

void write_rolnn(Writer& w, const rom::ROLNNModel& m) {
  w.d(m.ae.alpha);
  w.b(m.ae.biorthogonal);
  w.u64(m.ae.layers.size());
  for (const auto& l : m.ae.layers) {
    w.mat(l.phi);
    w.mat(l.psi);
    w.vec(l.b);
  }
  write_lnn(w, m.latent);
}

rom::ROLNNModel read_rolnn(Reader& r) {
  rom::ROLNNModel m;
  m.ae.alpha = r.d();
  m.ae.biorthogonal = r.b();
  for (uint64_t i = 0, n = r.u64(); i < n; ++i) {
    net::AELayer l;
    l.phi = r.mat();
    l.psi = r.mat();
    l.b = r.vec();
    m.ae.layers.push_back(std::move(l));
  }
  m.latent = read_lnn(r);
  return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  Writer w(path);
  w.u64(kMagic);
  w.u64(static_cast<uint64_t>(c.kind));
  if (c.kind == Checkpoint::ModelKind::Lnn)
    write_lnn(w, c.lnn);
  else
    write_rolnn(w, c.rolnn);
  w.i64(c.adam_step);
  w.u64(c.adam_state.size());
  for (const auto& s : c.adam_state) {
    w.u64(static_cast<uint64_t>(s.m.kind));
    w.mat(s.m.a);
    w.mat(s.m.b);
    w.mat(s.v);
    w.d(s.v2);
  }
  w.u64(c.groups.size());
  for (const auto& g : c.groups) {
    w.str(g.name);
    w.d(g.lr);
    w.u64(g.comps.size());
    for (size_t i : g.comps) w.u64(i);
  }
  w.u64(static_cast<uint64_t>(c.epoch));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  if (r.u64() != kMagic) throw std::runtime_error("checkpoint: bad magic in " + path.string());
  Checkpoint c;
  c.kind = static_cast<Checkpoint::ModelKind>(r.u64());
  if (c.kind == Checkpoint::ModelKind::Lnn)
    c.lnn = read_lnn(r);
  else
    c.rolnn = read_rolnn(r);
  c.adam_step = r.i64();
  for (uint64_t i = 0, n = r.u64(); i < n; ++i) {
    opt::RiemannianAdam::CompState s;
    s.m.kind = static_cast<geo::Kind>(r.u64());
    s.m.a = r.mat();
    s.m.b = r.mat();
    s.v = r.mat();
    s.v2 = r.d();
    c.adam_state.push_back(std::move(s));
  }
  for (uint64_t i = 0, n = r.u64(); i < n; ++i) {
    opt::ParamGroup g;
    g.name = r.str();
    g.lr = r.d();
    for (uint64_t j = 0, m = r.u64(); j < m; ++j) g.comps.push_back(r.u64());
    c.groups.push_back(std::move(g));
  }
  c.epoch = static_cast<int>(r.u64());
  if (!r.f) throw std::runtime_error("checkpoint: truncated file " + path.string());
  return c;
}

}  // namespace rolnn::ckpt
