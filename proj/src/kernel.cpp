#include "gpchan/kernel.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gpchan {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kFourPiSq = 4.0 * M_PI * M_PI;

double sm_term(const SmComponent& c, int dy, int dz) {
  const double env = std::exp(-kFourPiSq * (c.var_y * dy * dy + c.var_z * dz * dz));
  const double phase = kTwoPi * (c.freq_y * dy + c.freq_z * dz);
  return c.weight * env * std::cos(phase);
}

// Values over all lattice differences of one side. Entries are stored for a
// canonical sign of the difference so that k(d) and k(-d) read the exact
// same double, which keeps Gram matrices bit-symmetric.
struct DiffTable {
  int ny = 1, nz = 1;
  Eigen::MatrixXd vals;
  double at(int dy, int dz) const { return vals(dy + ny - 1, dz + nz - 1); }
};

template <typename F>
DiffTable build_table(const UraGeometry& g, F&& f) {
  DiffTable t;
  t.ny = g.ny;
  t.nz = g.nz;
  t.vals.resize(2 * g.ny - 1, 2 * g.nz - 1);
  for (int dz = -(g.nz - 1); dz <= g.nz - 1; ++dz) {
    for (int dy = -(g.ny - 1); dy <= g.ny - 1; ++dy) {
      int cy = dy, cz = dz;
      if (cz < 0 || (cz == 0 && cy < 0)) {
        cy = -cy;
        cz = -cz;
      }
      t.vals(dy + g.ny - 1, dz + g.nz - 1) = f(cy, cz);
    }
  }
  return t;
}

DiffTable side_table(const std::vector<SmComponent>& comps, const UraGeometry& g) {
  return build_table(g, [&](int dy, int dz) {
    double s = 0.0;
    for (const auto& c : comps) s += sm_term(c, dy, dz);
    return s;
  });
}

std::vector<LatticeCoord> rx_coords(const std::vector<IndexPair>& grid, const UraGeometry& g) {
  std::vector<LatticeCoord> out(grid.size());
  for (size_t a = 0; a < grid.size(); ++a) out[a] = coords_of(grid[a].rx, g);
  return out;
}

std::vector<LatticeCoord> tx_coords(const std::vector<IndexPair>& grid, const UraGeometry& g) {
  std::vector<LatticeCoord> out(grid.size());
  for (size_t a = 0; a < grid.size(); ++a) out[a] = coords_of(grid[a].tx, g);
  return out;
}

Eigen::MatrixXd fill_from_table(const DiffTable& t, const std::vector<LatticeCoord>& c1,
                                const std::vector<LatticeCoord>& c2) {
  Eigen::MatrixXd m(c1.size(), c2.size());
  for (size_t b = 0; b < c2.size(); ++b)
    for (size_t a = 0; a < c1.size(); ++a)
      m(a, b) = t.at(c1[a].y - c2[b].y, c1[a].z - c2[b].z);
  return m;
}

void check_components(const HyperParams& hp) {
  if (hp.rx.empty() || hp.tx.empty())
    throw std::invalid_argument("HyperParams: at least one component per side required");
}

}  // namespace

double side_eval(const std::vector<SmComponent>& comps, const LatticeCoord& delta) {
  double s = 0.0;
  for (const auto& c : comps) s += sm_term(c, delta.y, delta.z);
  return s;
}

double base_eval(const HyperParams& hp, const IndexPair& p, const IndexPair& q,
                 const UraGeometry& rx_geom, const UraGeometry& tx_geom) {
  check_components(hp);
  const LatticeCoord dr = coords_of(p.rx, rx_geom) - coords_of(q.rx, rx_geom);
  const LatticeCoord dt = coords_of(p.tx, tx_geom) - coords_of(q.tx, tx_geom);
  return hp.amplitude * side_eval(hp.rx, dr) * side_eval(hp.tx, dt);
}

Eigen::Matrix2d icm_coupling(const IcmParams& icm) {
  Eigen::Matrix2d b;
  b(0, 0) = icm.l00 * icm.l00;
  b(0, 1) = icm.l00 * icm.l10;
  b(1, 0) = b(0, 1);
  b(1, 1) = icm.l10 * icm.l10 + icm.l11 * icm.l11;
  return b;
}

Eigen::MatrixXd assemble_gram(const HyperParams& hp, const std::vector<IndexPair>& x1,
                              const std::vector<IndexPair>& x2, const UraGeometry& rx_geom,
                              const UraGeometry& tx_geom) {
  check_components(hp);
  if (x1.empty() || x2.empty()) throw std::invalid_argument("assemble_gram: empty grid");
  const DiffTable tr = side_table(hp.rx, rx_geom);
  const DiffTable tt = side_table(hp.tx, tx_geom);
  const auto r1 = rx_coords(x1, rx_geom), r2 = rx_coords(x2, rx_geom);
  const auto t1 = tx_coords(x1, tx_geom), t2 = tx_coords(x2, tx_geom);
  Eigen::MatrixXd kr = fill_from_table(tr, r1, r2);
  Eigen::MatrixXd kt = fill_from_table(tt, t1, t2);
  return hp.amplitude * kr.cwiseProduct(kt);
}

Eigen::MatrixXd lift_icm(const Eigen::MatrixXd& base, const Eigen::Matrix2d& coupling) {
  const Eigen::Index p = base.rows(), q = base.cols();
  Eigen::MatrixXd out(2 * p, 2 * q);
  out.topLeftCorner(p, q) = coupling(0, 0) * base;
  out.topRightCorner(p, q) = coupling(0, 1) * base;
  out.bottomLeftCorner(p, q) = coupling(1, 0) * base;
  out.bottomRightCorner(p, q) = coupling(1, 1) * base;
  return out;
}

GramBundle build_gram_bundle(const HyperParams& hp, const std::vector<IndexPair>& grid,
                             const UraGeometry& rx_geom, const UraGeometry& tx_geom) {
  GramBundle b;
  b.base = assemble_gram(hp, grid, grid, rx_geom, tx_geom);
  b.lifted = lift_icm(b.base, icm_coupling(hp.icm));
  b.c_theta = b.lifted;
  b.c_theta.diagonal().array() += hp.noise_var;
  return b;
}

int raw_param_count(int q_rx, int q_tx) { return 1 + 5 * (q_rx + q_tx) + 3 + 1; }

std::string raw_param_name(int i, int q_rx, int q_tx) {
  static const char* kComp[5] = {"log_w", "mu_y_raw", "mu_z_raw", "log_v_y", "log_v_z"};
  if (i == 0) return "log_A";
  i -= 1;
  if (i < 5 * q_rx) return "rx" + std::to_string(i / 5) + "." + kComp[i % 5];
  i -= 5 * q_rx;
  if (i < 5 * q_tx) return "tx" + std::to_string(i / 5) + "." + kComp[i % 5];
  i -= 5 * q_tx;
  switch (i) {
    case 0: return "t00";
    case 1: return "t10";
    case 2: return "t11";
    case 3: return "log_sigma_r_sq";
  }
  throw std::out_of_range("raw_param_name: index out of range");
}

GramDerivatives::GramDerivatives(const HyperParams& hp, const std::vector<IndexPair>& grid,
                                 const UraGeometry& rx_geom, const UraGeometry& tx_geom)
    : hp_(hp),
      q_rx_(static_cast<int>(hp.rx.size())),
      q_tx_(static_cast<int>(hp.tx.size())),
      coupling_(icm_coupling(hp.icm)),
      rx_coords_(rx_coords(grid, rx_geom)),
      tx_coords_(tx_coords(grid, tx_geom)),
      rx_geom_(rx_geom),
      tx_geom_(tx_geom) {
  check_components(hp_);
  side_rx_ = fill_from_table(side_table(hp_.rx, rx_geom_), rx_coords_, rx_coords_);
  side_tx_ = fill_from_table(side_table(hp_.tx, tx_geom_), tx_coords_, tx_coords_);
  base_ = hp_.amplitude * side_rx_.cwiseProduct(side_tx_);
}

GramDerivatives::Kind GramDerivatives::kind(int i) const {
  const int n_base = 1 + 5 * (q_rx_ + q_tx_);
  if (i < 0 || i >= count()) throw std::out_of_range("GramDerivatives: index out of range");
  if (i < n_base) return Kind::kBase;
  if (i < n_base + 3) return Kind::kIcm;
  return Kind::kNoise;
}

void GramDerivatives::base_derivative(int i, Eigen::MatrixXd& out) const {
  if (kind(i) != Kind::kBase) throw std::invalid_argument("base_derivative: not a base coordinate");
  if (i == 0) {  // d/d(log A): the base Gram itself
    out = base_;
    return;
  }
  const int k = i - 1;
  const bool is_rx = k < 5 * q_rx_;
  const int comp = is_rx ? k / 5 : (k - 5 * q_rx_) / 5;
  const int which = is_rx ? k % 5 : (k - 5 * q_rx_) % 5;
  const SmComponent& c = is_rx ? hp_.rx[comp] : hp_.tx[comp];
  const UraGeometry& geom = is_rx ? rx_geom_ : tx_geom_;

  // Per-difference derivative of the selected component, already chained
  // through the raw parameterization (log for w and v, tanh/2 for the
  // frequencies).
  DiffTable dtab;
  switch (which) {
    case 0:  // log w
      dtab = build_table(geom, [&](int dy, int dz) { return sm_term(c, dy, dz); });
      break;
    case 1: {  // raw f_y, chain factor (1 - (2f)^2)/2
      const double chain = 0.5 * (1.0 - (2.0 * c.freq_y) * (2.0 * c.freq_y));
      dtab = build_table(geom, [&](int dy, int dz) {
        const double env = std::exp(-kFourPiSq * (c.var_y * dy * dy + c.var_z * dz * dz));
        const double phase = kTwoPi * (c.freq_y * dy + c.freq_z * dz);
        return -c.weight * env * std::sin(phase) * kTwoPi * dy * chain;
      });
      break;
    }
    case 2: {  // raw f_z
      const double chain = 0.5 * (1.0 - (2.0 * c.freq_z) * (2.0 * c.freq_z));
      dtab = build_table(geom, [&](int dy, int dz) {
        const double env = std::exp(-kFourPiSq * (c.var_y * dy * dy + c.var_z * dz * dz));
        const double phase = kTwoPi * (c.freq_y * dy + c.freq_z * dz);
        return -c.weight * env * std::sin(phase) * kTwoPi * dz * chain;
      });
      break;
    }
    case 3:  // log v_y
      dtab = build_table(geom, [&](int dy, int dz) {
        return sm_term(c, dy, dz) * (-kFourPiSq * c.var_y * dy * dy);
      });
      break;
    case 4:  // log v_z
      dtab = build_table(geom, [&](int dy, int dz) {
        return sm_term(c, dy, dz) * (-kFourPiSq * c.var_z * dz * dz);
      });
      break;
    default: throw std::logic_error("unreachable");
  }

  const auto& coords = is_rx ? rx_coords_ : tx_coords_;
  Eigen::MatrixXd dside = fill_from_table(dtab, coords, coords);
  if (is_rx)
    out = hp_.amplitude * dside.cwiseProduct(side_tx_);
  else
    out = hp_.amplitude * side_rx_.cwiseProduct(dside);
}

Eigen::Matrix2d GramDerivatives::icm_derivative(int i) const {
  if (kind(i) != Kind::kIcm) throw std::invalid_argument("icm_derivative: not an ICM coordinate");
  const int j = i - (1 + 5 * (q_rx_ + q_tx_));
  const double l00 = hp_.icm.l00, l10 = hp_.icm.l10, l11 = hp_.icm.l11;
  Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
  switch (j) {
    case 0:  // t00 with l00 = exp(t00)
      d(0, 0) = 2.0 * l00 * l00;
      d(0, 1) = d(1, 0) = l00 * l10;
      break;
    case 1:  // t10 = l10
      d(0, 1) = d(1, 0) = l00;
      d(1, 1) = 2.0 * l10;
      break;
    case 2:  // t11 with l11 = exp(t11)
      d(1, 1) = 2.0 * l11 * l11;
      break;
  }
  return d;
}

void GramDerivatives::derivative(int i, Eigen::MatrixXd& out) const {
  const Eigen::Index p = base_.rows();
  switch (kind(i)) {
    case Kind::kBase: {
      Eigen::MatrixXd d;
      base_derivative(i, d);
      out = lift_icm(d, coupling_);
      break;
    }
    case Kind::kIcm: out = lift_icm(base_, icm_derivative(i)); break;
    case Kind::kNoise:
      out = Eigen::MatrixXd::Zero(2 * p, 2 * p);
      out.diagonal().setConstant(hp_.noise_var);  // d/d(log s2) = s2 I
      break;
  }
}

std::vector<Eigen::MatrixXd> GramDerivatives::all() const {
  std::vector<Eigen::MatrixXd> out(count());
  for (int i = 0; i < count(); ++i) derivative(i, out[i]);
  return out;
}

namespace {

void emit(std::string& s, const std::string& name, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  s += name;
  s += ' ';
  s += buf;
  s += '\n';
}

}  // namespace

std::string serialize_hyperparams(const HyperParams& hp) {
  std::string s;
  emit(s, "A", hp.amplitude);
  emit(s, "q_rx", static_cast<double>(hp.rx.size()));
  emit(s, "q_tx", static_cast<double>(hp.tx.size()));
  for (size_t q = 0; q < hp.rx.size(); ++q) {
    const std::string p = "rx" + std::to_string(q) + ".";
    emit(s, p + "w", hp.rx[q].weight);
    emit(s, p + "mu_y", hp.rx[q].freq_y);
    emit(s, p + "mu_z", hp.rx[q].freq_z);
    emit(s, p + "v_y", hp.rx[q].var_y);
    emit(s, p + "v_z", hp.rx[q].var_z);
  }
  for (size_t q = 0; q < hp.tx.size(); ++q) {
    const std::string p = "tx" + std::to_string(q) + ".";
    emit(s, p + "w", hp.tx[q].weight);
    emit(s, p + "mu_y", hp.tx[q].freq_y);
    emit(s, p + "mu_z", hp.tx[q].freq_z);
    emit(s, p + "v_y", hp.tx[q].var_y);
    emit(s, p + "v_z", hp.tx[q].var_z);
  }
  emit(s, "l00", hp.icm.l00);
  emit(s, "l10", hp.icm.l10);
  emit(s, "l11", hp.icm.l11);
  emit(s, "sigma_r_sq", hp.noise_var);
  return s;
}

HyperParams parse_hyperparams(const std::string& text) {
  std::istringstream in(text);
  std::string name;
  double value;
  std::vector<std::pair<std::string, double>> kv;
  while (in >> name >> value) kv.emplace_back(name, value);

  auto get = [&](const std::string& key) {
    for (const auto& [k, v] : kv)
      if (k == key) return v;
    throw std::invalid_argument("parse_hyperparams: missing field " + key);
  };

  HyperParams hp;
  hp.amplitude = get("A");
  const int q_rx = static_cast<int>(get("q_rx"));
  const int q_tx = static_cast<int>(get("q_tx"));
  if (q_rx < 1 || q_tx < 1) throw std::invalid_argument("parse_hyperparams: bad component count");
  auto read_side = [&](const char* side, int n) {
    std::vector<SmComponent> comps(n);
    for (int q = 0; q < n; ++q) {
      const std::string p = side + std::to_string(q) + ".";
      comps[q].weight = get(p + "w");
      comps[q].freq_y = get(p + "mu_y");
      comps[q].freq_z = get(p + "mu_z");
      comps[q].var_y = get(p + "v_y");
      comps[q].var_z = get(p + "v_z");
    }
    return comps;
  };
  hp.rx = read_side("rx", q_rx);
  hp.tx = read_side("tx", q_tx);
  hp.icm.l00 = get("l00");
  hp.icm.l10 = get("l10");
  hp.icm.l11 = get("l11");
  hp.noise_var = get("sigma_r_sq");
  return hp;
}

}  // namespace gpchan
