#include "windcoh/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace windcoh {

int NetworkCase::slack() const {
  if (slack_machine >= 0) return slack_machine;
  int best = 0;
  for (int i = 1; i < static_cast<int>(generators.size()); ++i)
    if (generators[i].inertia_m > generators[best].inertia_m) best = i;
  return best;
}

int NetworkCase::bus_position(int bus_id) const {
  for (int i = 0; i < static_cast<int>(buses.size()); ++i)
    if (buses[i].id == bus_id) return i;
  return -1;
}

CaseIndex make_index(const NetworkCase& c) {
  CaseIndex idx;
  idx.n = static_cast<int>(c.generators.size());
  idx.p = static_cast<int>(c.wind_farms.size());
  idx.m = static_cast<int>(c.buses.size());
  idx.machine_pos.resize(idx.n);
  for (int i = 0; i < idx.n; ++i)
    idx.machine_pos[i] = c.bus_position(c.generators[i].bus);
  idx.farm_pos.resize(idx.p);
  for (int i = 0; i < idx.p; ++i)
    idx.farm_pos[i] = c.bus_position(c.wind_farms[i].bus);

  idx.internal_of_pos.assign(idx.m, -1);
  idx.pos_of_internal.clear();
  idx.pos_of_internal.reserve(idx.m);
  for (int i = 0; i < idx.n; ++i) idx.pos_of_internal.push_back(idx.machine_pos[i]);
  for (int i = 0; i < idx.p; ++i) idx.pos_of_internal.push_back(idx.farm_pos[i]);
  for (int pos = 0; pos < idx.m; ++pos) {
    if (std::find(idx.pos_of_internal.begin(), idx.pos_of_internal.end(), pos) ==
        idx.pos_of_internal.end())
      idx.pos_of_internal.push_back(pos);
  }
  for (int k = 0; k < idx.m; ++k) idx.internal_of_pos[idx.pos_of_internal[k]] = k;
  return idx;
}

namespace {

bool graph_connected(const NetworkCase& c) {
  const int m = static_cast<int>(c.buses.size());
  if (m == 0) return false;
  std::map<int, int> pos;
  for (int i = 0; i < m; ++i) pos[c.buses[i].id] = i;
  std::vector<std::vector<int>> adj(m);
  for (const auto& l : c.lines) {
    auto a = pos.find(l.from), b = pos.find(l.to);
    if (a == pos.end() || b == pos.end() || a->second == b->second) continue;
    adj[a->second].push_back(b->second);
    adj[b->second].push_back(a->second);
  }
  std::vector<char> seen(m, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
  }
  return count == m;
}

}  // namespace

std::vector<Finding> validate_case(const NetworkCase& c) {
  std::vector<Finding> out;
  auto add = [&](const std::string& code, const std::string& msg) {
    out.push_back({code, msg});
  };

  std::set<int> ids;
  for (const auto& b : c.buses) {
    if (!ids.insert(b.id).second)
      add("duplicate-id", "duplicate bus id " + std::to_string(b.id));
  }
  if (c.base_mva <= 0) add("base-mva", "base_mva must be positive");

  for (const auto& l : c.lines) {
    if (l.from == l.to)
      add("line-self-loop", "line connects bus " + std::to_string(l.from) + " to itself");
    if (!ids.count(l.from) || !ids.count(l.to))
      add("dangling-reference", "line " + std::to_string(l.from) + "-" +
                                    std::to_string(l.to) + " references a missing bus");
    if (l.b <= 0)
      add("line-susceptance", "line " + std::to_string(l.from) + "-" +
                                  std::to_string(l.to) + " needs B > 0");
    if (l.r != 0.0)
      add("resistive-line", "line " + std::to_string(l.from) + "-" +
                                std::to_string(l.to) +
                                " has series resistance; the model is lossless");
  }

  std::set<int> machine_buses;
  for (const auto& g : c.generators) {
    if (!ids.count(g.bus))
      add("dangling-reference",
          "generator references missing bus " + std::to_string(g.bus));
    if (!machine_buses.insert(g.bus).second)
      add("duplicate-machine-bus",
          "two machines on bus " + std::to_string(g.bus));
    if (g.inertia_m <= 0) add("machine-inertia", "machine inertia must be positive");
    if (g.xd_prime <= 0) add("machine-reactance", "x'_d must be positive");
    if (g.emf <= 0) add("machine-emf", "internal voltage must be positive");
  }
  if (c.generators.size() < 2)
    add("machine-count", "a case needs at least 2 synchronous machines");

  std::set<int> farm_buses;
  for (const auto& f : c.wind_farms) {
    if (!ids.count(f.bus))
      add("dangling-reference",
          "wind farm references missing bus " + std::to_string(f.bus));
    if (machine_buses.count(f.bus))
      add("farm-on-machine-bus",
          "wind farm shares bus " + std::to_string(f.bus) + " with a machine");
    if (!farm_buses.insert(f.bus).second)
      add("duplicate-farm-bus", "two farms on bus " + std::to_string(f.bus));
    if (f.gamma < 0) add("farm-gamma", "gamma must be non-negative");
    if (f.wind_speed <= 0) add("farm-wind-speed", "wind speed must be positive");
  }

  // kind consistency
  for (const auto& b : c.buses) {
    const bool has_m = machine_buses.count(b.id) > 0;
    const bool has_f = farm_buses.count(b.id) > 0;
    BusKind expect = has_m ? BusKind::SyncGen
                           : (has_f ? BusKind::WindGen : BusKind::NonGen);
    if (b.kind != expect)
      add("bus-kind", "bus " + std::to_string(b.id) +
                          " kind does not match attached equipment");
  }

  if (c.slack_machine >= static_cast<int>(c.generators.size()))
    add("slack-machine", "slack machine index out of range");

  if (out.empty() && !graph_connected(c))
    add("disconnected", "network graph is not connected");
  return out;
}

CMat build_admittance(const NetworkCase& c) {
  if (!graph_connected(c))
    throw ValidationError("build_admittance: network graph is not connected");
  const int m = static_cast<int>(c.buses.size());
  CMat y = CMat::Zero(m, m);
  const std::complex<double> im(0.0, 1.0);
  for (const auto& l : c.lines) {
    const int a = c.bus_position(l.from), b = c.bus_position(l.to);
    y(a, b) -= im * l.b;
    y(b, a) -= im * l.b;
    y(a, a) += im * l.b + im * (0.5 * l.charging_b);
    y(b, b) += im * l.b + im * (0.5 * l.charging_b);
  }
  for (int j = 0; j < m; ++j)
    y(j, j) += std::complex<double>(c.buses[j].g_shunt, c.buses[j].b_shunt);
  return y;
}

// Classical machine behind x'_d. Active power follows the sin(delta - theta)
// law; the reactive injection is the terminal-side expression
// (E V cos(delta - theta) - V^2)/x', which keeps the reduced stiffness
// matrix symmetric (the bus balance admits an energy function).
MachineEval eval_machine(const SynchronousGenerator& g, double delta,
                         double v_re, double v_im) {
  const double k = g.emf / g.xd_prime;
  const double s = std::sin(delta), co = std::cos(delta);
  MachineEval e;
  e.p = k * (v_re * s - v_im * co);
  e.q = k * (v_re * co + v_im * s) - (v_re * v_re + v_im * v_im) / g.xd_prime;
  e.dp_ddelta = k * (v_re * co + v_im * s);
  e.dp_dvre = k * s;
  e.dp_dvim = -k * co;
  e.dq_ddelta = -k * (v_re * s - v_im * co);
  e.dq_dvre = k * co - 2.0 * v_re / g.xd_prime;
  e.dq_dvim = k * s - 2.0 * v_im / g.xd_prime;
  return e;
}

FlowEval eval_flow(const NetworkCase& c, const Vec& v_re, const Vec& v_im,
                   bool with_jacobian) {
  const int m = static_cast<int>(c.buses.size());
  FlowEval f;
  f.p = Vec::Zero(m);
  f.q = Vec::Zero(m);
  if (with_jacobian) {
    f.dp_dvre.setZero(m, m);
    f.dp_dvim.setZero(m, m);
    f.dq_dvre.setZero(m, m);
    f.dq_dvim.setZero(m, m);
  }

  for (const auto& l : c.lines) {
    const int a = c.bus_position(l.from), b = c.bus_position(l.to);
    const double B = l.b;
    // active transfer: B |Va||Vb| sin(ta - tb)
    const double p_ab =
        B * (v_im[a] * v_re[b] - v_re[a] * v_im[b]);
    f.p[a] += p_ab;
    f.p[b] -= p_ab;
    // series reactive draw at each end: B(|V|^2 - Re(Va Vb*))
    const double re_ab = v_re[a] * v_re[b] + v_im[a] * v_im[b];
    f.q[a] += B * (v_re[a] * v_re[a] + v_im[a] * v_im[a] - re_ab);
    f.q[b] += B * (v_re[b] * v_re[b] + v_im[b] * v_im[b] - re_ab);
    // charging injects reactive power at both ends
    const double hc = 0.5 * l.charging_b;
    f.q[a] -= hc * (v_re[a] * v_re[a] + v_im[a] * v_im[a]);
    f.q[b] -= hc * (v_re[b] * v_re[b] + v_im[b] * v_im[b]);

    if (with_jacobian) {
      f.dp_dvre(a, a) += -B * v_im[b];
      f.dp_dvim(a, a) += B * v_re[b];
      f.dp_dvre(a, b) += B * v_im[a];
      f.dp_dvim(a, b) += -B * v_re[a];
      f.dp_dvre(b, a) += B * v_im[b];
      f.dp_dvim(b, a) += -B * v_re[b];
      f.dp_dvre(b, b) += -B * v_im[a];
      f.dp_dvim(b, b) += B * v_re[a];

      f.dq_dvre(a, a) += B * (2.0 * v_re[a] - v_re[b]) - 2.0 * hc * v_re[a];
      f.dq_dvim(a, a) += B * (2.0 * v_im[a] - v_im[b]) - 2.0 * hc * v_im[a];
      f.dq_dvre(a, b) += -B * v_re[a];
      f.dq_dvim(a, b) += -B * v_im[a];
      f.dq_dvre(b, b) += B * (2.0 * v_re[b] - v_re[a]) - 2.0 * hc * v_re[b];
      f.dq_dvim(b, b) += B * (2.0 * v_im[b] - v_im[a]) - 2.0 * hc * v_im[b];
      f.dq_dvre(b, a) += -B * v_re[b];
      f.dq_dvim(b, a) += -B * v_im[b];
    }
  }
  for (int j = 0; j < m; ++j) {
    const double v2 = v_re[j] * v_re[j] + v_im[j] * v_im[j];
    f.p[j] += c.buses[j].g_shunt * v2;
    f.q[j] -= c.buses[j].b_shunt * v2;  // capacitive-positive shunt injects
    if (with_jacobian) {
      f.dp_dvre(j, j) += 2.0 * c.buses[j].g_shunt * v_re[j];
      f.dp_dvim(j, j) += 2.0 * c.buses[j].g_shunt * v_im[j];
      f.dq_dvre(j, j) -= 2.0 * c.buses[j].b_shunt * v_re[j];
      f.dq_dvim(j, j) -= 2.0 * c.buses[j].b_shunt * v_im[j];
    }
  }
  return f;
}

Vec network_residual(const NetworkCase& c, const Vec& delta,
                     const Vec& v_re, const Vec& v_im) {
  const int m = static_cast<int>(c.buses.size());
  const FlowEval flow = eval_flow(c, v_re, v_im, false);
  Vec p_inj = Vec::Zero(m), q_inj = Vec::Zero(m);
  for (int j = 0; j < m; ++j) {
    p_inj[j] -= c.buses[j].load_p;
    q_inj[j] -= c.buses[j].load_q;
  }
  for (int i = 0; i < static_cast<int>(c.generators.size()); ++i) {
    const int pos = c.bus_position(c.generators[i].bus);
    const auto e = eval_machine(c.generators[i], delta[i], v_re[pos], v_im[pos]);
    p_inj[pos] += e.p;
    q_inj[pos] += e.q;
  }
  for (const auto& f : c.wind_farms) {
    const int pos = c.bus_position(f.bus);
    p_inj[pos] += f.farm_p_ref();
    q_inj[pos] += f.farm_q_ref();
  }
  Vec r(2 * m);
  r.head(m) = p_inj - flow.p;
  r.tail(m) = q_inj - flow.q;
  return r;
}

namespace {

NetworkCase scaled_injections(const NetworkCase& c, double alpha) {
  NetworkCase s = c;
  for (auto& b : s.buses) {
    b.load_p *= alpha;
    b.load_q *= alpha;
  }
  for (auto& g : s.generators) g.p_mech *= alpha;
  for (auto& f : s.wind_farms) {
    // scale the farm output without touching the unit model
    f.q_setpoint *= alpha;
    f.p_rated *= alpha;
  }
  return s;
}

OperatingPoint solve_power_flow_direct(const NetworkCase& c,
                                       const PowerFlowOptions& opt);

}  // namespace

OperatingPoint solve_power_flow(const NetworkCase& c, const PowerFlowOptions& opt) {
  {
    const auto findings = validate_case(c);
    if (!findings.empty()) {
      std::ostringstream os;
      os << "solve_power_flow: invalid case:";
      for (const auto& f : findings) os << " [" << f.code << "] " << f.message;
      throw ValidationError(os.str());
    }
  }
  try {
    return solve_power_flow_direct(c, opt);
  } catch (const ConvergenceError&) {
    // continuation from a lighter loading, warm-starting each stage
    PowerFlowOptions stage = opt;
    stage.init.reset();
    OperatingPoint op;
    bool warm = false;
    for (double alpha : {0.2, 0.4, 0.6, 0.8, 1.0}) {
      if (warm) stage.init = op;
      op = solve_power_flow_direct(scaled_injections(c, alpha), stage);
      warm = true;
    }
    return op;
  }
}

namespace {

OperatingPoint solve_power_flow_direct(const NetworkCase& c,
                                       const PowerFlowOptions& opt) {
  const int m = static_cast<int>(c.buses.size());
  const int n = static_cast<int>(c.generators.size());
  const int slack = c.slack();

  Vec delta = Vec::Zero(n), v_re = Vec::Ones(m), v_im = Vec::Zero(m);
  if (opt.init) {
    delta = opt.init->delta0;
    v_re = opt.init->v_re0;
    v_im = opt.init->v_im0;
  }

  const int dim = n + 2 * m;
  auto residual = [&](const Vec& d, const Vec& re, const Vec& imv) {
    Vec r(dim);
    r.head(2 * m) = network_residual(c, d, re, imv);
    int row = 2 * m;
    for (int i = 0; i < n; ++i) {
      if (i == slack) continue;
      const int pos = c.bus_position(c.generators[i].bus);
      const auto e = eval_machine(c.generators[i], d[i], re[pos], imv[pos]);
      r[row++] = c.generators[i].p_mech - e.p;
    }
    r[row] = d[slack];
    return r;
  };

  Vec f = residual(delta, v_re, v_im);
  double fnorm = f.lpNorm<Eigen::Infinity>();
  int iter = 0;
  for (; iter < opt.max_iterations && fnorm >= opt.tol; ++iter) {
    // analytic Jacobian of the residual
    Mat jac = Mat::Zero(dim, dim);
    const FlowEval flow = eval_flow(c, v_re, v_im, true);
    jac.block(0, n, m, m) = -flow.dp_dvre;
    jac.block(0, n + m, m, m) = -flow.dp_dvim;
    jac.block(m, n, m, m) = -flow.dq_dvre;
    jac.block(m, n + m, m, m) = -flow.dq_dvim;
    std::vector<MachineEval> me(n);
    for (int i = 0; i < n; ++i) {
      const int pos = c.bus_position(c.generators[i].bus);
      me[i] = eval_machine(c.generators[i], delta[i], v_re[pos], v_im[pos]);
      jac(pos, i) += me[i].dp_ddelta;
      jac(pos, n + pos) += me[i].dp_dvre;
      jac(pos, n + m + pos) += me[i].dp_dvim;
      jac(m + pos, i) += me[i].dq_ddelta;
      jac(m + pos, n + pos) += me[i].dq_dvre;
      jac(m + pos, n + m + pos) += me[i].dq_dvim;
    }
    int row = 2 * m;
    for (int i = 0; i < n; ++i) {
      if (i == slack) continue;
      const int pos = c.bus_position(c.generators[i].bus);
      jac(row, i) = -me[i].dp_ddelta;
      jac(row, n + pos) = -me[i].dp_dvre;
      jac(row, n + m + pos) = -me[i].dp_dvim;
      ++row;
    }
    jac(row, slack) = 1.0;

    Eigen::PartialPivLU<Mat> lu(jac);
    if (lu.rcond() < 1e-14)
      throw NumericalError(
          "solve_power_flow: singular power-flow Jacobian (voltage collapse)");
    const Vec dx = lu.solve(-f);

    // damped step: evaluate a halving ladder, keep the best trial
    double t = 1.0, best_t = 1.0;
    double best_norm = std::numeric_limits<double>::infinity();
    for (int h = 0; h < 10; ++h) {
      const Vec nd = delta + t * dx.head(n);
      const Vec nre = v_re + t * dx.segment(n, m);
      const Vec nim = v_im + t * dx.tail(m);
      const double norm2 = residual(nd, nre, nim).norm();
      if (norm2 < best_norm) {
        best_norm = norm2;
        best_t = t;
      }
      if (norm2 < 0.9 * f.norm()) break;  // good enough, stop probing
      t *= 0.5;
    }
    delta += best_t * dx.head(n);
    v_re += best_t * dx.segment(n, m);
    v_im += best_t * dx.tail(m);
    f = residual(delta, v_re, v_im);
    fnorm = f.lpNorm<Eigen::Infinity>();
  }
  if (fnorm >= opt.tol) {
    std::ostringstream os;
    os << "solve_power_flow: no convergence in " << opt.max_iterations
       << " iterations, final mismatch " << fnorm;
    throw ConvergenceError(os.str());
  }

  OperatingPoint op;
  op.delta0 = delta;
  op.v_re0 = v_re;
  op.v_im0 = v_im;
  op.iterations = iter;
  op.mismatch = f.head(2 * m).lpNorm<Eigen::Infinity>();

  op.p_inj = Vec::Zero(m);
  op.q_inj = Vec::Zero(m);
  const FlowEval flow = eval_flow(c, v_re, v_im, false);
  op.p_inj = flow.p;
  op.q_inj = flow.q;
  {
    const int pos = c.bus_position(c.generators[slack].bus);
    const auto e = eval_machine(c.generators[slack], delta[slack], v_re[pos], v_im[pos]);
    op.slack_p_mech = e.p;
  }
  for (const auto& farm : c.wind_farms) {
    const int pos = c.bus_position(farm.bus);
    op.wind0.push_back(wind_steady_state(
        farm, std::complex<double>(v_re[pos], v_im[pos])));
  }
  return op;
}

}  // namespace

}  // namespace windcoh
