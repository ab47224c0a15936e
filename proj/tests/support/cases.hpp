#pragma once

#include <string>

#include "windcoh/netmodel.hpp"

namespace windcoh::testcases {

inline std::string data_dir() { return WINDCOH_DATA_DIR; }
inline std::string benchmark_case() { return data_dir() + "/ieee68_nets_nyps.json"; }
inline std::string registry_path() { return data_dir() + "/wind_registry.json"; }

inline Bus make_bus(int id, double load_p = 0.0, double load_q = 0.0) {
  Bus b;
  b.id = id;
  b.load_p = load_p;
  b.load_q = load_q;
  return b;
}

inline Line make_line(int from, int to, double b, double charging = 0.0) {
  Line l;
  l.from = from;
  l.to = to;
  l.b = b;
  l.charging_b = charging;
  return l;
}

inline SynchronousGenerator make_gen(int bus, double m, double xdp, double emf,
                                     double p_mech) {
  SynchronousGenerator g;
  g.bus = bus;
  g.inertia_m = m;
  g.xd_prime = xdp;
  g.emf = emf;
  g.p_mech = p_mech;
  return g;
}

inline void refresh_kinds(NetworkCase& c) {
  for (auto& b : c.buses) {
    b.kind = BusKind::NonGen;
    for (const auto& g : c.generators)
      if (g.bus == b.id) b.kind = BusKind::SyncGen;
    for (const auto& w : c.wind_farms)
      if (w.bus == b.id && b.kind == BusKind::NonGen) b.kind = BusKind::WindGen;
  }
}

// machine 1 sends ~0.5 pu to a load at bus 2 over B = 5; machine 2 idles as
// the slack
inline NetworkCase two_bus_case() {
  NetworkCase c;
  c.name = "two-bus";
  c.buses = {make_bus(1), make_bus(2, 0.5)};
  c.lines = {make_line(1, 2, 5.0)};
  c.generators = {make_gen(1, 0.1, 0.25, 1.05, 0.5),
                  make_gen(2, 0.2, 0.25, 1.05, 0.0)};
  c.slack_machine = 1;
  refresh_kinds(c);
  return c;
}

// three identical machines on a symmetric unloaded ring
inline NetworkCase three_ring_case(double b = 5.0) {
  NetworkCase c;
  c.name = "three-ring";
  c.buses = {make_bus(1), make_bus(2), make_bus(3)};
  c.lines = {make_line(1, 2, b), make_line(2, 3, b), make_line(1, 3, b)};
  c.generators = {make_gen(1, 0.1, 0.5, 1.0, 0.0),
                  make_gen(2, 0.1, 0.4, 1.0, 0.0),
                  make_gen(3, 0.1, 0.25, 1.0, 0.0)};
  c.slack_machine = 0;
  refresh_kinds(c);
  return c;
}

// two stiff pairs bridged by one weak tie, plus a wind-capable middle bus:
// machines at 1,2,3,4; network buses 5 (area A side), 6 (area B side)
inline NetworkCase two_area_case() {
  NetworkCase c;
  c.name = "two-area";
  c.buses = {make_bus(1), make_bus(2), make_bus(3),
             make_bus(4), make_bus(5, 0.6, 0.1), make_bus(6, 0.4, 0.1)};
  c.lines = {make_line(1, 5, 20.0), make_line(2, 5, 20.0),
             make_line(3, 6, 20.0), make_line(4, 6, 20.0),
             make_line(5, 6, 1.2)};
  c.generators = {make_gen(1, 0.10, 0.20, 1.03, 0.30),
                  make_gen(2, 0.12, 0.22, 1.03, 0.25),
                  make_gen(3, 0.11, 0.21, 1.03, 0.25),
                  make_gen(4, 0.13, 0.23, 1.03, 0.0)};
  c.slack_machine = 3;
  refresh_kinds(c);
  return c;
}

// direct -Laplacian of a weighted graph (for split/coherency toys)
inline Mat minus_laplacian(int n, const std::vector<std::tuple<int, int, double>>& e) {
  Mat l = Mat::Zero(n, n);
  for (const auto& [i, j, w] : e) {
    l(i, j) += w;
    l(j, i) += w;
    l(i, i) -= w;
    l(j, j) -= w;
  }
  return l;
}

inline WindFarmSpec test_farm(int bus, int gamma, double nu = 12.0) {
  const auto registry = load_wind_registry(registry_path(), 100.0);
  return make_farm(registry.at("wt1760"), bus, gamma, nu);
}

}  // namespace windcoh::testcases
