#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "windcoh/netmodel.hpp"

namespace windcoh {

namespace {
using nlohmann::json;

NetworkCase from_json(const json& j, const std::string& registry_path) {
  NetworkCase c;
  c.base_mva = j.value("base_mva", 100.0);
  c.name = j.value("name", std::string{});

  for (const auto& b : j.at("buses")) {
    Bus bus;
    bus.id = b.at("id").get<int>();
    bus.g_shunt = b.value("g_shunt", 0.0);
    bus.b_shunt = b.value("b_shunt", 0.0);
    bus.load_p = b.value("load_p", 0.0);
    bus.load_q = b.value("load_q", 0.0);
    c.buses.push_back(bus);
  }
  for (const auto& l : j.at("lines")) {
    Line line;
    line.from = l.at("from").get<int>();
    line.to = l.at("to").get<int>();
    line.b = l.at("b").get<double>();
    line.charging_b = l.value("charging_b", 0.0);
    line.r = l.value("r", 0.0);
    c.lines.push_back(line);
  }
  for (const auto& g : j.at("generators")) {
    SynchronousGenerator gen;
    gen.bus = g.at("bus").get<int>();
    gen.inertia_m = g.at("m").get<double>();
    gen.xd_prime = g.at("xd_prime").get<double>();
    gen.emf = g.at("emf").get<double>();
    gen.p_mech = g.at("p_mech").get<double>();
    gen.damping = g.value("damping", 0.0);
    c.generators.push_back(gen);
  }

  if (j.contains("wind_farms") && !j.at("wind_farms").empty()) {
    std::map<std::string, WindUnitModel> registry;
    if (!registry_path.empty())
      registry = load_wind_registry(registry_path, c.base_mva);
    for (const auto& w : j.at("wind_farms")) {
      const int bus = w.at("bus").get<int>();
      const int gamma = w.at("gamma").get<int>();
      const double nu = w.value("wind_speed", 12.0);
      const double qset = w.value("q_setpoint", 0.0);
      const std::string model = w.value("model", std::string{});
      if (model.empty())
        throw ValidationError("wind farm entry needs a registry model name");
      auto it = registry.find(model);
      if (it == registry.end())
        throw ValidationError("wind model '" + model +
                              "' not found in registry " + registry_path);
      c.wind_farms.push_back(make_farm(it->second, bus, gamma, nu, qset));
    }
  }
  if (j.contains("slack_machine")) c.slack_machine = j.at("slack_machine").get<int>();

  // derive bus kinds from the attached equipment
  std::set<int> mb, fb;
  for (const auto& g : c.generators) mb.insert(g.bus);
  for (const auto& f : c.wind_farms) fb.insert(f.bus);
  for (auto& b : c.buses)
    b.kind = mb.count(b.id) ? BusKind::SyncGen
                            : (fb.count(b.id) ? BusKind::WindGen : BusKind::NonGen);
  return c;
}
}  // namespace

NetworkCase parse_case(const std::string& text, const std::string& registry_path) {
  return from_json(json::parse(text), registry_path);
}

NetworkCase load_case(const std::string& path, const std::string& registry_path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open case file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError("cannot parse case file " + path + ": " + e.what());
  }
  return from_json(j, registry_path);
}

}  // namespace windcoh
