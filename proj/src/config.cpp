#include "chronoctl/config.hpp"

#include <cstdlib>
#include <fstream>

#include "chronoctl/errors.hpp"

namespace chronoctl {

using nlohmann::json;

namespace {

const char* kind_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::reals: return "reals";
    case GeneratorKind::integers: return "integers";
    case GeneratorKind::h_integers: return "h_integers";
    case GeneratorKind::periodic_union: return "periodic_union";
    case GeneratorKind::explicit_list: return "explicit";
  }
  return "?";
}

GeneratorKind kind_from_name(const std::string& s) {
  for (auto k : {GeneratorKind::reals, GeneratorKind::integers, GeneratorKind::h_integers,
                 GeneratorKind::periodic_union, GeneratorKind::explicit_list}) {
    if (s == kind_name(k)) return k;
  }
  throw DomainError("unknown timescale kind '" + s + "'");
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw DomainError(std::string("config: missing field '") + key + "'");
  return j.at(key);
}

std::string entry_text(const json& e) {
  if (e.is_string()) return e.get<std::string>();
  if (e.is_number()) return e.dump();
  throw DomainError("config: matrix entries must be strings or numbers");
}

MatrixExpr matrix_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.empty()) throw DomainError(std::string("config: ") + name + " must be a non-empty array of rows");
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : j) {
    if (!row.is_array()) throw DomainError(std::string("config: ") + name + " rows must be arrays");
    std::vector<std::string> r;
    for (const auto& e : row) r.push_back(entry_text(e));
    rows.push_back(std::move(r));
  }
  try {
    return MatrixExpr::parse(rows);
  } catch (const ParseError& e) {
    throw ParseError(std::string("config: ") + name + ": " + e.what(), e.position());
  }
}

json matrix_to_json(const MatrixExpr& m) { return m.print(); }

Interval pair_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2) throw DomainError(std::string("config: ") + name + " must be [lo, hi]");
  Interval iv{rational_from_json(j[0]), rational_from_json(j[1])};
  if (iv.hi < iv.lo) throw DomainError(std::string("config: ") + name + " has lo > hi");
  return iv;
}

}  // namespace

json rational_to_json(const Rational& r) {
  const double d = to_double(r);
  if (rational_from_double(d) == r) return d;
  return to_string(r);
}

Rational rational_from_json(const json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number()) return rational_from_double(j.get<double>());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw DomainError("config: expected a number or a rational string");
}

TimeScale TimeScaleSpec::build() const {
  TimeScale ts = from_generator(generator, lo, hi);
  return dual ? ts.dual() : ts;
}

LinearSystem SystemConfig::system() const {
  return LinearSystem(direction, timescale.build(), A, B, C, D, anchor, dense_step);
}

SystemConfig parse_config(const json& j) {
  if (!j.is_object()) throw DomainError("config: top level must be an object");
  SystemConfig cfg;

  const json& ts = field(j, "timescale");
  Generator& gen = cfg.timescale.generator;
  gen.kind = kind_from_name(field(ts, "kind").get<std::string>());
  if (ts.contains("h")) gen.h = rational_from_json(ts["h"]);
  if (ts.contains("a")) gen.a = rational_from_json(ts["a"]);
  if (ts.contains("b")) gen.b = rational_from_json(ts["b"]);
  if (ts.contains("items")) {
    for (const auto& item : ts["items"]) {
      if (item.is_array()) {
        gen.items.push_back(pair_from_json(item, "timescale item"));
      } else {
        const Rational t = rational_from_json(item);
        gen.items.push_back({t, t});
      }
    }
  }
  const Interval window = pair_from_json(field(ts, "window"), "timescale window");
  cfg.timescale.lo = window.lo;
  cfg.timescale.hi = window.hi;
  cfg.timescale.dual = ts.value("dual", false);

  const std::string dir = j.value("direction", std::string("backward"));
  if (dir == "backward") {
    cfg.direction = Direction::backward_nabla;
  } else if (dir == "forward") {
    cfg.direction = Direction::forward_delta;
  } else {
    throw DomainError("config: direction must be 'backward' or 'forward'");
  }

  cfg.A = matrix_from_json(field(j, "A"), "A");
  cfg.B = matrix_from_json(field(j, "B"), "B");
  cfg.C = matrix_from_json(field(j, "C"), "C");
  if (j.contains("D")) cfg.D = matrix_from_json(j["D"], "D");
  cfg.anchor = rational_from_json(field(j, "anchor"));
  if (j.contains("interval")) cfg.interval = pair_from_json(j["interval"], "interval");
  if (j.contains("initial_state")) {
    const auto& v = j["initial_state"];
    if (!v.is_array()) throw DomainError("config: initial_state must be an array");
    Eigen::VectorXd y(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw DomainError("config: initial_state entries must be numbers");
      y(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    cfg.initial_state = y;
  }
  if (j.contains("control")) {
    const auto& c = j["control"];
    if (!c.is_array()) throw DomainError("config: control must be an array of expressions");
    json rows = json::array();
    for (const auto& e : c) rows.push_back(json::array({e}));
    cfg.control = matrix_from_json(rows, "control");
  }
  if (j.contains("dense_step")) {
    cfg.dense_step = rational_from_json(j["dense_step"]);
    if (*cfg.dense_step <= Rational(0)) throw DomainError("config: dense_step must be positive");
  }

  // Shape and anchor checks surface here, before any command runs.
  const LinearSystem sys = cfg.system();
  if (cfg.initial_state && cfg.initial_state->size() != sys.n()) {
    throw DomainError("config: initial_state has wrong dimension");
  }
  if (cfg.control && cfg.control->rows() != sys.m()) {
    throw DomainError("config: control has wrong dimension");
  }
  if (cfg.interval) {
    if (!sys.grid().find(cfg.interval->lo) || !sys.grid().find(cfg.interval->hi)) {
      throw DomainError("config: interval endpoints must be grid points of the scale");
    }
  }
  return cfg;
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DomainError("config: invalid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

void apply_environment(SystemConfig& cfg) {
  if (const char* env = std::getenv("CHRONOCTL_DENSE_STEP"); env && *env) {
    const Rational h = parse_rational(env);
    if (h <= Rational(0)) throw DomainError("CHRONOCTL_DENSE_STEP must be positive");
    cfg.dense_step = h;
  }
}

json to_json(const SystemConfig& cfg) {
  json j;
  json ts;
  const Generator& gen = cfg.timescale.generator;
  ts["kind"] = kind_name(gen.kind);
  switch (gen.kind) {
    case GeneratorKind::h_integers: ts["h"] = rational_to_json(gen.h); break;
    case GeneratorKind::periodic_union:
      ts["a"] = rational_to_json(gen.a);
      ts["b"] = rational_to_json(gen.b);
      break;
    case GeneratorKind::explicit_list: {
      json items = json::array();
      for (const auto& it : gen.items) {
        if (it.degenerate()) {
          items.push_back(rational_to_json(it.lo));
        } else {
          items.push_back(json::array({rational_to_json(it.lo), rational_to_json(it.hi)}));
        }
      }
      ts["items"] = items;
      break;
    }
    default: break;
  }
  ts["window"] = json::array({rational_to_json(cfg.timescale.lo), rational_to_json(cfg.timescale.hi)});
  ts["dual"] = cfg.timescale.dual;
  j["timescale"] = ts;
  j["direction"] = cfg.direction == Direction::backward_nabla ? "backward" : "forward";
  j["A"] = matrix_to_json(cfg.A);
  j["B"] = matrix_to_json(cfg.B);
  j["C"] = matrix_to_json(cfg.C);
  if (cfg.D) j["D"] = matrix_to_json(*cfg.D);
  j["anchor"] = rational_to_json(cfg.anchor);
  if (cfg.interval) {
    j["interval"] = json::array({rational_to_json(cfg.interval->lo), rational_to_json(cfg.interval->hi)});
  }
  if (cfg.initial_state) {
    j["initial_state"] = std::vector<double>(cfg.initial_state->begin(), cfg.initial_state->end());
  }
  if (cfg.control) {
    json c = json::array();
    for (const auto& row : cfg.control->print()) c.push_back(row.front());
    j["control"] = c;
  }
  if (cfg.dense_step) j["dense_step"] = rational_to_json(*cfg.dense_step);
  return j;
}

SystemConfig dualize_config(const SystemConfig& cfg) {
  SystemConfig out = cfg;
  out.timescale.dual = !cfg.timescale.dual;
  out.direction = cfg.direction == Direction::backward_nabla ? Direction::forward_delta
                                                             : Direction::backward_nabla;
  out.A = cfg.A.reflect_time(true);
  out.B = cfg.B.reflect_time(true);
  out.C = cfg.C.reflect_time(false);
  if (cfg.D) out.D = cfg.D->reflect_time(false);
  out.anchor = -cfg.anchor;
  if (cfg.interval) out.interval = Interval{-cfg.interval->hi, -cfg.interval->lo};
  if (cfg.control) out.control = cfg.control->reflect_time(false);
  return out;
}

}  // namespace chronoctl
