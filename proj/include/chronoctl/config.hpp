#pragma once

#include <filesystem>
#include <optional>

#include <Eigen/Dense>
#include <json.hpp>

#include "chronoctl/expr.hpp"
#include "chronoctl/linsys.hpp"
#include "chronoctl/timescale.hpp"

namespace chronoctl {

/// Generator plus window. With `dual` set, the scale is the reflection of
/// the generated one (window given for the generated scale).
struct TimeScaleSpec {
  Generator generator;
  Rational lo;
  Rational hi;
  bool dual = false;

  TimeScale build() const;
};

/// In-memory form of a system config file. See docs/config.md.
struct SystemConfig {
  TimeScaleSpec timescale;
  Direction direction = Direction::backward_nabla;
  MatrixExpr A, B, C;
  std::optional<MatrixExpr> D;
  Rational anchor;
  std::optional<Interval> interval;
  std::optional<Eigen::VectorXd> initial_state;
  std::optional<MatrixExpr> control;  // m x 1
  std::optional<Rational> dense_step;

  LinearSystem system() const;
};

/// Throws DomainError (or ParseError for bad expressions) on invalid input.
SystemConfig parse_config(const nlohmann::json& j);
SystemConfig load_config(const std::filesystem::path& path);

/// Reads CHRONOCTL_DENSE_STEP, when set, into cfg.dense_step. load_config
/// does not call this; commands that build a grid do.
void apply_environment(SystemConfig& cfg);

nlohmann::json to_json(const SystemConfig& cfg);

/// Config of the dual system: reflected scale, flipped direction, A and B
/// negated and reflected, C, D and the control reflected.
SystemConfig dualize_config(const SystemConfig& cfg);

/// JSON value for an exact time: a number when the double round-trips
/// exactly, otherwise a "p/q" string.
nlohmann::json rational_to_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j);

}  // namespace chronoctl
