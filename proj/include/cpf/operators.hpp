#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <variant>

#include <boost/random/mersenne_twister.hpp>

namespace cpf {

/// What a synthetic operator perceives on one tick. Errors are the true
/// geometric errors; operators apply their own delay and noise.
struct Observation {
  std::int64_t tick = 0;
  double t = 0.0;
  double dt = 0.01;
  double e2 = 0.0;
  double e3 = 0.0;
  double curvature = 0.0;
  bool detected = true;
  bool assist_active = false;  // CC mode with the path detected
  double phi_y = 0.0;
};

struct LateralForce {
  double value = 0.0;
  bool operator==(const LateralForce&) const = default;
};
struct LateralPosition {
  double value = 0.0;
  bool operator==(const LateralPosition&) const = default;
};

struct OperatorAction {
  double phi_x_cmd = 0.0;
  std::variant<LateralForce, LateralPosition> lateral = LateralForce{};
  bool override_button = false;
  bool operator==(const OperatorAction&) const = default;
};

enum class OperatorKind { kCompliant, kManualPd, kHybrid };

struct OperatorParams {
  OperatorKind kind = OperatorKind::kHybrid;
  double reaction_delay = 0.3;      // s
  double sigma_e2 = 0.02;           // m
  double sigma_e3 = 0.05;           // rad
  double noise_correlation_time = 1.0;  // s
  double k_p2 = 2.0;
  double k_p3 = 1.5;
  double k_d = 0.3;
  double derivative_filter = 0.1;   // s
  double speed_setpoint = 0.67;     // stick fraction
  double slowdown_radius = 0.5;     // m; speed scaled by 1/(1 + |rho| r)
  std::uint64_t seed = 1;
};

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& name);

class Operator {
 public:
  virtual ~Operator() = default;
  virtual OperatorAction act(const Observation& obs) = 0;
};

/// Holds the speed setpoint and leaves the lateral axis alone.
class CompliantOperator final : public Operator {
 public:
  explicit CompliantOperator(double speed_setpoint) : speed_setpoint_(speed_setpoint) {}
  OperatorAction act(const Observation& obs) override;

 private:
  double speed_setpoint_;
};

/// Delayed, noisy PD steering in position mode.
class ManualPdOperator final : public Operator {
 public:
  explicit ManualPdOperator(const OperatorParams& params);
  OperatorAction act(const Observation& obs) override;

  /// Lateral stick target from the latest perceived errors.
  double lateral_command() const { return lateral_cmd_; }

 private:
  struct Sample {
    double e2;
    double e3;
    double curvature;
  };
  struct NoiseProcess {
    double previous = 0.0;
    double next = 0.0;
  };

  void advance_noise(double t);
  double noise_at(const NoiseProcess& n, double t) const;

  OperatorParams params_;
  boost::random::mt19937_64 rng_;
  std::deque<Sample> history_;
  std::size_t delay_ticks_ = 0;
  bool delay_initialized_ = false;
  NoiseProcess noise_e2_;
  NoiseProcess noise_e3_;
  std::int64_t knot_ = -1;  // index of noise_*.previous on the knot grid
  double last_e3_ = 0.0;
  double e3_rate_ = 0.0;
  bool have_last_ = false;
  double lateral_cmd_ = 0.0;
};

/// Complies while the assist is active; after the operator notices the assist
/// dropping out (one reaction delay) it steers manually, and hands back one
/// reaction delay after the assist returns.
class HybridOperator final : public Operator {
 public:
  explicit HybridOperator(const OperatorParams& params);
  OperatorAction act(const Observation& obs) override;

  bool manual() const { return manual_; }

 private:
  OperatorParams params_;
  ManualPdOperator manual_pd_;
  std::deque<bool> assist_history_;
  bool manual_ = false;
};

/// Returns whatever action was last set (zero-order hold). Drives the loop
/// from live or recorded input.
class HeldInputOperator final : public Operator {
 public:
  OperatorAction act(const Observation&) override { return action_; }
  void set(const OperatorAction& action) { action_ = action; }
  const OperatorAction& current() const { return action_; }

 private:
  OperatorAction action_{0.0, LateralPosition{0.0}, false};
};

std::unique_ptr<Operator> make_operator(const OperatorParams& params);

/// Noise knot spacing; fixed so that the noise realization does not depend on
/// the simulation step.
inline constexpr double kNoiseKnotSpacing = 0.05;

}  // namespace cpf
