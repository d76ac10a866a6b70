#include "cpf/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

namespace cpf {

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::kCompliant:
      return "compliant";
    case OperatorKind::kManualPd:
      return "manual_pd";
    case OperatorKind::kHybrid:
      return "hybrid";
  }
  return "unknown";
}

OperatorKind operator_kind_from_string(const std::string& name) {
  if (name == "compliant") return OperatorKind::kCompliant;
  if (name == "manual_pd") return OperatorKind::kManualPd;
  if (name == "hybrid") return OperatorKind::kHybrid;
  throw std::invalid_argument("unknown operator kind '" + name + "'");
}

OperatorAction CompliantOperator::act(const Observation&) {
  return {speed_setpoint_, LateralForce{0.0}, false};
}

ManualPdOperator::ManualPdOperator(const OperatorParams& params)
    : params_(params), rng_(params.seed) {}

void ManualPdOperator::advance_noise(double t) {
  const double keep = std::exp(-kNoiseKnotSpacing / params_.noise_correlation_time);
  const double innovation = std::sqrt(1.0 - keep * keep);
  boost::random::normal_distribution<double> normal;
  auto draw_next = [&] {
    noise_e2_.next = keep * noise_e2_.previous + innovation * params_.sigma_e2 * normal(rng_);
    noise_e3_.next = keep * noise_e3_.previous + innovation * params_.sigma_e3 * normal(rng_);
  };
  if (knot_ < 0) {
    noise_e2_.previous = params_.sigma_e2 * normal(rng_);
    noise_e3_.previous = params_.sigma_e3 * normal(rng_);
    draw_next();
    knot_ = 0;
  }
  const auto target = static_cast<std::int64_t>(std::floor(t / kNoiseKnotSpacing));
  while (knot_ < target) {
    noise_e2_.previous = noise_e2_.next;
    noise_e3_.previous = noise_e3_.next;
    draw_next();
    ++knot_;
  }
}

double ManualPdOperator::noise_at(const NoiseProcess& n, double t) const {
  const double frac =
      std::clamp(t / kNoiseKnotSpacing - static_cast<double>(knot_), 0.0, 1.0);
  return n.previous + frac * (n.next - n.previous);
}

OperatorAction ManualPdOperator::act(const Observation& obs) {
  if (!delay_initialized_) {
    delay_ticks_ = static_cast<std::size_t>(std::llround(params_.reaction_delay / obs.dt));
    delay_initialized_ = true;
  }
  history_.push_back({obs.e2, obs.e3, obs.curvature});
  while (history_.size() > delay_ticks_ + 1) history_.pop_front();
  const Sample& seen = history_.front();

  advance_noise(obs.t);
  const double e2 = seen.e2 + noise_at(noise_e2_, obs.t);
  const double e3 = seen.e3 + noise_at(noise_e3_, obs.t);

  const double raw_rate = have_last_ ? (e3 - last_e3_) / obs.dt : 0.0;
  e3_rate_ += obs.dt / (params_.derivative_filter + obs.dt) * (raw_rate - e3_rate_);
  last_e3_ = e3;
  have_last_ = true;

  // Positive e2/e3 put the path to the left, which positive stick turns toward.
  lateral_cmd_ = std::clamp(params_.k_p2 * e2 + params_.k_p3 * e3 + params_.k_d * e3_rate_,
                            -1.0, 1.0);
  const double speed =
      params_.speed_setpoint / (1.0 + std::abs(seen.curvature) * params_.slowdown_radius);
  return {std::clamp(speed, -1.0, 1.0), LateralPosition{lateral_cmd_}, false};
}

HybridOperator::HybridOperator(const OperatorParams& params)
    : params_(params), manual_pd_(params) {}

OperatorAction HybridOperator::act(const Observation& obs) {
  const auto delay = static_cast<std::size_t>(std::llround(params_.reaction_delay / obs.dt));
  assist_history_.push_back(obs.assist_active);
  while (assist_history_.size() > delay + 1) assist_history_.pop_front();
  manual_ = !assist_history_.front();

  const OperatorAction manual_action = manual_pd_.act(obs);
  if (manual_) return manual_action;
  return {std::clamp(params_.speed_setpoint, -1.0, 1.0), LateralForce{0.0}, false};
}

std::unique_ptr<Operator> make_operator(const OperatorParams& params) {
  switch (params.kind) {
    case OperatorKind::kCompliant:
      return std::make_unique<CompliantOperator>(params.speed_setpoint);
    case OperatorKind::kManualPd:
      return std::make_unique<ManualPdOperator>(params);
    case OperatorKind::kHybrid:
      return std::make_unique<HybridOperator>(params);
  }
  throw std::invalid_argument("unknown operator kind");
}

}  // namespace cpf
