#pragma once

#include <memory>
#include <string>

#include "dwmpc/mpc.hpp"

namespace dwmpc {

enum class ControllerKind { Pid, LinMpcLinGp, MpcLinGp, MpcFullGp };

ControllerKind parse_controller_kind(const std::string& name);
std::string controller_kind_name(ControllerKind kind);

/// Cascaded position -> attitude -> wrench PID. Gains are tuned once on
/// the disturbance-free hover task; the integrator is clamped for
/// anti-windup.
struct PidGains {
  Vec3 kp_pos{10.0, 10.0, 12.0};
  Vec3 ki_pos{2.0, 2.0, 3.0};
  Vec3 kd_pos{7.0, 7.0, 8.0};
  Vec3 integrator_limit{0.15, 0.15, 0.15};  // on the integral state, m s
  Vec3 integration_band{0.1, 0.1, 0.1};     // integrate only near target, m
  double kp_att = 280.0;
  double kd_att = 33.0;
  double kp_yaw = 60.0;
  double kd_yaw = 12.0;
  double max_tilt = 0.45;  // rad

  void validate() const;
};

class PidController : public Controller {
 public:
  PidController(const QuadrotorParams& quad, const PidGains& gains, double dt);

  ControlDecision step(const DroneState& self, const QuinticTrajectory& ref,
                       double t, const std::optional<DroneState>& other) override;
  void reset() override;

 private:
  QuadrotorParams quad_;
  PidGains gains_;
  double dt_;
  Vec3 integral_ = Vec3::Zero();
};

/// Sequential-linearization MPC with the LinGP disturbance channel
/// (MPC-LinGP). Relinearizes the drone model around the previous
/// predicted trajectory each control step; every inner iteration
/// rebuilds and refactors the QP, which is what makes it strictly more
/// expensive than the fixed hover-linear controller.
class SeqLinMpcController : public Controller {
 public:
  SeqLinMpcController(const QuadrotorParams& quad, const MpcConfig& cfg,
                      DisturbanceModel disturbance, int inner_iters = 2);

  ControlDecision step(const DroneState& self, const QuinticTrajectory& ref,
                       double t, const std::optional<DroneState>& other) override;
  void reset() override;

 private:
  QuadrotorParams quad_;
  MpcConfig cfg_;
  DisturbanceModel disturbance_;
  int inner_iters_;
  CostSpec cost_;
  BoxConstraints boxes_;  // absolute coordinates
  Mat12x3 d_map_;
  Vec4 u_hover_;
  std::vector<Vec12> state_guess_;  // N+1 entries
  std::vector<Vec4> input_guess_;   // N entries
  bool has_plan_ = false;
  std::optional<QpSolution> warm_;
  std::optional<ControlInput> last_applied_;

  void seed_plan(const Vec12& x0);
};

/// MPC with the full GP mean along the horizon (MPC-FullGP). Outer loop
/// alternates solving and re-evaluating the GP at the newly predicted
/// relative positions, up to three times or until the first input
/// settles.
class FullGpMpcController : public Controller {
 public:
  FullGpMpcController(const QuadrotorParams& quad, const MpcConfig& cfg,
                      const GpModel* gp, int max_outer_iters = 3,
                      double input_settle_tol = 1e-4);

  ControlDecision step(const DroneState& self, const QuinticTrajectory& ref,
                       double t, const std::optional<DroneState>& other) override;
  void reset() override;

 private:
  QuadrotorParams quad_;
  MpcConfig cfg_;
  const GpModel* gp_;
  int max_outer_iters_;
  double input_settle_tol_;
  CostSpec cost_;
  BoxConstraints boxes_;
  Mat12x3 d_map_;
  Vec4 u_hover_;
  std::vector<Vec12> state_guess_;
  std::vector<Vec4> input_guess_;
  bool has_plan_ = false;
  std::optional<QpSolution> warm_;
  std::optional<ControlInput> last_applied_;

  void seed_plan(const Vec12& x0);
};

std::unique_ptr<Controller> make_controller(ControllerKind kind,
                                            const QuadrotorParams& quad,
                                            const MpcConfig& mpc_cfg,
                                            const PidGains& pid_gains,
                                            const GpModel* gp);

}  // namespace dwmpc
