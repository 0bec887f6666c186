#pragma once

#include <Eigen/Dense>
#include <string>

#include "pdeopt/fem.hpp"
#include "pdeopt/optim.hpp"

namespace pdeopt {

// Binary checkpoints: 8-byte magic, format version, JSON header describing
// the payload, then raw little-endian 64-bit floats.

void save_field(const std::string& path, const DiscreteSpace& space, const Eigen::VectorXd& u);
Eigen::VectorXd load_field(const std::string& path, const DiscreteSpace& space);

void save_saga_state(const std::string& path, const DiscreteOcp& ocp, const SagaState& state);
SagaState load_saga_state(const std::string& path, const DiscreteOcp& ocp);

}  // namespace pdeopt
