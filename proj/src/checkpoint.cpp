#include "pdeopt/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace pdeopt {

namespace {

constexpr char kMagic[8] = {'P', 'D', 'E', 'O', 'P', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian");

void write_header(std::ofstream& os, const nlohmann::json& header) {
  os.write(kMagic, sizeof(kMagic));
  const std::string text = header.dump();
  const std::uint32_t version = kVersion;
  const std::uint32_t len = static_cast<std::uint32_t>(text.size());
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  os.write(reinterpret_cast<const char*>(&len), sizeof(len));
  os.write(text.data(), text.size());
}

nlohmann::json read_header(std::ifstream& is, const std::string& path) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint32_t version = 0, len = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  is.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!is || version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  std::string text(len, '\0');
  is.read(text.data(), len);
  if (!is) throw std::runtime_error("checkpoint: truncated header in " + path);
  return nlohmann::json::parse(text);
}

void write_doubles(std::ofstream& os, const Eigen::VectorXd& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& is, Eigen::VectorXd& v) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated payload");
}

}  // namespace

void save_field(const std::string& path, const DiscreteSpace& space, const Eigen::VectorXd& u) {
  if (u.size() != space.dof_count()) throw std::invalid_argument("save_field: size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_field: cannot open " + path);
  nlohmann::json header;
  header["kind"] = "field";
  header["dofs"] = space.dof_count();
  header["mesh_m"] = space.mesh().m;
  header["bc"] = space.mesh().bc == BoundaryKind::DirichletLeft ? "left" : "all";
  write_header(os, header);
  write_doubles(os, u);
  if (!os) throw std::runtime_error("save_field: write failed for " + path);
}

Eigen::VectorXd load_field(const std::string& path, const DiscreteSpace& space) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_field: cannot open " + path);
  const auto header = read_header(is, path);
  if (header.at("kind") != "field" || header.at("dofs") != space.dof_count() ||
      header.at("mesh_m") != space.mesh().m)
    throw std::runtime_error("load_field: checkpoint does not match the space");
  Eigen::VectorXd u(space.dof_count());
  read_doubles(is, u);
  return u;
}

void save_saga_state(const std::string& path, const DiscreteOcp& ocp, const SagaState& state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_saga_state: cannot open " + path);
  char tau_str[32];
  std::snprintf(tau_str, sizeof(tau_str), "%.17g", state.tau);
  nlohmann::json header;
  header["kind"] = "saga_state";
  header["dofs"] = ocp.space().dof_count();
  header["n"] = ocp.n();
  header["k"] = state.k;
  header["tau"] = tau_str;
  header["rng_state"] = std::to_string(state.rng_state);
  header["has_phis"] = !state.phis.empty();
  write_header(os, header);
  write_doubles(os, state.u);
  write_doubles(os, state.grad_sum);
  for (const auto& g : state.grads) write_doubles(os, g);
  for (const auto& p : state.phis) write_doubles(os, p);
  if (!os) throw std::runtime_error("save_saga_state: write failed for " + path);
}

SagaState load_saga_state(const std::string& path, const DiscreteOcp& ocp) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_saga_state: cannot open " + path);
  const auto header = read_header(is, path);
  if (header.at("kind") != "saga_state" || header.at("dofs") != ocp.space().dof_count() ||
      header.at("n") != ocp.n())
    throw std::runtime_error("load_saga_state: checkpoint does not match the problem");

  SagaState state;
  state.k = header.at("k").get<long>();
  state.tau = std::stod(header.at("tau").get<std::string>());
  state.rng_state = std::stoull(header.at("rng_state").get<std::string>());
  const int dofs = ocp.space().dof_count();
  state.u.resize(dofs);
  state.grad_sum.resize(dofs);
  read_doubles(is, state.u);
  read_doubles(is, state.grad_sum);
  state.grads.assign(ocp.n(), Eigen::VectorXd(dofs));
  for (auto& g : state.grads) read_doubles(is, g);
  if (header.at("has_phis").get<bool>()) {
    state.phis.assign(ocp.n(), Eigen::VectorXd(dofs));
    for (auto& p : state.phis) read_doubles(is, p);
  }
  return state;
}

}  // namespace pdeopt
