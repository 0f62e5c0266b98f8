#pragma once

// Pose graph over world-from-camera poses with relative-pose edges, simple
// proximity loop-closure candidates and Levenberg-Marquardt optimization.

#include <filesystem>
#include <optional>
#include <vector>

#include "dynodom/types.hpp"

namespace dynodom {

struct PoseGraphEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  Se3d measurement;     ///< expected nodes[from]^-1 * nodes[to]
  double weight = 1.0;  ///< scalar information
  bool loop_closure = false;
};

struct PoseGraph {
  std::vector<Se3d> nodes;
  std::vector<PoseGraphEdge> edges;

  /// Graph with a single anchor node.
  static PoseGraph with_origin(const Se3d& origin = Se3d::identity());
};

/// Appends nodes.back() * rel and an odometry edge; returns the new index.
std::size_t append_odometry(PoseGraph& graph, const Se3d& rel, double weight = 1.0);

struct LoopCandidate {
  std::size_t from = 0;  ///< earlier node
  std::size_t to = 0;    ///< current (last) node
  Se3d measurement;      ///< from the current estimate; must be validated visually
};

/// Nearest earlier node within `radius` meters of the last node whose index is
/// at least `min_gap` below it. Ties resolve to the earliest node.
std::optional<LoopCandidate> detect_loop_closure(const PoseGraph& graph, double radius,
                                                 std::size_t min_gap);

/// 6-vector residual log(measurement^-1 * nodes[from]^-1 * nodes[to]).
Vector6d edge_residual(const PoseGraphEdge& edge, const std::vector<Se3d>& nodes);

/// Jacobians of edge_residual w.r.t. right perturbations nodes[k] * exp(delta).
void edge_jacobians(const PoseGraphEdge& edge, const std::vector<Se3d>& nodes,
                    Matrix6d& d_from, Matrix6d& d_to);

/// Sum over edges of weight * |residual|^2.
double total_cost(const PoseGraph& graph, const std::vector<Se3d>& nodes);

struct OptimizeResult {
  std::vector<Se3d> nodes;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  std::vector<double> cost_history;  ///< cost after each accepted step
};

/// Levenberg-Marquardt with node 0 held fixed. Stops after `max_iterations`
/// or when the relative cost change of an accepted step drops below 1e-9.
/// Throws if the graph is disconnected or a residual is not finite.
OptimizeResult optimize(const PoseGraph& graph, int max_iterations = 50, double damping = 1e-4);

/// Text dump: "NODE id tx ty tz qx qy qz qw" and "EDGE i j tx ty tz qx qy qz qw w".
void write_pose_graph(const PoseGraph& graph, const std::filesystem::path& path);
PoseGraph read_pose_graph(const std::filesystem::path& path);

}  // namespace dynodom
