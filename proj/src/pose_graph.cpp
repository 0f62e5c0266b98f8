#include "dynodom/pose_graph.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "dynodom/dataset_io.hpp"

namespace dynodom {

PoseGraph PoseGraph::with_origin(const Se3d& origin) {
  PoseGraph g;
  g.nodes.push_back(origin);
  return g;
}

std::size_t append_odometry(PoseGraph& graph, const Se3d& rel, double weight) {
  if (!(weight >= 0)) throw PreconditionError("append_odometry: weight must be >= 0");
  if (graph.nodes.empty()) graph.nodes.push_back(Se3d::identity());
  const std::size_t from = graph.nodes.size() - 1;
  graph.nodes.push_back((graph.nodes.back() * rel).normalized());
  graph.edges.push_back({from, from + 1, rel, weight, false});
  return from + 1;
}

std::optional<LoopCandidate> detect_loop_closure(const PoseGraph& graph, double radius,
                                                 std::size_t min_gap) {
  if (!(radius > 0)) throw PreconditionError("detect_loop_closure: radius must be > 0");
  if (min_gap < 1) throw PreconditionError("detect_loop_closure: min_gap must be >= 1");
  if (graph.nodes.size() <= min_gap) return std::nullopt;
  const std::size_t current = graph.nodes.size() - 1;
  const Eigen::Vector3d p = graph.nodes[current].translation();
  std::optional<LoopCandidate> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + min_gap <= current; ++i) {
    const double d = (graph.nodes[i].translation() - p).norm();
    if (d <= radius && d < best_d) {
      best_d = d;
      best = LoopCandidate{i, current, graph.nodes[i].inverse() * graph.nodes[current]};
    }
  }
  return best;
}

Vector6d edge_residual(const PoseGraphEdge& edge, const std::vector<Se3d>& nodes) {
  const Se3d err = edge.measurement.inverse() * nodes[edge.from].inverse() * nodes[edge.to];
  return err.log();
}

void edge_jacobians(const PoseGraphEdge& edge, const std::vector<Se3d>& nodes,
                    Matrix6d& d_from, Matrix6d& d_to) {
  const Vector6d r = edge_residual(edge, nodes);
  const Matrix6d jr_inv = se3_right_jacobian_inverse(r);
  d_to = jr_inv;
  // nodes[from] * exp(d) enters inverted: err * exp(-Ad(T_to^-1 T_from) d).
  d_from = -jr_inv * adjoint(nodes[edge.to].inverse() * nodes[edge.from]);
}

double total_cost(const PoseGraph& graph, const std::vector<Se3d>& nodes) {
  double cost = 0.0;
  for (const auto& e : graph.edges) cost += e.weight * edge_residual(e, nodes).squaredNorm();
  return cost;
}

namespace {

void check_connected(const PoseGraph& graph) {
  const std::size_t n = graph.nodes.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : graph.edges) {
    if (e.from >= n || e.to >= n) throw PreconditionError("pose graph edge index out of range");
    parent[find(e.from)] = find(e.to);
  }
  const std::size_t root = find(0);
  for (std::size_t i = 1; i < n; ++i) {
    if (find(i) != root) {
      throw PreconditionError("pose graph is disconnected (node " + std::to_string(i) +
                              " unreachable from node 0)");
    }
  }
}

}  // namespace

OptimizeResult optimize(const PoseGraph& graph, int max_iterations, double damping) {
  if (graph.nodes.empty()) throw PreconditionError("optimize: empty pose graph");
  check_connected(graph);
  OptimizeResult result;
  result.nodes = graph.nodes;
  result.initial_cost = result.final_cost = total_cost(graph, result.nodes);
  if (!std::isfinite(result.initial_cost)) throw NumericalError("optimize: non-finite residual");
  const std::size_t n = graph.nodes.size();
  if (n < 2 || graph.edges.empty()) return result;

  const Eigen::Index dim = static_cast<Eigen::Index>(6 * (n - 1));
  double lambda = damping > 0 ? damping : 1e-4;
  double cost = result.initial_cost;

  for (int it = 0; it < max_iterations; ++it) {
    result.iterations = it + 1;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(graph.edges.size() * 4 * 36);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);

    for (const auto& e : graph.edges) {
      const Vector6d r = edge_residual(e, result.nodes);
      if (!r.allFinite()) throw NumericalError("optimize: non-finite residual");
      Matrix6d J[2];
      edge_jacobians(e, result.nodes, J[0], J[1]);
      const std::size_t ids[2] = {e.from, e.to};
      for (int a = 0; a < 2; ++a) {
        if (ids[a] == 0) continue;
        const Eigen::Index ra = static_cast<Eigen::Index>(6 * (ids[a] - 1));
        b.segment<6>(ra) -= e.weight * J[a].transpose() * r;
        for (int c = 0; c < 2; ++c) {
          if (ids[c] == 0) continue;
          const Eigen::Index rc = static_cast<Eigen::Index>(6 * (ids[c] - 1));
          const Matrix6d block = e.weight * J[a].transpose() * J[c];
          for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) triplets.emplace_back(ra + i, rc + j, block(i, j));
          }
          if (a == c) diag.segment<6>(ra) += block.diagonal();
        }
      }
    }
    Eigen::SparseMatrix<double> H(dim, dim);
    H.setFromTriplets(triplets.begin(), triplets.end());

    bool accepted = false;
    while (!accepted && lambda < 1e12) {
      Eigen::SparseMatrix<double> A = H;
      for (Eigen::Index i = 0; i < dim; ++i) {
        A.coeffRef(i, i) += lambda * std::max(diag(i), 1e-9);
      }
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd delta = solver.solve(b);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      std::vector<Se3d> trial = result.nodes;
      for (std::size_t k = 1; k < n; ++k) {
        trial[k] = (trial[k] * Se3d::exp(delta.segment<6>(6 * (k - 1)))).normalized();
      }
      const double trial_cost = total_cost(graph, trial);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
        result.nodes = std::move(trial);
        cost = trial_cost;
        result.cost_history.push_back(cost);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (rel < 1e-9) {
          result.final_cost = cost;
          return result;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;  // no descent direction left at any damping
  }
  result.final_cost = cost;
  return result;
}

void write_pose_graph(const PoseGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pose graph " + path.string());
  auto pose_fields = [&](const Se3d& T) {
    const Eigen::Quaterniond q = T.quaternion();
    const auto& t = T.translation();
    out << ' ' << format_double(t.x()) << ' ' << format_double(t.y()) << ' '
        << format_double(t.z()) << ' ' << format_double(q.x()) << ' ' << format_double(q.y())
        << ' ' << format_double(q.z()) << ' ' << format_double(q.w());
  };
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    out << "NODE " << i;
    pose_fields(graph.nodes[i]);
    out << '\n';
  }
  for (const auto& e : graph.edges) {
    out << "EDGE " << e.from << ' ' << e.to;
    pose_fields(e.measurement);
    out << ' ' << format_double(e.weight) << '\n';
  }
}

PoseGraph read_pose_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pose graph " + path.string());
  PoseGraph g;
  std::string line;
  int lineno = 0;
  auto read_pose = [&](std::istringstream& ss) {
    double t[3], q[4];
    if (!(ss >> t[0] >> t[1] >> t[2] >> q[0] >> q[1] >> q[2] >> q[3])) {
      throw ParseError("malformed pose in pose graph", lineno);
    }
    return Se3d(Eigen::Quaterniond(q[3], q[0], q[1], q[2]), Eigen::Vector3d(t[0], t[1], t[2]));
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "NODE") {
      std::size_t id;
      if (!(ss >> id) || id != g.nodes.size()) throw ParseError("bad NODE id", lineno);
      g.nodes.push_back(read_pose(ss));
    } else if (tag == "EDGE") {
      PoseGraphEdge e;
      if (!(ss >> e.from >> e.to)) throw ParseError("bad EDGE indices", lineno);
      e.measurement = read_pose(ss);
      if (!(ss >> e.weight)) throw ParseError("missing EDGE weight", lineno);
      e.loop_closure = e.to != e.from + 1;
      g.edges.push_back(e);
    } else {
      throw ParseError("unknown pose graph record '" + tag + "'", lineno);
    }
  }
  return g;
}

}  // namespace dynodom
