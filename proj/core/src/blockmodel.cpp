#include "fincon/blockmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "fincon/csv.hpp"
#include "fincon/error.hpp"
#include "fincon/parallel.hpp"

namespace fincon {

namespace {

constexpr double kTieTolerance = 1e-12;

std::vector<std::vector<int>> members_of(std::span<const int> assignment, int clusters) {
  std::vector<std::vector<int>> members(static_cast<std::size_t>(clusters));
  for (std::size_t v = 0; v < assignment.size(); ++v) members[static_cast<std::size_t>(assignment[v])].push_back(static_cast<int>(v));
  return members;
}

void check_assignment(const Eigen::MatrixXd& w, std::span<const int> assignment, int clusters) {
  if (w.rows() != w.cols()) throw ValidationError("blockmodel: network must be square");
  if (static_cast<Eigen::Index>(assignment.size()) != w.rows()) throw ValidationError("blockmodel: assignment length mismatch");
  for (int c : assignment) {
    if (c < 0 || c >= clusters) throw ValidationError("blockmodel: cluster id out of range");
  }
}

bool better(double crit, const std::vector<int>& canon, double best, const std::vector<int>& best_canon) {
  const double tol = kTieTolerance * std::max(1.0, std::abs(best));
  if (crit < best - tol) return true;
  return crit <= best + tol && canon < best_canon;
}

}  // namespace

ValuedNetwork average_gfevd(std::span<const YearMonth> dates, std::span<const Eigen::MatrixXd> theta,
                            const std::vector<std::string>& labels, const DatePeriod& period) {
  if (dates.size() != theta.size()) throw ValidationError("average_gfevd: dates and matrices differ in length");
  ValuedNetwork net;
  net.labels = labels;
  net.period = period;
  int count = 0;
  for (std::size_t t = 0; t < dates.size(); ++t) {
    if (!period.contains(dates[t])) continue;
    if (count == 0) {
      net.weights = theta[t];
    } else {
      net.weights += theta[t];
    }
    ++count;
  }
  if (count == 0) {
    throw ValidationError("average_gfevd: period " + period.name + " (" + period.start.to_string() + " to " +
                          period.end.to_string() + ") has no dates");
  }
  net.weights /= count;
  if (net.weights.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw ValidationError("average_gfevd: label count does not match the matrices");
  }
  return net;
}

double block_inconsistency(const Eigen::MatrixXd& w, std::span<const int> rows, std::span<const int> cols,
                           BlockType type) {
  if (type == BlockType::null) {
    double ss = 0.0;
    for (int i : rows) {
      for (int j : cols) {
        if (i != j) ss += w(i, j) * w(i, j);
      }
    }
    return ss;
  }
  std::vector<double> maxima;
  for (int i : rows) {
    double m = -std::numeric_limits<double>::infinity();
    for (int j : cols) {
      if (i != j) m = std::max(m, w(i, j));
    }
    if (std::isfinite(m)) maxima.push_back(m);
  }
  for (int j : cols) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i : rows) {
      if (i != j) m = std::max(m, w(i, j));
    }
    if (std::isfinite(m)) maxima.push_back(m);
  }
  if (maxima.empty()) return 0.0;
  const double mu = std::accumulate(maxima.begin(), maxima.end(), 0.0) / static_cast<double>(maxima.size());
  double ss = 0.0;
  for (double m : maxima) ss += (m - mu) * (m - mu);
  return ss;
}

double block_criterion(const Eigen::MatrixXd& w, std::span<const int> assignment, int clusters,
                       std::span<const BlockType> types) {
  check_assignment(w, assignment, clusters);
  if (static_cast<int>(types.size()) != clusters * clusters) throw ValidationError("block_criterion: need clusters^2 block types");
  const auto members = members_of(assignment, clusters);
  double total = 0.0;
  for (int r = 0; r < clusters; ++r) {
    for (int c = 0; c < clusters; ++c) {
      total += block_inconsistency(w, members[static_cast<std::size_t>(r)], members[static_cast<std::size_t>(c)],
                                   types[static_cast<std::size_t>(r * clusters + c)]);
    }
  }
  return total;
}

double best_block_criterion(const Eigen::MatrixXd& w, std::span<const int> assignment, int clusters,
                            std::vector<BlockType>* types) {
  check_assignment(w, assignment, clusters);
  const auto members = members_of(assignment, clusters);
  if (types != nullptr) types->assign(static_cast<std::size_t>(clusters * clusters), BlockType::null);
  double total = 0.0;
  for (int r = 0; r < clusters; ++r) {
    for (int c = 0; c < clusters; ++c) {
      const auto& rows = members[static_cast<std::size_t>(r)];
      const auto& cols = members[static_cast<std::size_t>(c)];
      const double null_cost = block_inconsistency(w, rows, cols, BlockType::null);
      const double reg_cost = block_inconsistency(w, rows, cols, BlockType::regular);
      total += std::min(null_cost, reg_cost);
      if (types != nullptr && reg_cost < null_cost) (*types)[static_cast<std::size_t>(r * clusters + c)] = BlockType::regular;
    }
  }
  return total;
}

std::vector<int> canonical_assignment(std::span<const int> assignment) {
  std::vector<int> map;
  std::vector<int> out;
  out.reserve(assignment.size());
  for (int c : assignment) {
    if (c >= static_cast<int>(map.size())) map.resize(static_cast<std::size_t>(c) + 1, -1);
    if (map[static_cast<std::size_t>(c)] < 0) {
      map[static_cast<std::size_t>(c)] = static_cast<int>(std::count_if(map.begin(), map.end(), [](int v) { return v >= 0; }));
    }
    out.push_back(map[static_cast<std::size_t>(c)]);
  }
  return out;
}

Eigen::MatrixXd block_densities(const Eigen::MatrixXd& w, std::span<const int> assignment, int clusters) {
  check_assignment(w, assignment, clusters);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(clusters, clusters);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(clusters, clusters);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (i == j) continue;
      sum(assignment[static_cast<std::size_t>(i)], assignment[static_cast<std::size_t>(j)]) += w(i, j);
      count(assignment[static_cast<std::size_t>(i)], assignment[static_cast<std::size_t>(j)]) += 1.0;
    }
  }
  return (count.array() > 0.0).select(sum.array() / count.array().max(1.0), 0.0).matrix();
}

BlockPartition local_search(const Eigen::MatrixXd& w, std::vector<int> a, int clusters) {
  check_assignment(w, a, clusters);
  const auto n = static_cast<int>(a.size());
  std::vector<int> sizes(static_cast<std::size_t>(clusters), 0);
  for (int c : a) ++sizes[static_cast<std::size_t>(c)];
  if (std::any_of(sizes.begin(), sizes.end(), [](int s) { return s == 0; })) {
    throw ValidationError("local_search: start leaves a cluster empty");
  }
  double crit = best_block_criterion(w, a, clusters);
  // Steepest descent: apply the best strictly improving relocation or swap.
  while (true) {
    double best = crit - kTieTolerance * std::max(1.0, crit);
    int move_v = -1, move_to = -1, swap_u = -1, swap_v = -1;
    for (int v = 0; v < n; ++v) {
      const int from = a[static_cast<std::size_t>(v)];
      if (sizes[static_cast<std::size_t>(from)] == 1) continue;
      for (int to = 0; to < clusters; ++to) {
        if (to == from) continue;
        a[static_cast<std::size_t>(v)] = to;
        const double c = best_block_criterion(w, a, clusters);
        a[static_cast<std::size_t>(v)] = from;
        if (c < best) {
          best = c;
          move_v = v;
          move_to = to;
        }
      }
    }
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) {
        if (a[static_cast<std::size_t>(u)] == a[static_cast<std::size_t>(v)]) continue;
        std::swap(a[static_cast<std::size_t>(u)], a[static_cast<std::size_t>(v)]);
        const double c = best_block_criterion(w, a, clusters);
        std::swap(a[static_cast<std::size_t>(u)], a[static_cast<std::size_t>(v)]);
        if (c < best) {
          best = c;
          swap_u = u;
          swap_v = v;
        }
      }
    }
    if (swap_u >= 0) {
      std::swap(a[static_cast<std::size_t>(swap_u)], a[static_cast<std::size_t>(swap_v)]);
    } else if (move_v >= 0) {
      --sizes[static_cast<std::size_t>(a[static_cast<std::size_t>(move_v)])];
      ++sizes[static_cast<std::size_t>(move_to)];
      a[static_cast<std::size_t>(move_v)] = move_to;
    } else {
      break;
    }
    crit = best;
  }
  BlockPartition out;
  out.assignment = canonical_assignment(a);
  out.clusters = clusters;
  out.criterion = best_block_criterion(w, out.assignment, clusters, &out.block_types);
  out.densities = block_densities(w, out.assignment, clusters);
  return out;
}

BlockPartition fit_blockmodel(const ValuedNetwork& network, int clusters, int restarts, RngHandle& rng,
                              unsigned jobs) {
  const auto& w = network.weights;
  const auto n = static_cast<int>(w.rows());
  if (w.rows() != w.cols() || n == 0) throw ValidationError("fit_blockmodel: network must be a nonempty square matrix");
  if (!w.allFinite() || (w.array() < 0.0).any()) throw ValidationError("fit_blockmodel: ties must be finite and nonnegative");
  if (clusters < 1 || clusters > n) {
    throw ValidationError("fit_blockmodel: cluster count " + std::to_string(clusters) + " not in [1, " +
                          std::to_string(n) + "]");
  }
  if (restarts < 1) throw ValidationError("fit_blockmodel: restarts must be positive");

  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(restarts));
  for (auto& s : seeds) s = rng.next_u64();
  std::vector<BlockPartition> fits(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t r) {
    RngHandle local(seeds[r], 0);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[static_cast<std::size_t>(i)], order[local.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
    }
    std::vector<int> start(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      start[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
          i < clusters ? i : static_cast<int>(local.uniform_index(static_cast<std::uint64_t>(clusters)));
    }
    fits[r] = local_search(w, std::move(start), clusters);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < fits.size(); ++r) {
    if (better(fits[r].criterion, fits[r].assignment, fits[best].criterion, fits[best].assignment)) best = r;
  }
  return fits[best];
}

const char* role_name(Role role) {
  switch (role) {
    case Role::absorber:
      return "absorber";
    case Role::isolate:
      return "isolate";
    case Role::main:
      break;
  }
  return "main";
}

std::vector<Role> classify_roles(const BlockPartition& p, double margin, double isolate_share) {
  const int m = p.clusters;
  const Eigen::MatrixXd& cl = p.densities;
  if (cl.rows() != m || cl.cols() != m) throw ValidationError("classify_roles: densities do not match the partition");
  Eigen::VectorXd recv(m), send(m);
  for (int k = 0; k < m; ++k) {
    recv[k] = cl.row(k).sum() - cl(k, k);
    send[k] = cl.col(k).sum() - cl(k, k);
  }
  const double mean_total = m > 0 ? (recv.sum() + send.sum()) / (2.0 * m) : 0.0;
  std::vector<Role> roles;
  for (int k = 0; k < m; ++k) {
    if (m > 1 && std::max(recv[k], send[k]) < isolate_share * mean_total) {
      roles.push_back(Role::isolate);
    } else if (recv[k] - send[k] > margin * recv[k]) {
      roles.push_back(Role::absorber);
    } else {
      roles.push_back(Role::main);
    }
  }
  return roles;
}

void write_partition_csv(const BlockPartition& p, const ValuedNetwork& net, std::span<const Role> roles,
                         std::ostream& out) {
  out << "country,cluster,role\n";
  for (std::size_t v = 0; v < p.assignment.size(); ++v) {
    const int c = p.assignment[v];
    out << net.labels[v] << ',' << (c + 1) << ',' << role_name(roles[static_cast<std::size_t>(c)]) << '\n';
  }
}

}  // namespace fincon
