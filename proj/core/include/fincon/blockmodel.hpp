#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fincon/date.hpp"
#include "fincon/rng.hpp"

namespace fincon {

struct ValuedNetwork {
  Eigen::MatrixXd weights;  // N x N, finite and nonnegative
  std::vector<std::string> labels;
  DatePeriod period;

  Eigen::Index size() const { return weights.rows(); }
};

/// Elementwise mean of the matrices dated inside `period`.
ValuedNetwork average_gfevd(std::span<const YearMonth> dates, std::span<const Eigen::MatrixXd> theta,
                            const std::vector<std::string>& labels, const DatePeriod& period);

enum class BlockType { null, regular };

/// Inconsistency of one block; diagonal cells (self ties) are ignored.
/// Null: sum of squared cells. Max-regular: squared deviations of every row
/// maximum and column maximum from their pooled mean.
double block_inconsistency(const Eigen::MatrixXd& w, std::span<const int> rows, std::span<const int> cols,
                           BlockType type);

/// Sum of block inconsistencies; `types` is row-major clusters x clusters.
double block_criterion(const Eigen::MatrixXd& w, std::span<const int> assignment, int clusters,
                       std::span<const BlockType> types);

/// Criterion with each block typed to its cheaper form; writes the chosen
/// types when `types` is non-null.
double best_block_criterion(const Eigen::MatrixXd& w, std::span<const int> assignment, int clusters,
                            std::vector<BlockType>* types = nullptr);

struct BlockPartition {
  std::vector<int> assignment;  // cluster in [0, clusters) per node
  int clusters = 0;
  std::vector<BlockType> block_types;  // row-major clusters x clusters
  Eigen::MatrixXd densities;           // mean off-diagonal tie per block
  double criterion = 0.0;
};

/// Relabels clusters in order of first appearance.
std::vector<int> canonical_assignment(std::span<const int> assignment);

/// Steepest-descent relocation / swap search from a given start; every cluster
/// stays nonempty.
BlockPartition local_search(const Eigen::MatrixXd& w, std::vector<int> start, int clusters);

/// Best local optimum over `restarts` random starts. Ties go to the
/// lexicographically smallest canonical assignment.
BlockPartition fit_blockmodel(const ValuedNetwork& network, int clusters, int restarts, RngHandle& rng,
                              unsigned jobs = 1);

/// Mean off-diagonal cell of every block (0 for blocks without cells).
Eigen::MatrixXd block_densities(const Eigen::MatrixXd& w, std::span<const int> assignment, int clusters);

enum class Role { absorber, main, isolate };
const char* role_name(Role role);

/// R_k sums the densities cluster k receives from other clusters and S_k what
/// it transmits. Absorber when R - S > margin R; isolate when both totals fall
/// below `isolate_share` times the mean of all 2m totals; otherwise main.
std::vector<Role> classify_roles(const BlockPartition& partition, double margin = 0.2, double isolate_share = 0.1);

/// `country,cluster,role` rows (clusters numbered from 1).
void write_partition_csv(const BlockPartition& partition, const ValuedNetwork& network,
                         std::span<const Role> roles, std::ostream& out);

}  // namespace fincon
