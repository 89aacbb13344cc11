#pragma once

// Primal network simplex for the uncapacitated transportation problem on a
// complete bipartite graph. Spanning-tree bookkeeping (thread / reverse
// thread / successor counts) and the block-search pivot rule follow the
// LEMON design. Arc a = i * n + j connects source i to target m + j.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gsw::detail {

class NetworkSimplex {
 public:
  enum class Status { optimal, iteration_limit, infeasible };

  NetworkSimplex(std::span<const double> supply, std::span<const double> demand,
                 std::span<const double> cost);

  Status run(std::size_t max_iterations);

  /// Flow on real arc (i, j).
  [[nodiscard]] double flow(std::size_t arc) const { return flow_[arc]; }
  /// Node potentials; reduced cost of arc (i, j) is c_ij + pi_i - pi_{m+j}.
  [[nodiscard]] double potential(std::size_t node) const { return pi_[node]; }
  /// Real arcs currently in the spanning tree.
  [[nodiscard]] std::vector<std::size_t> tree_arcs() const;
  [[nodiscard]] std::size_t iterations() const { return iterations_; }

 private:
  bool find_entering_arc();
  void find_join_node();
  bool find_leaving_arc();
  void change_flow(bool change);
  void update_tree_structure();
  void update_potential();
  void initial_pivots();
  void pivot();

  static constexpr std::int8_t kUpper = -1;
  static constexpr std::int8_t kTree = 0;
  static constexpr std::int8_t kLower = 1;

  std::size_t m_, n_, node_count_, arc_count_;
  int root_;

  std::vector<int> source_, target_;
  std::vector<double> cost_, flow_;
  std::vector<std::int8_t> state_;

  std::vector<double> supply_, pi_;
  std::vector<int> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_;
  std::vector<char> forward_;
  std::vector<int> dirty_revs_;

  std::size_t block_size_ = 0;
  std::size_t next_arc_ = 0;
  std::size_t iterations_ = 0;

  int in_arc_ = -1, join_ = -1, u_in_ = -1, v_in_ = -1, u_out_ = -1, v_out_ = -1;
  double delta_ = 0.0;
};

}  // namespace gsw::detail
