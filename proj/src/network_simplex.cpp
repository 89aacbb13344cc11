#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gsw::detail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTolerance = 0x1p-48;
}  // namespace

NetworkSimplex::NetworkSimplex(std::span<const double> supply, std::span<const double> demand,
                               std::span<const double> cost)
    : m_(supply.size()),
      n_(demand.size()),
      node_count_(m_ + n_),
      arc_count_(m_ * n_),
      root_(static_cast<int>(node_count_)) {
  const std::size_t all_arcs = arc_count_ + node_count_;
  const std::size_t all_nodes = node_count_ + 1;

  source_.resize(all_arcs);
  target_.resize(all_arcs);
  cost_.resize(all_arcs);
  flow_.assign(all_arcs, 0.0);
  state_.assign(all_arcs, kLower);

  double max_cost = 0.0;
  for (std::size_t i = 0, a = 0; i < m_; ++i) {
    for (std::size_t j = 0; j < n_; ++j, ++a) {
      source_[a] = static_cast<int>(i);
      target_[a] = static_cast<int>(m_ + j);
      cost_[a] = cost[a];
      max_cost = std::max(max_cost, cost[a]);
    }
  }

  supply_.resize(all_nodes);
  for (std::size_t i = 0; i < m_; ++i) supply_[i] = supply[i];
  for (std::size_t j = 0; j < n_; ++j) supply_[m_ + j] = -demand[j];
  supply_[root_] = 0.0;

  pi_.resize(all_nodes);
  parent_.resize(all_nodes);
  pred_.resize(all_nodes);
  thread_.resize(all_nodes);
  rev_thread_.resize(all_nodes);
  succ_num_.resize(all_nodes);
  last_succ_.resize(all_nodes);
  forward_.resize(all_nodes);

  const double art_cost = (max_cost + 1.0) * static_cast<double>(node_count_);

  parent_[root_] = -1;
  pred_[root_] = -1;
  thread_[root_] = 0;
  rev_thread_[0] = root_;
  succ_num_[root_] = static_cast<int>(node_count_ + 1);
  last_succ_[root_] = root_ - 1;
  pi_[root_] = 0.0;

  // Initial tree: every node hangs off the artificial root.
  for (std::size_t u = 0; u < node_count_; ++u) {
    const std::size_t e = arc_count_ + u;
    parent_[u] = root_;
    pred_[u] = static_cast<int>(e);
    thread_[u] = static_cast<int>(u + 1);
    rev_thread_[u + 1] = static_cast<int>(u);
    succ_num_[u] = 1;
    last_succ_[u] = static_cast<int>(u);
    state_[e] = kTree;
    if (supply_[u] >= 0.0) {
      forward_[u] = 1;
      pi_[u] = 0.0;
      source_[e] = static_cast<int>(u);
      target_[e] = root_;
      flow_[e] = supply_[u];
      cost_[e] = 0.0;
    } else {
      forward_[u] = 0;
      pi_[u] = art_cost;
      source_[e] = root_;
      target_[e] = static_cast<int>(u);
      flow_[e] = -supply_[u];
      cost_[e] = art_cost;
    }
  }

  block_size_ = std::max<std::size_t>(
      static_cast<std::size_t>(std::sqrt(static_cast<double>(arc_count_))), 10);
}

bool NetworkSimplex::find_entering_arc() {
  double min_reduced = 0.0;
  int best = -1;
  std::size_t e = next_arc_;
  std::size_t count = block_size_;
  auto accept = [&]() {
    if (best < 0) return false;
    const double scale = std::max({std::abs(pi_[source_[best]]), std::abs(pi_[target_[best]]),
                                   std::abs(cost_[best])});
    return min_reduced < -kPivotTolerance * scale;
  };
  for (std::size_t k = 0; k < arc_count_; ++k, ++e) {
    if (e == arc_count_) e = 0;
    const double c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
    if (c < min_reduced) {
      min_reduced = c;
      best = static_cast<int>(e);
    }
    if (--count == 0) {
      if (accept()) {
        in_arc_ = best;
        next_arc_ = e;
        return true;
      }
      count = block_size_;
    }
  }
  if (accept()) {
    in_arc_ = best;
    next_arc_ = e % arc_count_;
    return true;
  }
  return false;
}

void NetworkSimplex::find_join_node() {
  int u = source_[in_arc_];
  int v = target_[in_arc_];
  while (u != v) {
    if (succ_num_[u] < succ_num_[v])
      u = parent_[u];
    else
      v = parent_[v];
  }
  join_ = u;
}

bool NetworkSimplex::find_leaving_arc() {
  int first, second;
  if (state_[in_arc_] == kLower) {
    first = source_[in_arc_];
    second = target_[in_arc_];
  } else {
    first = target_[in_arc_];
    second = source_[in_arc_];
  }
  delta_ = kInf;
  int result = 0;
  for (int u = first; u != join_; u = parent_[u]) {
    const double d = forward_[u] ? flow_[pred_[u]] : kInf;
    if (d < delta_) {
      delta_ = d;
      u_out_ = u;
      result = 1;
    }
  }
  for (int u = second; u != join_; u = parent_[u]) {
    const double d = forward_[u] ? kInf : flow_[pred_[u]];
    if (d <= delta_) {
      delta_ = d;
      u_out_ = u;
      result = 2;
    }
  }
  if (result == 1) {
    u_in_ = first;
    v_in_ = second;
  } else {
    u_in_ = second;
    v_in_ = first;
  }
  return result != 0;
}

void NetworkSimplex::change_flow(bool change) {
  if (delta_ > 0.0) {
    const double val = state_[in_arc_] * delta_;
    flow_[in_arc_] += val;
    for (int u = source_[in_arc_]; u != join_; u = parent_[u])
      flow_[pred_[u]] += forward_[u] ? -val : val;
    for (int u = target_[in_arc_]; u != join_; u = parent_[u])
      flow_[pred_[u]] += forward_[u] ? val : -val;
  }
  if (change) {
    state_[in_arc_] = kTree;
    const int out_arc = pred_[u_out_];
    flow_[out_arc] = std::max(flow_[out_arc], 0.0);
    state_[out_arc] = (flow_[out_arc] == 0.0) ? kLower : kUpper;
  } else {
    state_[in_arc_] = static_cast<std::int8_t>(-state_[in_arc_]);
  }
}

void NetworkSimplex::update_tree_structure() {
  int u = last_succ_[u_in_];
  const int old_rev_thread = rev_thread_[u_out_];
  const int old_succ_num = succ_num_[u_out_];
  const int old_last_succ = last_succ_[u_out_];
  v_out_ = parent_[u_out_];
  int right = thread_[u];

  // When old_rev_thread == v_in, join and v_out coincide.
  const int last = (old_rev_thread == v_in_) ? thread_[last_succ_[u_out_]] : thread_[v_in_];

  // Re-hang the stem u_in .. u_out under v_in, fixing the thread order.
  int stem = u_in_;
  int par_stem = v_in_;
  thread_[v_in_] = stem;
  dirty_revs_.clear();
  dirty_revs_.push_back(v_in_);
  while (stem != u_out_) {
    const int new_stem = parent_[stem];
    thread_[u] = new_stem;
    dirty_revs_.push_back(u);

    const int w = rev_thread_[stem];
    thread_[w] = right;
    rev_thread_[right] = w;

    parent_[stem] = par_stem;
    par_stem = stem;
    stem = new_stem;

    u = (last_succ_[stem] == last_succ_[par_stem]) ? rev_thread_[par_stem] : last_succ_[stem];
    right = thread_[u];
  }
  parent_[u_out_] = par_stem;
  thread_[u] = last;
  rev_thread_[last] = u;
  last_succ_[u_out_] = u;

  if (old_rev_thread != v_in_) {
    thread_[old_rev_thread] = right;
    rev_thread_[right] = old_rev_thread;
  }
  for (int node : dirty_revs_) rev_thread_[thread_[node]] = node;

  // pred / forward / succ_num / last_succ along the reversed stem.
  int tmp_sc = 0;
  const int tmp_ls = last_succ_[u_out_];
  for (u = u_out_; u != u_in_;) {
    const int w = parent_[u];
    pred_[u] = pred_[w];
    forward_[u] = !forward_[w];
    tmp_sc += succ_num_[u] - succ_num_[w];
    succ_num_[u] = tmp_sc;
    last_succ_[w] = tmp_ls;
    u = w;
  }
  pred_[u_in_] = in_arc_;
  forward_[u_in_] = (u_in_ == source_[in_arc_]);
  succ_num_[u_in_] = old_succ_num;

  int up_limit_in = -1;
  int up_limit_out = -1;
  if (last_succ_[join_] == v_in_)
    up_limit_out = join_;
  else
    up_limit_in = join_;

  for (u = v_in_; u != up_limit_in && last_succ_[u] == v_in_; u = parent_[u])
    last_succ_[u] = last_succ_[u_out_];

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
      last_succ_[u] = old_rev_thread;
  } else {
    for (u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
      last_succ_[u] = last_succ_[u_out_];
  }

  for (u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void NetworkSimplex::update_potential() {
  const double sigma = forward_[u_in_] ? pi_[v_in_] - pi_[u_in_] - cost_[pred_[u_in_]]
                                       : pi_[v_in_] - pi_[u_in_] + cost_[pred_[u_in_]];
  const int end = thread_[last_succ_[u_in_]];
  for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

void NetworkSimplex::pivot() {
  find_join_node();
  const bool change = find_leaving_arc();
  change_flow(change);
  if (change) {
    update_tree_structure();
    update_potential();
  }
}

void NetworkSimplex::initial_pivots() {
  // Cheapest incoming arc of every demand node, in node order.
  for (std::size_t j = 0; j < n_; ++j) {
    int best = -1;
    double best_cost = kInf;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t a = i * n_ + j;
      if (cost_[a] < best_cost) {
        best_cost = cost_[a];
        best = static_cast<int>(a);
      }
    }
    if (best < 0) continue;
    in_arc_ = best;
    if (state_[in_arc_] * (cost_[in_arc_] + pi_[source_[in_arc_]] - pi_[target_[in_arc_]]) >= 0)
      continue;
    pivot();
  }
}

NetworkSimplex::Status NetworkSimplex::run(std::size_t max_iterations) {
  if (arc_count_ == 0) return Status::infeasible;
  initial_pivots();
  iterations_ = 0;
  while (find_entering_arc()) {
    if (max_iterations != 0 && iterations_ >= max_iterations) return Status::iteration_limit;
    ++iterations_;
    pivot();
  }
  // Artificial arcs may only carry rounding residue of the supply balance.
  for (std::size_t e = arc_count_; e < arc_count_ + node_count_; ++e) {
    if (flow_[e] != 0.0) {
      if (std::abs(flow_[e]) > 1e-12) return Status::infeasible;
      flow_[e] = 0.0;
    }
  }
  return Status::optimal;
}

std::vector<std::size_t> NetworkSimplex::tree_arcs() const {
  std::vector<std::size_t> arcs;
  arcs.reserve(node_count_);
  for (std::size_t u = 0; u < node_count_; ++u) {
    const int a = pred_[u];
    if (a >= 0 && static_cast<std::size_t>(a) < arc_count_) arcs.push_back(static_cast<std::size_t>(a));
  }
  std::sort(arcs.begin(), arcs.end());
  return arcs;
}

}  // namespace gsw::detail
