#include "sk/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "sk/errors.hpp"

namespace sk {

namespace {

struct Atom {
  double x;
  double mass;
};

std::vector<Atom> sorted_atoms(const Measure& mu) {
  std::vector<Atom> atoms;
  atoms.reserve(mu.space->size());
  for (std::size_t i = 0; i < mu.space->size(); ++i) {
    const double m =
        mu.density(static_cast<Eigen::Index>(i)) * mu.space->weights[i];
    if (m > 0.0) atoms.push_back({mu.space->points[i], m});
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.x < b.x; });
  return atoms;
}

}  // namespace

double wasserstein_1d(const Measure& mu1, const Measure& mu2, double p) {
  if (!(p >= 1.0))
    throw precondition_error("wasserstein_1d: order p must be >= 1");
  if (!mu1.is_probability(1e-9) || !mu2.is_probability(1e-9))
    throw precondition_error("wasserstein_1d: inputs must be probabilities");

  auto a = sorted_atoms(mu1);
  auto b = sorted_atoms(mu2);
  std::size_t i = 0, j = 0;
  double rem_a = a.empty() ? 0.0 : a[0].mass;
  double rem_b = b.empty() ? 0.0 : b[0].mass;
  double acc = 0.0;
  while (i < a.size() && j < b.size()) {
    const double q = std::min(rem_a, rem_b);
    acc += q * std::pow(std::abs(a[i].x - b[j].x), p);
    rem_a -= q;
    rem_b -= q;
    if (rem_a <= 1e-18) {
      ++i;
      if (i < a.size()) rem_a = a[i].mass;
    }
    if (rem_b <= 1e-18) {
      ++j;
      if (j < b.size()) rem_b = b[j].mass;
    }
  }
  return std::pow(acc, 1.0 / p);
}

namespace detail {

namespace {

// Greedy cheapest-cell fill followed by 2x2 exchange descent: moving mass
// around the cycle (i,j),(i,l),(k,l),(k,j) whenever that lowers cost ends
// at an exchange-optimal flow whose value seeds the search incumbent.
double greedy_cost(Eigen::ArrayXd r, Eigen::ArrayXd c,
                   const Eigen::MatrixXd& cost) {
  const Eigen::Index m = r.size(), n = c.size();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, n);
  while (true) {
    Eigen::Index bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (r(i) <= 0.0) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (c(j) <= 0.0) continue;
        if (cost(i, j) < best) {
          best = cost(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;
    const double q = std::min(r(bi), c(bj));
    t(bi, bj) += q;
    r(bi) -= q;
    c(bj) -= q;
    if (r(bi) < 1e-15) r(bi) = 0.0;
    if (c(bj) < 1e-15) c(bj) = 0.0;
  }
  for (int pass = 0; pass < 64; ++pass) {
    bool moved = false;
    for (Eigen::Index i = 0; i + 1 < m; ++i)
      for (Eigen::Index k = i + 1; k < m; ++k)
        for (Eigen::Index j = 0; j < n; ++j)
          for (Eigen::Index l = 0; l < n; ++l) {
            if (j == l) continue;
            const double gain =
                cost(i, j) + cost(k, l) - cost(i, l) - cost(k, j);
            if (gain >= -1e-14) continue;
            const double q = std::min(t(i, l), t(k, j));
            if (q <= 0.0) continue;
            t(i, j) += q;
            t(k, l) += q;
            t(i, l) -= q;
            t(k, j) -= q;
            moved = true;
          }
    if (!moved) break;
  }
  return (t.array() * cost.array()).sum();
}

// One allocation step: vertices are row ids 0..m-1 and column ids m..m+n-1.
// removed1/removed2 are the saturated side(s), reduced the surviving side.
// Forced steps (a Monge cell held by every completion) block the
// commutation filter below, since their siblings were never explored.
struct Peel {
  int removed1 = -1, removed2 = -1, reduced = -1, cell = -1;
  bool forced = false;
};

struct VertexSearch {
  const Eigen::MatrixXd& cost;
  const Eigen::Index m, n;
  double best;
  Eigen::ArrayXd u, v;  // dual warm start carried down the tree

  explicit VertexSearch(const Eigen::MatrixXd& c, double incumbent)
      : cost(c),
        m(c.rows()),
        n(c.cols()),
        best(incumbent),
        u(Eigen::ArrayXd::Zero(c.rows())),
        v(Eigen::ArrayXd::Zero(c.cols())) {}

  // Weak duality: any (u, v) with u_i + v_j <= cost_ij on the active block
  // bounds the remaining program from below. Two ascent sweeps re-establish
  // feasibility from the warm start and tighten far beyond the row/column
  // minima (which the first u-sweep reproduces from v = 0).
  double lower_bound(const Eigen::ArrayXd& r, const Eigen::ArrayXd& c) {
    for (int sweep = 0; sweep < 3; ++sweep) {
      for (Eigen::Index i = 0; i < m; ++i) {
        if (r(i) <= 0.0) continue;
        double lo = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j)
          if (c(j) > 0.0) lo = std::min(lo, cost(i, j) - v(j));
        if (!std::isfinite(lo)) return 0.0;
        u(i) = lo;
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        if (c(j) <= 0.0) continue;
        double lo = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < m; ++i)
          if (r(i) > 0.0) lo = std::min(lo, cost(i, j) - u(i));
        if (!std::isfinite(lo)) return 0.0;
        v(j) = lo;
      }
    }
    double b = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (r(i) > 0.0) b += r(i) * u(i);
    for (Eigen::Index j = 0; j < n; ++j)
      if (c(j) > 0.0) b += c(j) * v(j);
    return b;
  }

  // Two consecutive peels commute when the later one touches neither a
  // vertex the earlier removed nor (as its saturated side) the vertex the
  // earlier reduced; every vertex of the polytope then keeps the
  // representative order whose cell indices avoid independent inversions,
  // so skipping the inverted twins loses nothing.
  bool skip_by_order(const Peel& prev, int cell, int sat1, int sat2,
                     int row_id, int col_id) const {
    if (prev.cell < 0 || prev.forced || cell >= prev.cell) return false;
    if (prev.removed1 == row_id || prev.removed1 == col_id) return false;
    if (prev.removed2 == row_id || prev.removed2 == col_id) return false;
    if (prev.reduced >= 0 && (prev.reduced == sat1 || prev.reduced == sat2))
      return false;
    return true;
  }

  // Branches over every active cell; allocating min(supply, demand) there
  // and removing the saturated line(s) reaches every polytope vertex.
  void dfs(Eigen::ArrayXd& r, Eigen::ArrayXd& c, double acc,
           const Peel& prev) {
    // Either side exhausted ends the path: rounding can leave a dangling
    // sub-snap residue on the other side, which must not discard the path.
    bool rows = false, cols = false;
    for (Eigen::Index i = 0; i < m && !rows; ++i) rows = r(i) > 0.0;
    for (Eigen::Index j = 0; j < n && !cols; ++j) cols = c(j) > 0.0;
    if (!rows || !cols) {
      best = std::min(best, acc);
      return;
    }
    const double node_bound = lower_bound(r, c);
    if (acc + node_bound >= best - 1e-15) return;

    // Monge forcing: an active cell (i, j) with
    // cost(i,j) + cost(k,l) <= cost(i,l) + cost(k,j) on every active pair
    // carries the full min-peel in some optimal completion by the 2x2
    // exchange argument, so it is the only branch needed. Row and column
    // minima are the candidates worth testing.
    Eigen::Index mi = -1, mj = -1;
    {
      Eigen::Index cand_i[16], cand_j[16];
      int nc = 0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (r(i) <= 0.0) continue;
        double lo = std::numeric_limits<double>::infinity();
        Eigen::Index arg = -1;
        for (Eigen::Index j = 0; j < n; ++j)
          if (c(j) > 0.0 && cost(i, j) < lo) {
            lo = cost(i, j);
            arg = j;
          }
        if (arg >= 0) {
          cand_i[nc] = i;
          cand_j[nc++] = arg;
        }
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        if (c(j) <= 0.0) continue;
        double lo = std::numeric_limits<double>::infinity();
        Eigen::Index arg = -1;
        for (Eigen::Index i = 0; i < m; ++i)
          if (r(i) > 0.0 && cost(i, j) < lo) {
            lo = cost(i, j);
            arg = i;
          }
        if (arg >= 0) {
          cand_i[nc] = arg;
          cand_j[nc++] = j;
        }
      }
      for (int t = 0; t < nc && mi < 0; ++t) {
        const Eigen::Index ci = cand_i[t], cj = cand_j[t];
        bool monge = true;
        for (Eigen::Index k = 0; k < m && monge; ++k) {
          if (k == ci || r(k) <= 0.0) continue;
          for (Eigen::Index l = 0; l < n; ++l) {
            if (l == cj || c(l) <= 0.0) continue;
            if (cost(ci, cj) + cost(k, l) > cost(ci, l) + cost(k, cj)) {
              monge = false;
              break;
            }
          }
        }
        if (monge) {
          mi = ci;
          mj = cj;
        }
      }
    }

    struct Branch {
      Eigen::Index i, j;
      double w;
    };
    Branch branches[64];
    int nb = 0;
    if (mi >= 0) {
      branches[nb++] = {mi, mj, cost(mi, mj)};
    } else {
      for (Eigen::Index i = 0; i < m; ++i) {
        if (r(i) <= 0.0) continue;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (c(j) <= 0.0) continue;
          const int row_id = static_cast<int>(i);
          const int col_id = static_cast<int>(m + j);
          const bool row_sat = r(i) <= c(j), col_sat = c(j) <= r(i);
          const int sat1 = row_sat ? row_id : col_id;
          const int sat2 = (row_sat && col_sat) ? col_id : -1;
          if (skip_by_order(prev, static_cast<int>(i * n + j), sat1, sat2,
                            row_id, col_id))
            continue;
          // Reduced-cost fixing: every completion shipping t over (i, j)
          // costs at least node_bound + t * (cost - u - v).
          const double t = std::min(r(i), c(j));
          const double fixed =
              acc + node_bound + t * (cost(i, j) - u(i) - v(j));
          if (fixed >= best - 1e-15) continue;
          branches[nb++] = {i, j, cost(i, j)};
        }
      }
      std::sort(branches, branches + nb,
                [](const Branch& a, const Branch& b) { return a.w < b.w; });
    }

    for (int b = 0; b < nb; ++b) {
      const Eigen::Index i = branches[b].i, j = branches[b].j;
      const double ri = r(i), cj = c(j);
      const double t = std::min(ri, cj);
      r(i) = ri - t;
      c(j) = cj - t;
      if (r(i) < 1e-15) r(i) = 0.0;
      if (c(j) < 1e-15) c(j) = 0.0;
      Peel cur;
      cur.cell = static_cast<int>(i * n + j);
      cur.forced = mi >= 0;
      const bool row_gone = r(i) == 0.0, col_gone = c(j) == 0.0;
      cur.removed1 = row_gone ? static_cast<int>(i) : static_cast<int>(m + j);
      cur.removed2 = (row_gone && col_gone) ? static_cast<int>(m + j) : -1;
      cur.reduced = row_gone ? (col_gone ? -1 : static_cast<int>(m + j))
                             : static_cast<int>(i);
      dfs(r, c, acc + t * cost(i, j), cur);
      r(i) = ri;
      c(j) = cj;
    }
  }
};

}  // namespace

double transport_bruteforce(const Eigen::ArrayXd& supply,
                            const Eigen::ArrayXd& demand,
                            const Eigen::MatrixXd& cost) {
  if (cost.rows() > 8 || cost.cols() > 8)
    throw precondition_error(
        "transport_bruteforce: exhaustive search handles at most 8 points "
        "per side");
  VertexSearch search(cost, greedy_cost(supply, demand, cost) + 1e-12);
  Eigen::ArrayXd r = supply, c = demand;
  search.dfs(r, c, 0.0, Peel{});
  return search.best;
}

double transport_simplex(const Eigen::ArrayXd& supply,
                         const Eigen::ArrayXd& demand,
                         const Eigen::MatrixXd& cost) {
  const Eigen::Index m = supply.size();
  const Eigen::Index n = demand.size();

  // Northwest-corner start; ties keep m + n - 1 basic cells (some zero).
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, n);
  std::vector<std::vector<char>> basic(m, std::vector<char>(n, 0));
  {
    Eigen::ArrayXd r = supply, c = demand;
    Eigen::Index i = 0, j = 0;
    while (i < m && j < n) {
      const double q = std::min(r(i), c(j));
      t(i, j) = q;
      basic[i][j] = 1;
      r(i) -= q;
      c(j) -= q;
      const bool row_done = r(i) <= 1e-15;
      const bool col_done = c(j) <= 1e-15;
      if (row_done && col_done) {
        if (i + 1 < m)
          ++i;
        else
          ++j;
      } else if (row_done) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  std::vector<double> u(m), v(n);
  std::vector<char> udef(m), vdef(n);
  for (long iter = 0; iter < 100000; ++iter) {
    // Duals from the basis tree: u_i + v_j = cost(i,j) on basic cells.
    std::fill(udef.begin(), udef.end(), 0);
    std::fill(vdef.begin(), vdef.end(), 0);
    u[0] = 0.0;
    udef[0] = 1;
    bool progress = true;
    while (progress) {
      progress = false;
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          if (!basic[i][j]) continue;
          if (udef[i] && !vdef[j]) {
            v[j] = cost(i, j) - u[i];
            vdef[j] = 1;
            progress = true;
          } else if (!udef[i] && vdef[j]) {
            u[i] = cost(i, j) - v[j];
            udef[i] = 1;
            progress = true;
          }
        }
    }
    for (Eigen::Index i = 0; i < m; ++i)
      if (!udef[i])
        throw numerical_error("transport_simplex: basis graph disconnected");

    // Entering cell: first (Bland) with negative reduced cost.
    Eigen::Index ei = -1, ej = -1;
    for (Eigen::Index i = 0; i < m && ei < 0; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (basic[i][j]) continue;
        if (cost(i, j) - u[i] - v[j] < -1e-11) {
          ei = i;
          ej = j;
          break;
        }
      }
    if (ei < 0) break;

    // Unique pivot cycle = entering cell + the basis-tree path between its
    // row node and column node (nodes 0..m-1 rows, m..m+n-1 columns).
    struct Node {
      Eigen::Index i, j;
    };
    std::vector<Node> cycle{{ei, ej}};
    {
      const Eigen::Index nn = m + n;
      std::vector<Eigen::Index> parent(nn, -1);
      std::vector<Node> via(nn, {-1, -1});
      std::vector<char> seen(nn, 0);
      std::vector<Eigen::Index> queue{ei};
      seen[ei] = 1;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const Eigen::Index node = queue[head];
        if (node < m) {
          for (Eigen::Index j = 0; j < n; ++j) {
            if (!basic[node][j] || seen[m + j]) continue;
            seen[m + j] = 1;
            parent[m + j] = node;
            via[m + j] = {node, j};
            queue.push_back(m + j);
          }
        } else {
          const Eigen::Index j = node - m;
          for (Eigen::Index i = 0; i < m; ++i) {
            if (!basic[i][j] || seen[i]) continue;
            seen[i] = 1;
            parent[i] = node;
            via[i] = {i, j};
            queue.push_back(i);
          }
        }
      }
      if (!seen[m + ej])
        throw numerical_error("transport_simplex: pivot cycle not found");
      std::vector<Node> path;
      for (Eigen::Index node = m + ej; node != ei; node = parent[node])
        path.push_back(via[node]);
      // path runs col_ej -> row_ei; reversed, cells alternate row/column
      // moves starting in row ei, so signs alternate -,+,... after entering.
      cycle.insert(cycle.end(), path.rbegin(), path.rend());
    }

    // Odd positions leave the basis; theta = min allocation there. Ties
    // resolved by smallest cell index (Bland).
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t s = 1; s < cycle.size(); s += 2)
      theta = std::min(theta, t(cycle[s].i, cycle[s].j));
    std::size_t leave = 0;
    Eigen::Index leave_id = m * n;
    for (std::size_t s = 1; s < cycle.size(); s += 2) {
      const Eigen::Index id = cycle[s].i * n + cycle[s].j;
      if (t(cycle[s].i, cycle[s].j) <= theta + 1e-18 && id < leave_id) {
        leave_id = id;
        leave = s;
      }
    }
    for (std::size_t s = 0; s < cycle.size(); ++s) {
      if (s % 2 == 0)
        t(cycle[s].i, cycle[s].j) += theta;
      else
        t(cycle[s].i, cycle[s].j) -= theta;
    }
    basic[ei][ej] = 1;
    basic[cycle[leave].i][cycle[leave].j] = 0;
    t(cycle[leave].i, cycle[leave].j) = 0.0;
  }

  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (basic[i][j]) total += t(i, j) * cost(i, j);
  return total;
}

}  // namespace detail

double transport_oracle(const Measure& mu1, const Measure& mu2,
                        const Eigen::MatrixXd& cost) {
  const Eigen::Index m = static_cast<Eigen::Index>(mu1.space->size());
  const Eigen::Index n = static_cast<Eigen::Index>(mu2.space->size());
  if (cost.rows() != m || cost.cols() != n)
    throw domain_error("transport_oracle: cost shape does not match measures");
  if (!cost.allFinite())
    throw domain_error("transport_oracle: cost must be finite");

  std::vector<Eigen::Index> rows, cols;
  Eigen::ArrayXd supply_full =
      mu1.density * Eigen::Map<const Eigen::ArrayXd>(mu1.space->weights.data(), m);
  Eigen::ArrayXd demand_full =
      mu2.density * Eigen::Map<const Eigen::ArrayXd>(mu2.space->weights.data(), n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (supply_full(i) > 0.0) rows.push_back(i);
  for (Eigen::Index j = 0; j < n; ++j)
    if (demand_full(j) > 0.0) cols.push_back(j);
  if (rows.empty() || cols.empty())
    throw domain_error("transport_oracle: a measure has no mass");

  Eigen::ArrayXd supply(rows.size()), demand(cols.size());
  Eigen::MatrixXd c(rows.size(), cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    supply(static_cast<Eigen::Index>(a)) = supply_full(rows[a]);
    for (std::size_t b = 0; b < cols.size(); ++b)
      c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          cost(rows[a], cols[b]);
  }
  for (std::size_t b = 0; b < cols.size(); ++b)
    demand(static_cast<Eigen::Index>(b)) = demand_full(cols[b]);

  const double s = supply.sum(), d = demand.sum();
  if (std::abs(s - d) > 1e-9 * std::max(s, d))
    throw domain_error("transport_oracle: total masses differ");
  demand *= s / d;  // balance exactly so the flow problem is feasible

  const Eigen::Index size = std::max<Eigen::Index>(supply.size(), demand.size());
  if (size <= 8) return detail::transport_bruteforce(supply, demand, c);
  if (size <= 30) return detail::transport_simplex(supply, demand, c);
  throw domain_error("transport_oracle: instances above 30 points per side "
                     "are not supported");
}

}  // namespace sk
