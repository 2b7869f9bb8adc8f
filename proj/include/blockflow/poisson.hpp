#ifndef BLOCKFLOW_POISSON_HPP_
#define BLOCKFLOW_POISSON_HPP_
//! \file poisson.hpp
//! \brief Cell-centred multigrid solver for the pressure Poisson equation and
//!        the Laplacian benchmark: seven-point stencil per block, red-black
//!        Gauss-Seidel or damped Jacobi smoothing between halo exchanges,
//!        V-cycles over the grid hierarchy with 8-cell-average restriction and
//!        constant or trilinear prolongation.
//!
//! Boundary conditions enter in folded form: a Dirichlet face adds 2c to the
//! cell's diagonal and 2c*g to its source (algebraically identical to the
//! ghost reflection 2g - p), a Neumann face drops the connection (ghost copy),
//! and faces shared with solid cells drop it too. Kernels therefore never read
//! physical-boundary ghosts.
//!
//! Uniform hierarchies run V-cycles down to the root block, which is solved by
//! plain smoothing sweeps. Mixed-depth (adaptive) leaf sets are solved by
//! Schwarz smoothing on the composite leaf system with interface ghosts from
//! the halo exchange; slower, but the interface discretisation is what the
//! adaptive accuracy tests exercise.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "blockflow/exec.hpp"

namespace blockflow {

enum class PoissonBCKind { Neumann, Dirichlet };
enum class SmootherKind { RedBlackGS, DampedJacobi };

//! Domain-hull closure of the Poisson operator. `value` supplies Dirichlet
//! boundary values at face-centre positions on the finest level (coarser
//! correction levels are homogeneous); null means zero.
struct PoissonBC {
    std::array<PoissonBCKind, 6> kind{PoissonBCKind::Neumann, PoissonBCKind::Neumann,
                                      PoissonBCKind::Neumann, PoissonBCKind::Neumann,
                                      PoissonBCKind::Neumann, PoissonBCKind::Neumann};
    std::function<double(Face, const Real3&)> value;

    bool all_neumann() const {
        for (auto k : kind)
            if (k == PoissonBCKind::Dirichlet) return false;
        return true;
    }

    static PoissonBC all_dirichlet(std::function<double(Face, const Real3&)> v = nullptr) {
        PoissonBC bc;
        bc.kind.fill(PoissonBCKind::Dirichlet);
        bc.value = std::move(v);
        return bc;
    }
};

struct MGConfig {
    int nu1 = 2;
    int nu2 = 2;
    SmootherKind smoother = SmootherKind::RedBlackGS;
    double omega = 0.8;  // Jacobi damping
    InterfaceInterpolation prolongation = InterfaceInterpolation::Constant;
    double tol = 1e-8;  // absolute per-cell RMS of the residual
    int max_cycles = 60;
    int coarsest_sweeps = 50;
    int composite_sweeps_per_cycle = 50;

    void validate() const {
        if (nu1 + nu2 < 1) throw InvalidArgument("mg: nu1 + nu2 must be >= 1");
        if (!(omega > 0.0 && omega <= 1.0)) throw InvalidArgument("mg: omega must be in (0, 1]");
        if (!(tol > 0.0)) throw InvalidArgument("mg: tol must be > 0");
        if (max_cycles < 1 || coarsest_sweeps < 0) throw InvalidArgument("mg: bad cycle counts");
    }
};

struct SolveReport {
    bool converged = false;
    int cycles = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    double tol = 0.0;
    bool all_neumann = false;
    bool composite = false;
    double rhs_mean_removed = 0.0;
    std::vector<double> cycle_residuals;
    std::vector<double> cycle_seconds;
};

//! Raised when the residual grows tenfold over its initial value for three
//! consecutive cycles.
struct MgDivergence : std::runtime_error {
    SolveReport report;
    explicit MgDivergence(SolveReport r)
        : std::runtime_error("poisson solve diverged at cycle " + std::to_string(r.cycles) +
                             " (residual " + std::to_string(r.final_residual) + ")"),
          report(std::move(r)) {}
};

namespace detail {

//! Per-block operator context for the folded seven-point kernels.
struct BlockOp {
    DGrid* g = nullptr;
    const std::vector<std::uint8_t>* mask = nullptr;  // null = all fluid
    std::uint8_t hull = 0;
    const std::array<PoissonBCKind, 6>* bc = nullptr;
    const std::array<std::vector<double>, 6>* gvals = nullptr;  // finest-level Dirichlet values
    double coeff[3] = {0, 0, 0};                                // 1/dx^2, 1/dy^2, 1/dz^2
    std::int64_t parity = 0;                                    // block-global parity offset
};

inline BlockOp make_block_op(BlockStore& store, const Topology& topo, GridId id,
                             const std::array<PoissonBCKind, 6>& bc,
                             const std::array<std::vector<double>, 6>* gvals) {
    BlockOp op;
    op.g = &store.grid(id);
    op.mask = store.has_mask(id) ? &store.mask(id) : nullptr;
    const LGridNode& n = topo.node(id);
    for (Face f : kAllFaces)
        if (on_hull(topo.spec(), n, f)) op.hull |= std::uint8_t(1u << static_cast<int>(f));
    op.bc = &bc;
    op.gvals = gvals;
    const Real3 d = op.g->spacing();
    op.coeff[0] = 1.0 / (d.x * d.x);
    op.coeff[1] = 1.0 / (d.y * d.y);
    op.coeff[2] = 1.0 / (d.z * d.z);
    const Int3 s = op.g->size();
    op.parity = (n.coord.x * s.x + n.coord.y * s.y + n.coord.z * s.z) & 1;
    return op;
}

//! Accumulates S and D of A p|_cell = S - D p: interior and interface-ghost
//! neighbours contribute c*p, Dirichlet hull faces fold into the diagonal and
//! source, Neumann and solid faces drop out.
template <typename FieldT>
inline void cell_op(const BlockOp& op, const FieldT& p, std::int64_t i, std::int64_t j,
                    std::int64_t k, double& S, double& D) {
    const DGrid& g = *op.g;
    const Int3 n = g.size();
    S = 0.0;
    D = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double c = op.coeff[a];
        for (int dir = -1; dir <= 1; dir += 2) {
            std::int64_t ni = i, nj = j, nk = k;
            (a == 0 ? ni : a == 1 ? nj : nk) += dir;
            const std::int64_t ncoord = a == 0 ? ni : a == 1 ? nj : nk;
            const bool is_ghost = ncoord < 1 || ncoord > n[a];
            const Face f = make_face(a, dir);
            if (is_ghost && (op.hull & (1u << static_cast<int>(f)))) {
                if ((*op.bc)[static_cast<int>(f)] == PoissonBCKind::Dirichlet) {
                    D += 2.0 * c;
                    if (op.gvals != nullptr && !(*op.gvals)[static_cast<int>(f)].empty()) {
                        const auto& vals = (*op.gvals)[static_cast<int>(f)];
                        std::int64_t idx;
                        if (a == 0)
                            idx = (k - 1) * n.y + (j - 1);
                        else if (a == 1)
                            idx = (k - 1) * n.x + (i - 1);
                        else
                            idx = (j - 1) * n.x + (i - 1);
                        S += 2.0 * c * vals[idx];
                    }
                }
                continue;  // Neumann: ghost copy cancels the connection
            }
            if (op.mask != nullptr && (*op.mask)[g.index(ni, nj, nk)] != 0) continue;
            D += c;
            S += c * p[g.index(ni, nj, nk)];
        }
    }
}

inline bool cell_solid(const BlockOp& op, std::int64_t i, std::int64_t j, std::int64_t k) {
    return op.mask != nullptr && (*op.mask)[op.g->index(i, j, k)] != 0;
}

//! r = rhs - A p on interior fluid cells, written to `out`. Returns the sum of
//! squares and the fluid-cell count for the global RMS.
inline std::pair<double, std::int64_t> block_residual(const BlockOp& op, Var pvar, Var rhsvar,
                                                      Var out) {
    DGrid& g = *op.g;
    const Int3 n = g.size();
    const auto& p = g.field(pvar);
    const auto& rhs = g.field(rhsvar);
    auto& r = g.field(out);
    double sum2 = 0.0;
    std::int64_t count = 0;
    for (std::int64_t k = 1; k <= n.z; ++k)
        for (std::int64_t j = 1; j <= n.y; ++j)
            for (std::int64_t i = 1; i <= n.x; ++i) {
                const std::size_t c = g.index(i, j, k);
                if (cell_solid(op, i, j, k)) {
                    r[c] = 0.0;
                    continue;
                }
                double S, D;
                cell_op(op, p, i, j, k, S, D);
                const double res = rhs[c] - (S - D * p[c]);
                r[c] = res;
                sum2 += res * res;
                ++count;
            }
    return {sum2, count};
}

//! One Gauss-Seidel half sweep over cells of the given global parity.
inline void block_smooth_color(const BlockOp& op, Var pvar, Var rhsvar, int color) {
    DGrid& g = *op.g;
    const Int3 n = g.size();
    auto& p = g.field(pvar);
    const auto& rhs = g.field(rhsvar);
    for (std::int64_t k = 1; k <= n.z; ++k)
        for (std::int64_t j = 1; j <= n.y; ++j) {
            // global parity of (i=1, j, k) in this block
            std::int64_t par = (op.parity + 1 + j + k + 1) & 1;
            for (std::int64_t i = 1; i <= n.x; ++i, par ^= 1) {
                if (par != color || cell_solid(op, i, j, k)) continue;
                double S, D;
                cell_op(op, p, i, j, k, S, D);
                if (D == 0.0) continue;
                p[g.index(i, j, k)] = (S - rhs[g.index(i, j, k)]) / D;
            }
        }
}

//! One damped-Jacobi sweep: p_new = (1-w) p + w (S - rhs)/D, staged via tmp.
inline void block_jacobi(const BlockOp& op, Var pvar, Var rhsvar, Var tmpvar, double omega) {
    DGrid& g = *op.g;
    const Int3 n = g.size();
    auto& p = g.field(pvar);
    const auto& rhs = g.field(rhsvar);
    auto& tmp = g.field(tmpvar);
    for (std::int64_t k = 1; k <= n.z; ++k)
        for (std::int64_t j = 1; j <= n.y; ++j)
            for (std::int64_t i = 1; i <= n.x; ++i) {
                const std::size_t c = g.index(i, j, k);
                if (cell_solid(op, i, j, k)) {
                    tmp[c] = p[c];
                    continue;
                }
                double S, D;
                cell_op(op, p, i, j, k, S, D);
                tmp[c] = D == 0.0 ? p[c] : (1.0 - omega) * p[c] + omega * (S - rhs[c]) / D;
            }
    for (std::int64_t k = 1; k <= n.z; ++k)
        for (std::int64_t j = 1; j <= n.y; ++j)
            for (std::int64_t i = 1; i <= n.x; ++i) {
                const std::size_t c = g.index(i, j, k);
                p[c] = tmp[c];
            }
}

inline std::pair<double, std::int64_t> block_sum_count(const BlockOp& op, Var v) {
    const DGrid& g = *op.g;
    const Int3 n = g.size();
    const auto& f = g.field(v);
    double s = 0.0;
    std::int64_t count = 0;
    for (std::int64_t k = 1; k <= n.z; ++k)
        for (std::int64_t j = 1; j <= n.y; ++j)
            for (std::int64_t i = 1; i <= n.x; ++i) {
                if (cell_solid(op, i, j, k)) continue;
                s += f[g.index(i, j, k)];
                ++count;
            }
    return {s, count};
}

inline void block_shift(const BlockOp& op, Var v, double delta) {
    DGrid& g = *op.g;
    const Int3 n = g.size();
    auto& f = g.field(v);
    for (std::int64_t k = 1; k <= n.z; ++k)
        for (std::int64_t j = 1; j <= n.y; ++j)
            for (std::int64_t i = 1; i <= n.x; ++i)
                if (!cell_solid(op, i, j, k)) f[g.index(i, j, k)] += delta;
}

} // namespace detail

//! Multigrid / composite-Schwarz Poisson solver over an execution context.
//! Operates on configurable solution/rhs variables (Var::P and Var::Rhs by
//! default), with Var::MgRes and Var::MgTmp as scratch.
class PoissonSolver {
  public:
    PoissonSolver(Exec& ex, MGConfig cfg, PoissonBC bc)
        : ex_(ex), cfg_(cfg), bc_(std::move(bc)) {
        cfg_.validate();
        const Topology& topo = ex_.topo();
        // Mixed-depth leaf sets run the composite solve.
        composite_ = false;
        const int finest = topo.max_depth();
        for (GridId id : ex_.topo().leaf_ids())
            if (topo.node(id).depth != finest) composite_ = true;
        build_boundary_values();
    }

    bool composite_mode() const { return composite_; }

    //! Iterates V-cycles (or composite smoothing rounds) until the residual
    //! RMS drops to tol or max_cycles is exhausted.
    SolveReport solve(Var p = Var::P, Var rhs = Var::Rhs) {
        SolveReport rep;
        rep.tol = cfg_.tol;
        rep.all_neumann = bc_.all_neumann();
        rep.composite = composite_;

        if (rep.all_neumann) rep.rhs_mean_removed = remove_mean(rhs, /*weighted=*/composite_);

        rep.initial_residual = residual_rms(p, rhs);
        rep.final_residual = rep.initial_residual;
        if (rep.initial_residual <= cfg_.tol) {
            rep.converged = true;
            return rep;
        }

        int growth_streak = 0;
        for (int cycle = 1; cycle <= cfg_.max_cycles; ++cycle) {
            const auto t0 = std::chrono::steady_clock::now();
            if (composite_)
                composite_round(p, rhs);
            else
                v_cycle(p, rhs);
            if (rep.all_neumann) remove_mean(p, composite_);
            const double r = residual_rms(p, rhs);
            rep.cycles = cycle;
            rep.final_residual = r;
            rep.cycle_residuals.push_back(r);
            rep.cycle_seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            if (r <= cfg_.tol) {
                rep.converged = true;
                return rep;
            }
            growth_streak = r > 10.0 * rep.initial_residual ? growth_streak + 1 : 0;
            if (growth_streak >= 3) throw MgDivergence(rep);
        }
        return rep;
    }

    //! Residual RMS of the current iterate (composite leaves or finest level).
    double residual_rms(Var p, Var rhs) {
        if (composite_) {
            ex_.exchange_composite(p, cfg_.prolongation);
            return level_residual_rms(ex_.my_leaves(), /*leaf_values=*/true, p, rhs);
        }
        const int finest = ex_.topo().max_depth();
        ex_.exchange_level(finest, p);
        return level_residual_rms(ex_.my_level(finest), true, p, rhs);
    }

    //! One V-cycle from the finest level down to the root block.
    void v_cycle(Var p, Var rhs) {
        require_cubic_transfer(ex_.topo().spec().r_sub);
        if (ex_.topo().max_depth() >= 1) require_cubic_transfer(ex_.topo().spec().r_top);
        cycle_level(ex_.topo().max_depth(), p, rhs);
    }

    //! Smoothing sweeps on one hierarchy level (exposed for tests).
    void smooth_level(int depth, Var p, Var rhs, int sweeps, bool leaf_values) {
        for (int s = 0; s < sweeps; ++s) {
            if (cfg_.smoother == SmootherKind::RedBlackGS) {
                for (int color = 0; color < 2; ++color) {
                    ex_.exchange_level(depth, p);
                    for (GridId id : ex_.my_level(depth))
                        detail::block_smooth_color(op(id, leaf_values), p, rhs, color);
                }
            } else {
                ex_.exchange_level(depth, p);
                for (GridId id : ex_.my_level(depth))
                    detail::block_jacobi(op(id, leaf_values), p, rhs, Var::MgTmp, cfg_.omega);
            }
        }
    }

  private:
    detail::BlockOp op(GridId id, bool leaf_values) {
        return detail::make_block_op(ex_.store(), ex_.topo(), id, bc_.kind,
                                     leaf_values && !gvals_.empty() ? &gvals_table(id) : nullptr);
    }

    const std::array<std::vector<double>, 6>& gvals_table(GridId id) {
        static const std::array<std::vector<double>, 6> empty{};
        const auto it = gvals_.find(id);
        return it == gvals_.end() ? empty : it->second;
    }

    //! Dirichlet boundary values at face centres of leaf hull faces.
    void build_boundary_values() {
        if (!bc_.value) return;
        const Topology& topo = ex_.topo();
        for (GridId id : ex_.my_leaves()) {
            const LGridNode& n = topo.node(id);
            const DGrid& g = ex_.store().grid(id);
            const Int3 s = g.size();
            for (Face f : kAllFaces) {
                if (!on_hull(topo.spec(), n, f)) continue;
                if (bc_.kind[static_cast<int>(f)] != PoissonBCKind::Dirichlet) continue;
                const int a = face_axis(f);
                const int t1 = a == 0 ? 1 : 0;
                const int t2 = a == 2 ? 1 : 2;
                std::vector<double> vals(static_cast<std::size_t>(s[t1] * s[t2]));
                for (std::int64_t q2 = 1; q2 <= s[t2]; ++q2)
                    for (std::int64_t q1 = 1; q1 <= s[t1]; ++q1) {
                        Int3 cell;
                        cell.set(a, face_sign(f) < 0 ? 1 : s[a]);
                        cell.set(t1, q1);
                        cell.set(t2, q2);
                        Real3 pos = g.cell_center(cell.x, cell.y, cell.z);
                        pos.set(a, pos[a] + 0.5 * face_sign(f) * g.spacing()[a]);
                        vals[static_cast<std::size_t>((q2 - 1) * s[t1] + (q1 - 1))] =
                            bc_.value(f, pos);
                    }
                gvals_[id][static_cast<int>(f)] = std::move(vals);
            }
        }
    }

    double level_residual_rms(const std::vector<GridId>& blocks, bool leaf_values, Var p, Var rhs) {
        BlockPartials sums, counts;
        for (GridId id : blocks) {
            const auto [s2, cnt] = detail::block_residual(op(id, leaf_values), p, rhs, Var::MgRes);
            sums.emplace_back(id, s2);
            counts.emplace_back(id, static_cast<double>(cnt));
        }
        const double total = ex_.reduce_sum(sums);
        const double count = ex_.reduce_sum(counts);
        return count > 0 ? std::sqrt(total / count) : 0.0;
    }

    //! Removes the (volume-weighted, for composite) mean of a variable over
    //! fluid cells; pins the Neumann null space.
    double remove_mean(Var v, bool weighted) {
        BlockPartials sums, weights;
        const auto& blocks = composite_ ? ex_.my_leaves() : ex_.my_level(ex_.topo().max_depth());
        for (GridId id : blocks) {
            const auto [s, cnt] = detail::block_sum_count(op(id, true), v);
            const double w = weighted ? ex_.store().grid(id).cell_volume() : 1.0;
            sums.emplace_back(id, s * w);
            weights.emplace_back(id, static_cast<double>(cnt) * w);
        }
        const double total = ex_.reduce_sum(sums);
        const double weight = ex_.reduce_sum(weights);
        const double mean = weight > 0 ? total / weight : 0.0;
        for (GridId id : blocks) detail::block_shift(op(id, true), v, -mean);
        return mean;
    }

    void cycle_level(int depth, Var p, Var rhs) {
        if (depth == 0) {
            smooth_level(0, p, rhs, cfg_.coarsest_sweeps, depth == ex_.topo().max_depth());
            return;
        }
        const bool finest = depth == ex_.topo().max_depth();
        smooth_level(depth, p, rhs, cfg_.nu1, finest);

        ex_.exchange_level(depth, p);
        for (GridId id : ex_.my_level(depth))
            detail::block_residual(op(id, finest), p, rhs, Var::MgRes);
        ex_.restrict_to_parents(depth, Var::MgRes, rhs);
        for (GridId id : ex_.my_level(depth - 1)) {
            DGrid& g = ex_.store().grid(id);
            auto& f = g.field(p);
            std::fill(f.begin(), f.end(), 0.0);
        }

        cycle_level(depth - 1, p, rhs);

        ex_.exchange_level(depth - 1, p);
        impose_homogeneous_ghosts(depth - 1, p);
        ex_.prolong_to_children(depth - 1, p, p, cfg_.prolongation);

        smooth_level(depth, p, rhs, cfg_.nu2, finest);
    }

    //! Fills hull ghosts of a correction level so the prolongation patch ring
    //! is defined: reflection for Dirichlet (g = 0), copy for Neumann.
    void impose_homogeneous_ghosts(int depth, Var v) {
        const Topology& topo = ex_.topo();
        for (GridId id : ex_.my_level(depth)) {
            const LGridNode& n = topo.node(id);
            DGrid& g = ex_.store().grid(id);
            const Int3 s = g.size();
            auto& f = g.field(v);
            for (Face face : kAllFaces) {
                if (!on_hull(topo.spec(), n, face)) continue;
                const bool dirichlet = bc_.kind[static_cast<int>(face)] == PoissonBCKind::Dirichlet;
                const int a = face_axis(face);
                const std::int64_t ghost = face_sign(face) < 0 ? 0 : s[a] + 1;
                const std::int64_t inner = face_sign(face) < 0 ? 1 : s[a];
                const int t1 = a == 0 ? 1 : 0;
                const int t2 = a == 2 ? 1 : 2;
                for (std::int64_t q2 = 0; q2 <= s[t2] + 1; ++q2)
                    for (std::int64_t q1 = 0; q1 <= s[t1] + 1; ++q1) {
                        Int3 gi, ii;
                        gi.set(a, ghost);
                        ii.set(a, inner);
                        gi.set(t1, q1);
                        ii.set(t1, q1);
                        gi.set(t2, q2);
                        ii.set(t2, q2);
                        const double v_in = f[g.index(ii.x, ii.y, ii.z)];
                        f[g.index(gi.x, gi.y, gi.z)] = dirichlet ? -v_in : v_in;
                    }
            }
        }
    }

    //! One composite smoothing round over the mixed-depth leaf set.
    void composite_round(Var p, Var rhs) {
        for (int s = 0; s < cfg_.composite_sweeps_per_cycle; ++s) {
            if (cfg_.smoother == SmootherKind::RedBlackGS) {
                for (int color = 0; color < 2; ++color) {
                    ex_.exchange_composite(p, cfg_.prolongation);
                    for (GridId id : ex_.my_leaves())
                        detail::block_smooth_color(op(id, true), p, rhs, color);
                }
            } else {
                ex_.exchange_composite(p, cfg_.prolongation);
                for (GridId id : ex_.my_leaves())
                    detail::block_jacobi(op(id, true), p, rhs, Var::MgTmp, cfg_.omega);
            }
        }
    }

    Exec& ex_;
    MGConfig cfg_;
    PoissonBC bc_;
    bool composite_ = false;
    std::map<GridId, std::array<std::vector<double>, 6>> gvals_;
};

} // namespace blockflow

#endif // BLOCKFLOW_POISSON_HPP_
