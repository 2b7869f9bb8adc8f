#ifndef BLOCKFLOW_EXEC_HPP_
#define BLOCKFLOW_EXEC_HPP_
//! \file exec.hpp
//! \brief Execution context: the bulk-synchronous collectives solvers are
//!        written against. The serial context owns every block; the worker
//!        runtime provides a rank-local context routing the same pack/unpack
//!        payloads through its transport. Numerical kernels see no difference,
//!        which is what makes solver results partition independent.

#include <algorithm>
#include <utility>
#include <vector>

#include "blockflow/exchange.hpp"
#include "blockflow/topology.hpp"
#include "blockflow/transfer.hpp"

namespace blockflow {

//! Keyed partial values for deterministic global reductions: contributions are
//! folded in ascending block-id order regardless of how blocks are spread
//! across workers.
using BlockPartials = std::vector<std::pair<GridId, double>>;

inline double fold_sum_by_id(BlockPartials partials) {
    std::sort(partials.begin(), partials.end());
    double s = 0.0;
    for (const auto& [id, v] : partials) s += v;
    return s;
}

inline double fold_max_by_id(BlockPartials partials) {
    std::sort(partials.begin(), partials.end());
    double m = partials.empty() ? 0.0 : partials.front().second;
    for (const auto& [id, v] : partials) m = std::max(m, v);
    return m;
}

class Exec {
  public:
    virtual ~Exec() = default;

    virtual const Topology& topo() const = 0;
    virtual BlockStore& store() = 0;
    virtual const ExchangePlan& plan() const = 0;

    virtual int rank() const { return 0; }
    virtual int world() const { return 1; }

    //! Blocks of one depth level owned by this context, Morton order.
    virtual const std::vector<GridId>& my_level(int depth) const = 0;
    //! Leaves owned by this context, (depth, Morton) order.
    virtual const std::vector<GridId>& my_leaves() const = 0;

    // Bulk-synchronous collectives. Every context of a run must call these in
    // the same sequence.
    virtual void exchange_level(int depth, Var v) = 0;
    virtual void exchange_composite(Var v, InterfaceInterpolation interp) = 0;
    virtual void restrict_to_parents(int fine_depth, Var src, Var dst) = 0;
    virtual void prolong_to_children(int coarse_depth, Var src, Var dst,
                                     InterfaceInterpolation interp) = 0;
    virtual double reduce_sum(const BlockPartials& partials) = 0;
    virtual double reduce_max(const BlockPartials& partials) = 0;
    virtual void barrier() {}
};

//! Single-address-space context: owns every block, collectives apply directly.
class SerialExec final : public Exec {
  public:
    SerialExec(const Topology& topo, BlockStore& store, const ExchangePlan& plan)
        : topo_(topo), store_(store), plan_(plan) {
        levels_.resize(topo.max_depth() + 1);
        for (int d = 0; d <= topo.max_depth(); ++d) levels_[d] = topo.level_ids(d);
    }

    const Topology& topo() const override { return topo_; }
    BlockStore& store() override { return store_; }
    const ExchangePlan& plan() const override { return plan_; }

    const std::vector<GridId>& my_level(int depth) const override { return levels_.at(depth); }
    const std::vector<GridId>& my_leaves() const override { return topo_.leaf_ids(); }

    void exchange_level(int depth, Var v) override {
        blockflow::exchange_level(store_, plan_, depth, v);
    }
    void exchange_composite(Var v, InterfaceInterpolation interp) override {
        blockflow::exchange_composite(store_, plan_, v, interp);
    }

    void restrict_to_parents(int fine_depth, Var src, Var dst) override {
        const Int3 r = topo_.spec().factors_below(fine_depth - 1);
        for (GridId id : levels_.at(fine_depth)) {
            const LGridNode& n = topo_.node(id);
            const LGridNode& p = topo_.node(n.parent);
            const Int3 oct{n.coord.x - p.coord.x * r.x, n.coord.y - p.coord.y * r.y,
                           n.coord.z - p.coord.z * r.z};
            unpack_restrict(store_, n.parent, oct, dst, pack_restrict(store_, id, src, r));
        }
    }

    void prolong_to_children(int coarse_depth, Var src, Var dst,
                             InterfaceInterpolation interp) override {
        const Int3 r = topo_.spec().factors_below(coarse_depth);
        for (GridId id : levels_.at(coarse_depth + 1)) {
            const LGridNode& n = topo_.node(id);
            const LGridNode& p = topo_.node(n.parent);
            const Int3 oct{n.coord.x - p.coord.x * r.x, n.coord.y - p.coord.y * r.y,
                           n.coord.z - p.coord.z * r.z};
            unpack_prolong(store_, id, dst, pack_prolong(store_, n.parent, oct, src, r), interp);
        }
    }

    double reduce_sum(const BlockPartials& partials) override { return fold_sum_by_id(partials); }
    double reduce_max(const BlockPartials& partials) override { return fold_max_by_id(partials); }

  private:
    const Topology& topo_;
    BlockStore& store_;
    const ExchangePlan& plan_;
    std::vector<std::vector<GridId>> levels_;
};

} // namespace blockflow

#endif // BLOCKFLOW_EXEC_HPP_
