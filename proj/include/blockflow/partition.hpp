#ifndef BLOCKFLOW_PARTITION_HPP_
#define BLOCKFLOW_PARTITION_HPP_
//! \file partition.hpp
//! \brief Ownership of grids: Z-order (Lebesgue) assignment of every depth
//!        level to workers, ownership queries, migration, load reporting and
//!        the per-rank-pair communication pattern.

#include <cstdint>
#include <vector>

#include "blockflow/exchange.hpp"
#include "blockflow/topology.hpp"
#include "blockflow/types.hpp"

namespace blockflow {

//! Owner of every grid. The initial assignment splits each depth level's
//! Morton-sorted grids into P contiguous ranges whose sizes differ by at most
//! one, which preserves spatial locality per level. The generation counter
//! increments on every migration so cached routing can detect staleness.
class PartitionMap {
  public:
    PartitionMap() = default;

    int workers() const { return workers_; }
    std::uint64_t generation() const { return generation_; }
    std::size_t grid_count() const { return owner_.size(); }

    int owner(GridId id) const {
        if (id >= owner_.size()) throw NotFound("owner: unknown grid id " + std::to_string(id));
        return owner_[id];
    }

    const std::vector<GridId>& worker_grids(int rank) const {
        if (rank < 0 || rank >= workers_) throw NotFound("worker_grids: unknown rank");
        return per_worker_[rank];
    }

    //! Moves one grid (field payload transfer is the runtime's job). A move to
    //! the current owner still bumps the generation.
    void migrate(GridId id, int to) {
        if (id >= owner_.size()) throw NotFound("migrate: unknown grid id " + std::to_string(id));
        if (to < 0 || to >= workers_) throw NotFound("migrate: unknown target rank");
        const int from = owner_[id];
        if (from != to) {
            auto& src = per_worker_[from];
            src.erase(std::find(src.begin(), src.end(), id));
            auto& dst = per_worker_[to];
            dst.insert(std::lower_bound(dst.begin(), dst.end(), id), id);
            owner_[id] = to;
        }
        ++generation_;
    }

    struct BalanceReport {
        std::vector<std::size_t> grids_per_worker;                  // all levels combined
        std::vector<std::vector<std::size_t>> per_level_per_worker;  // [depth][rank]
        std::size_t imbalance = 0;  // max over levels of (max - min) per level
    };

    //! Load distribution per depth level; the level view is what the Z-order
    //! assignment balances.
    BalanceReport balance_report() const {
        BalanceReport r;
        r.grids_per_worker.assign(workers_, 0);
        const int levels = depth_.empty() ? 0 : *std::max_element(depth_.begin(), depth_.end()) + 1;
        r.per_level_per_worker.assign(levels, std::vector<std::size_t>(workers_, 0));
        for (GridId id = 0; id < owner_.size(); ++id) {
            r.grids_per_worker[owner_[id]]++;
            r.per_level_per_worker[depth_[id]][owner_[id]]++;
        }
        for (const auto& lvl : r.per_level_per_worker) {
            const auto [mn, mx] = std::minmax_element(lvl.begin(), lvl.end());
            r.imbalance = std::max(r.imbalance, *mx - *mn);
        }
        return r;
    }

    //! Consistency audit: ownership is a partition of all grids.
    bool consistent() const {
        std::vector<char> seen(owner_.size(), 0);
        std::size_t total = 0;
        for (int w = 0; w < workers_; ++w)
            for (GridId id : per_worker_[w]) {
                if (id >= owner_.size() || owner_[id] != w || seen[id]) return false;
                seen[id] = 1;
                ++total;
            }
        return total == owner_.size();
    }

    friend PartitionMap assign(const Topology& topo, int workers);

  private:
    std::vector<int> owner_;
    std::vector<int> depth_;
    std::vector<std::vector<GridId>> per_worker_;
    int workers_ = 0;
    std::uint64_t generation_ = 0;
};

//! Z-order assignment: per depth level, grids sorted by Morton key and split
//! into P contiguous ranges, range sizes differing by at most 1. Deterministic.
inline PartitionMap assign(const Topology& topo, int workers) {
    if (workers < 1) throw InvalidArgument("assign: worker count must be >= 1");
    PartitionMap map;
    map.workers_ = workers;
    map.owner_.assign(topo.node_count(), 0);
    map.depth_.resize(topo.node_count());
    for (GridId id = 0; id < topo.node_count(); ++id) map.depth_[id] = topo.node(id).depth;
    map.per_worker_.assign(workers, {});
    for (int d = 0; d <= topo.max_depth(); ++d) {
        const auto ids = topo.level_ids(d);  // Morton order
        const std::size_t n = ids.size();
        const std::size_t base = n / workers;
        const std::size_t rem = n % workers;
        std::size_t pos = 0;
        for (int w = 0; w < workers; ++w) {
            const std::size_t take = base + (static_cast<std::size_t>(w) < rem ? 1 : 0);
            for (std::size_t i = 0; i < take; ++i, ++pos) {
                map.owner_[ids[pos]] = w;
                map.per_worker_[w].push_back(ids[pos]);
            }
        }
    }
    for (auto& g : map.per_worker_) std::sort(g.begin(), g.end());
    return map;
}

//! Ghost-cell volumes exchanged per step per variable between rank pairs.
//! entry [a][b] counts destination ghost cells written on a's grids from b's
//! data; the diagonal is intra-worker copying. Same-level interfaces make the
//! matrix symmetric.
inline std::vector<std::vector<std::uint64_t>> comm_pattern(const Topology& topo,
                                                            const PartitionMap& map,
                                                            const Int3& block_size) {
    const ExchangePlan plan = plan_exchange(topo, block_size, map.generation());
    std::vector<std::vector<std::uint64_t>> vol(
        map.workers(), std::vector<std::uint64_t>(map.workers(), 0));
    for (int axis = 0; axis < 3; ++axis)
        for (const CopyEntry& e : plan.composite_copy[axis])
            vol[map.owner(e.dst)][map.owner(e.src)] += copy_cells(plan, e);
    for (const F2CEntry& e : plan.fine_to_coarse)
        vol[map.owner(e.coarse)][map.owner(e.fine)] += f2c_cells(plan, e);
    for (const C2FEntry& e : plan.coarse_to_fine)
        vol[map.owner(e.fine)][map.owner(e.coarse)] += c2f_cells(plan, e);
    return vol;
}

//! Total cross-worker (off-diagonal) volume of a pattern.
inline std::uint64_t cut_volume(const std::vector<std::vector<std::uint64_t>>& pattern) {
    std::uint64_t cut = 0;
    for (std::size_t a = 0; a < pattern.size(); ++a)
        for (std::size_t b = 0; b < pattern.size(); ++b)
            if (a != b) cut += pattern[a][b];
    return cut;
}

} // namespace blockflow

#endif // BLOCKFLOW_PARTITION_HPP_
