#ifndef BLOCKFLOW_DOMAIN_HPP_
#define BLOCKFLOW_DOMAIN_HPP_
//! \file domain.hpp
//! \brief Binds a topology to physical space: one d-grid per l-grid with the
//!        depth-derived spacing and origin, plus voxelised obstacle masks.

#include <cstdint>
#include <functional>
#include <vector>

#include "blockflow/dgrid.hpp"
#include "blockflow/topology.hpp"
#include "blockflow/types.hpp"

namespace blockflow {

//! Cell-centre predicate deciding solid cells; evaluated per level so coarse
//! grids get their own consistent voxelisation.
using SolidPredicate = std::function<bool(const Real3&)>;

//! All d-grids of a hierarchy in one place. Every l-grid owns exactly one
//! d-grid of identical cell counts; spacing halves (per subdivision factor)
//! with each level. Blocks are mutated only by their owning worker.
class BlockStore {
  public:
    BlockStore() = default;

    //! `root_spacing` is the spacing of the depth-0 block; the domain box is
    //! size * root_spacing starting at `origin`.
    BlockStore(const Topology& topo, const Int3& block_size, const Real3& root_spacing,
               const Real3& origin = {})
        : block_size_(block_size), root_spacing_(root_spacing), origin_(origin) {
        DGridSpec{block_size, 1, root_spacing}.validate();
        grids_.reserve(topo.node_count());
        for (GridId id = 0; id < topo.node_count(); ++id) {
            const LGridNode& n = topo.node(id);
            grids_.emplace_back(block_size, spacing(topo.spec(), n.depth),
                                block_origin(topo.spec(), n));
        }
        masks_.resize(topo.node_count());
    }

    Real3 spacing(const RefinementSpec& spec, int depth) const {
        const Int3 e = spec.lattice_extent(depth);
        return {root_spacing_.x / e.x, root_spacing_.y / e.y, root_spacing_.z / e.z};
    }

    Real3 block_origin(const RefinementSpec& spec, const LGridNode& n) const {
        const Int3 e = spec.lattice_extent(n.depth);
        const Real3 ext{block_size_.x * root_spacing_.x, block_size_.y * root_spacing_.y,
                        block_size_.z * root_spacing_.z};
        return {origin_.x + ext.x * n.coord.x / e.x, origin_.y + ext.y * n.coord.y / e.y,
                origin_.z + ext.z * n.coord.z / e.z};
    }

    Real3 domain_extent() const {
        return {block_size_.x * root_spacing_.x, block_size_.y * root_spacing_.y,
                block_size_.z * root_spacing_.z};
    }

    const Int3& block_size() const { return block_size_; }
    std::size_t size() const { return grids_.size(); }

    DGrid& grid(GridId id) { return grids_.at(id); }
    const DGrid& grid(GridId id) const { return grids_.at(id); }

    //! Voxelises obstacle geometry by cell-centre sampling, halo cells
    //! included so neighbouring blocks agree on interface cells. Empty mask
    //! means all-fluid.
    void voxelize(const SolidPredicate& solid) {
        for (GridId id = 0; id < grids_.size(); ++id) {
            const DGrid& g = grids_[id];
            const Int3 pad = g.padded();
            std::vector<std::uint8_t> m(g.cells_with_halo(), 0);
            bool any = false;
            for (std::int64_t k = 0; k < pad.z; ++k)
                for (std::int64_t j = 0; j < pad.y; ++j)
                    for (std::int64_t i = 0; i < pad.x; ++i)
                        if (solid(g.cell_center(i, j, k))) {
                            m[g.index(i, j, k)] = 1;
                            any = true;
                        }
            masks_[id] = any ? std::move(m) : std::vector<std::uint8_t>{};
        }
    }

    bool has_mask(GridId id) const { return !masks_.at(id).empty(); }
    const std::vector<std::uint8_t>& mask(GridId id) const { return masks_.at(id); }

    bool is_solid(GridId id, std::int64_t i, std::int64_t j, std::int64_t k) const {
        const auto& m = masks_.at(id);
        return !m.empty() && m[grids_[id].index(i, j, k)] != 0;
    }

  private:
    Int3 block_size_;
    Real3 root_spacing_{1, 1, 1};
    Real3 origin_;
    std::vector<DGrid> grids_;
    std::vector<std::vector<std::uint8_t>> masks_;
};

//! True if the node's face lies on the domain hull at its own depth level.
inline bool on_hull(const RefinementSpec& spec, const LGridNode& n, Face f) {
    const Int3 ext = spec.lattice_extent(n.depth);
    const int a = face_axis(f);
    return face_sign(f) < 0 ? n.coord[a] == 0 : n.coord[a] == ext[a] - 1;
}

} // namespace blockflow

#endif // BLOCKFLOW_DOMAIN_HPP_
