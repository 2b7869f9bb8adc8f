#ifndef BLOCKFLOW_EXCHANGE_HPP_
#define BLOCKFLOW_EXCHANGE_HPP_
//! \file exchange.hpp
//! \brief Halo exchange: ghost cells are filled from same-level neighbours by
//!        bit-exact copy and across coarse-fine interfaces by conservative
//!        averaging (fine -> coarse) and constant or trilinear interpolation
//!        (coarse -> fine).
//!
//! The exchange of one field runs in bulk-synchronous sub-phases:
//!   1..3  same-level face copies in x, y, z order (interior slabs),
//!   4     fine -> coarse volume averages,
//!   5     coarse -> fine interpolation,
//!   6..7  a second sweep in y, z order with tangentially extended slabs so
//!         edge/corner ghosts receive two-hop values (the 7-point stencil
//!         never reads diagonal ghosts; this matters for diagnostics only).
//! The second sweep runs after the interface transfers so every packed value
//! is a function of interior data alone, which makes the exchange idempotent.
//! Physical-boundary ghosts are never written here; boundary conditions own
//! them.
//!
//! Every transfer is expressed as pack (read source block) and unpack (write
//! destination ghosts) over a flat buffer. Worker runtimes ship the buffer as
//! a message; the in-process path applies it directly. Both routes execute
//! identical arithmetic, which is what makes exchange results independent of
//! the partition, bit for bit.

#include <array>
#include <cstdint>
#include <vector>

#include "blockflow/domain.hpp"
#include "blockflow/topology.hpp"
#include "blockflow/types.hpp"

namespace blockflow {

enum class InterfaceInterpolation { Constant, Trilinear };

//! Same-level directed face copy: fills dst's ghost layer at `dst_face` from
//! the adjacent interior layer of src.
struct CopyEntry {
    GridId src = kNoGrid;
    GridId dst = kNoGrid;
    Face dst_face = Face::XMinus;

    bool operator==(const CopyEntry&) const = default;
};

//! Coarse -> fine interface transfer: fills the fine block's ghost layer at
//! `fine_face` by interpolating the coarse block's data.
struct C2FEntry {
    GridId coarse = kNoGrid;
    GridId fine = kNoGrid;
    Face fine_face = Face::XMinus;
    Int3 octant;              // fine block's offset inside the coarse block, in subdivision units
    std::uint8_t coarse_hull = 0;  // 6-bit physical-hull mask of the coarse block

    bool operator==(const C2FEntry&) const = default;
};

//! Fine -> coarse interface transfer: fills the quadrant of the coarse ghost
//! layer at `coarse_face` covered by this fine block with volume averages.
struct F2CEntry {
    GridId fine = kNoGrid;
    GridId coarse = kNoGrid;
    Face coarse_face = Face::XMinus;
    Int3 octant;

    bool operator==(const F2CEntry&) const = default;
};

struct BoundaryFace {
    GridId grid = kNoGrid;
    Face face = Face::XMinus;

    bool operator==(const BoundaryFace&) const = default;
};

//! Precomputed exchange schedule for one topology. Entries are ownership
//! agnostic; the partition generation is recorded so routed plans can detect
//! staleness after migrations.
struct ExchangePlan {
    RefinementSpec spec;
    Int3 block_size;
    Int3 sub_factors;  // refinement between interface levels (r_sub)

    //! Leaf-to-leaf same-level copies, grouped by sweep axis.
    std::array<std::vector<CopyEntry>, 3> composite_copy;
    //! All same-level copies of one depth (leaves or not), grouped by axis;
    //! used for level-wise smoothing in the multigrid cycle.
    std::vector<std::array<std::vector<CopyEntry>, 3>> level_copy;

    std::vector<F2CEntry> fine_to_coarse;
    std::vector<C2FEntry> coarse_to_fine;
    //! coarse_to_fine is ordered by the coarse block's depth; interpolation
    //! toward deeper interfaces may read ghosts filled by shallower entries,
    //! so each depth group runs as its own bulk-synchronous sub-phase.
    std::vector<std::pair<std::size_t, std::size_t>> c2f_groups;

    //! Physical hull faces of leaves (composite boundary set).
    std::vector<BoundaryFace> physical;

    std::uint64_t partition_generation = 0;

    int max_depth() const { return static_cast<int>(level_copy.size()) - 1; }
};

namespace detail {

//! Tangential index range of a face slab. In the corner sweep, axes already
//! swept carry their ghost extensions along.
inline void slab_range(int tangent_axis, int sweep_axis, bool extended, std::int64_t n,
                       std::int64_t& lo, std::int64_t& hi) {
    if (extended && tangent_axis < sweep_axis) {
        lo = 0;
        hi = n + 1;
    } else {
        lo = 1;
        hi = n;
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Same-level copy pack/unpack
// ---------------------------------------------------------------------------

inline std::vector<double> pack_copy(const BlockStore& store, const CopyEntry& e, Var v,
                                     bool extended = false) {
    const DGrid& src = store.grid(e.src);
    const Int3 n = src.size();
    const int a = face_axis(e.dst_face);
    // Source interior layer on the side facing dst: dst's -x ghost comes from
    // src's +x-most interior layer, and vice versa.
    const std::int64_t layer = face_sign(e.dst_face) < 0 ? n[a] : 1;
    Int3 lo{1, 1, 1}, hi = n;
    for (int b = 0; b < 3; ++b) {
        if (b == a) continue;
        std::int64_t l, h;
        detail::slab_range(b, a, extended, n[b], l, h);
        lo.set(b, l);
        hi.set(b, h);
    }
    lo.set(a, layer);
    hi.set(a, layer);

    const auto& f = src.field(v);
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>((hi.x - lo.x + 1) * (hi.y - lo.y + 1) * (hi.z - lo.z + 1)));
    for (std::int64_t k = lo.z; k <= hi.z; ++k)
        for (std::int64_t j = lo.y; j <= hi.y; ++j)
            for (std::int64_t i = lo.x; i <= hi.x; ++i) buf.push_back(f[src.index(i, j, k)]);
    return buf;
}

inline void unpack_copy(BlockStore& store, const CopyEntry& e, Var v,
                        const std::vector<double>& buf, bool extended = false) {
    DGrid& dst = store.grid(e.dst);
    const Int3 n = dst.size();
    const int a = face_axis(e.dst_face);
    const std::int64_t layer = face_sign(e.dst_face) < 0 ? 0 : n[a] + 1;
    Int3 lo{1, 1, 1}, hi = n;
    for (int b = 0; b < 3; ++b) {
        if (b == a) continue;
        std::int64_t l, h;
        detail::slab_range(b, a, extended, n[b], l, h);
        lo.set(b, l);
        hi.set(b, h);
    }
    lo.set(a, layer);
    hi.set(a, layer);

    auto& f = dst.field(v);
    std::size_t p = 0;
    for (std::int64_t k = lo.z; k <= hi.z; ++k)
        for (std::int64_t j = lo.y; j <= hi.y; ++j)
            for (std::int64_t i = lo.x; i <= hi.x; ++i) f[dst.index(i, j, k)] = buf[p++];
}

// ---------------------------------------------------------------------------
// Fine -> coarse: conservative volume average.
// The coarse ghost cell is covered by r_n x r_t1 x r_t2 fine interior cells
// whose centroid coincides with the ghost centre, so averaging is exact for
// linear fields; this is what keeps the diffusive interface flux continuous.
// ---------------------------------------------------------------------------

//! Packed payload: the averaged destination values in coarse-ghost order.
inline std::vector<double> pack_f2c(const BlockStore& store, const F2CEntry& e, Var v,
                                    const Int3& r) {
    const DGrid& fine = store.grid(e.fine);
    const Int3 n = fine.size();
    const int a = face_axis(e.coarse_face);
    const int t1 = a == 0 ? 1 : 0;
    const int t2 = a == 2 ? 1 : 2;
    // Fine interior layers adjacent to the interface. The coarse ghost is one
    // coarse cell deep = r[a] fine cells.
    const std::int64_t n_first = face_sign(e.coarse_face) > 0 ? 1 : n[a] - r[a] + 1;

    const auto& f = fine.field(v);
    const std::int64_t c1 = n[t1] / r[t1];  // coarse ghost cells covered tangentially
    const std::int64_t c2 = n[t2] / r[t2];
    const double w = 1.0 / static_cast<double>(r[a] * r[t1] * r[t2]);

    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>(c1 * c2));
    Int3 idx;
    for (std::int64_t q2 = 0; q2 < c2; ++q2)
        for (std::int64_t q1 = 0; q1 < c1; ++q1) {
            double sum = 0.0;
            for (std::int64_t dn = 0; dn < r[a]; ++dn)
                for (std::int64_t d2 = 0; d2 < r[t2]; ++d2)
                    for (std::int64_t d1 = 0; d1 < r[t1]; ++d1) {
                        idx.set(a, n_first + dn);
                        idx.set(t1, q1 * r[t1] + 1 + d1);
                        idx.set(t2, q2 * r[t2] + 1 + d2);
                        sum += f[fine.index(idx.x, idx.y, idx.z)];
                    }
            buf.push_back(sum * w);
        }
    return buf;
}

inline void unpack_f2c(BlockStore& store, const F2CEntry& e, Var v, const Int3& r,
                       const std::vector<double>& buf) {
    DGrid& coarse = store.grid(e.coarse);
    const Int3 n = coarse.size();
    const int a = face_axis(e.coarse_face);
    const int t1 = a == 0 ? 1 : 0;
    const int t2 = a == 2 ? 1 : 2;
    const std::int64_t ghost = face_sign(e.coarse_face) > 0 ? n[a] + 1 : 0;
    const std::int64_t off1 = e.octant[t1] * (n[t1] / r[t1]);
    const std::int64_t off2 = e.octant[t2] * (n[t2] / r[t2]);
    const std::int64_t c1 = n[t1] / r[t1];
    const std::int64_t c2 = n[t2] / r[t2];

    auto& f = coarse.field(v);
    std::size_t p = 0;
    Int3 idx;
    idx.set(a, ghost);
    for (std::int64_t q2 = 0; q2 < c2; ++q2)
        for (std::int64_t q1 = 0; q1 < c1; ++q1) {
            idx.set(t1, off1 + q1 + 1);
            idx.set(t2, off2 + q2 + 1);
            f[coarse.index(idx.x, idx.y, idx.z)] = buf[p++];
        }
}

// ---------------------------------------------------------------------------
// Coarse -> fine: the packed patch is the two coarse interior layers next to
// the interface over the fine block's tangential footprint plus one cell of
// surround. The fine side evaluates either the covering-cell (constant) or a
// component-wise linear (trilinear) reconstruction at each ghost centre;
// where the surround would be a physical-boundary ghost the reconstruction
// switches to one-sided extrapolation from the interior, so linear fields
// stay exact up to the hull.
// ---------------------------------------------------------------------------

struct C2FPatch {
    std::int64_t len1 = 0, len2 = 0;  // tangential extents (with surround)
    std::vector<double> data;         // [2][len2][len1], layer 0 adjacent to the interface
};

inline C2FPatch pack_c2f(const BlockStore& store, const C2FEntry& e, Var v, const Int3& r) {
    const DGrid& coarse = store.grid(e.coarse);
    const Int3 n = coarse.size();
    // The interface sits on the coarse block's face opposite to the fine face.
    const Face cface = opposite(e.fine_face);
    const int a = face_axis(cface);
    const int t1 = a == 0 ? 1 : 0;
    const int t2 = a == 2 ? 1 : 2;
    const std::int64_t first = face_sign(cface) > 0 ? n[a] : 1;      // layer at the interface
    const std::int64_t second = face_sign(cface) > 0 ? n[a] - 1 : 2;  // next interior layer

    const std::int64_t off1 = e.octant[t1] * (n[t1] / r[t1]);
    const std::int64_t off2 = e.octant[t2] * (n[t2] / r[t2]);

    C2FPatch patch;
    patch.len1 = n[t1] / r[t1] + 2;
    patch.len2 = n[t2] / r[t2] + 2;
    patch.data.resize(static_cast<std::size_t>(2 * patch.len1 * patch.len2));

    const auto& f = coarse.field(v);
    Int3 idx;
    for (int layer = 0; layer < 2; ++layer) {
        idx.set(a, layer == 0 ? first : second);
        for (std::int64_t q2 = 0; q2 < patch.len2; ++q2)
            for (std::int64_t q1 = 0; q1 < patch.len1; ++q1) {
                idx.set(t1, off1 + q1);
                idx.set(t2, off2 + q2);
                patch.data[static_cast<std::size_t>((layer * patch.len2 + q2) * patch.len1 + q1)] =
                    f[coarse.index(idx.x, idx.y, idx.z)];
            }
    }
    return patch;
}

inline void unpack_c2f(BlockStore& store, const C2FEntry& e, Var v, const Int3& r,
                       C2FPatch patch, InterfaceInterpolation interp) {
    // The diagonal surround cells of the patch are edge ghosts on the coarse
    // block, which are not valid until after the corner sweep. Rebuild them
    // from the face-adjacent samples (exact for linear fields) so the
    // interpolation is a pure function of face data.
    for (int layer = 0; layer < 2; ++layer) {
        auto at = [&](std::int64_t q1, std::int64_t q2) -> double& {
            return patch.data[static_cast<std::size_t>((layer * patch.len2 + q2) * patch.len1 + q1)];
        };
        const std::int64_t l1 = patch.len1 - 1, l2 = patch.len2 - 1;
        at(0, 0) = at(1, 0) + at(0, 1) - at(1, 1);
        at(l1, 0) = at(l1 - 1, 0) + at(l1, 1) - at(l1 - 1, 1);
        at(0, l2) = at(0, l2 - 1) + at(1, l2) - at(1, l2 - 1);
        at(l1, l2) = at(l1 - 1, l2) + at(l1, l2 - 1) - at(l1 - 1, l2 - 1);
    }

    DGrid& fine = store.grid(e.fine);
    const Int3 n = fine.size();
    const int a = face_axis(e.fine_face);
    const int t1 = a == 0 ? 1 : 0;
    const int t2 = a == 2 ? 1 : 2;
    const std::int64_t ghost = face_sign(e.fine_face) > 0 ? n[a] + 1 : 0;

    // Normal reconstruction from the two interior coarse layers at the fine
    // ghost centre, which sits 1/(2 r_n) coarse cells inside the coarse block:
    // weights (1 + 1/(2 r_n) - 1/2) on the first layer for the linear case.
    const double un = 1.0 / (2.0 * r[a]) + 0.5;  // in units of coarse cells from the interface
    const double w_second = un - 1.0;            // may be negative: one-sided extrapolation
    const double w_first = 1.0 - w_second;

    // Tangential sample position of fine cell t in patch-local coordinates;
    // patch index q holds coarse cell off+q, so index 0 is the surround cell
    // before the footprint and the continuous position is (t-1/2)/r + 1/2.
    auto tangential = [&](int axis, std::int64_t t, std::int64_t& lo, double& w_hi,
                          std::int64_t extent) {
        const double u = (t - 0.5) / r[axis] + 0.5;
        lo = static_cast<std::int64_t>(u);
        w_hi = u - static_cast<double>(lo);
        // Replace physical-ghost surround samples by interior extrapolation.
        const int low_face_bit = 1 << (2 * axis);
        const int high_face_bit = 1 << (2 * axis + 1);
        const bool low_is_hull = (e.coarse_hull & low_face_bit) != 0 && e.octant[axis] == 0;
        const bool high_is_hull =
            (e.coarse_hull & high_face_bit) != 0 && e.octant[axis] == r[axis] - 1;
        if (lo == 0 && low_is_hull) {
            // value(u) from cells 1,2: w_hi' = u - 1
            w_hi = u - 1.0;
            lo = 1;
        } else if (lo + 1 == extent - 1 && high_is_hull) {
            // value(u) from cells extent-3, extent-2
            w_hi = u - static_cast<double>(extent - 3);
            lo = extent - 3;
        }
    };

    auto patch_at = [&](int layer, std::int64_t q1, std::int64_t q2) {
        return patch.data[static_cast<std::size_t>((layer * patch.len2 + q2) * patch.len1 + q1)];
    };

    auto& f = fine.field(v);
    Int3 idx;
    idx.set(a, ghost);
    for (std::int64_t t2i = 1; t2i <= n[t2]; ++t2i)
        for (std::int64_t t1i = 1; t1i <= n[t1]; ++t1i) {
            idx.set(t1, t1i);
            idx.set(t2, t2i);
            double value = 0.0;
            if (interp == InterfaceInterpolation::Constant) {
                const std::int64_t q1 = (t1i - 1) / r[t1] + 1;
                const std::int64_t q2 = (t2i - 1) / r[t2] + 1;
                value = patch_at(0, q1, q2);
            } else {
                std::int64_t lo1, lo2;
                double wh1, wh2;
                tangential(t1, t1i, lo1, wh1, patch.len1);
                tangential(t2, t2i, lo2, wh2, patch.len2);
                for (int layer = 0; layer < 2; ++layer) {
                    const double wn = layer == 0 ? w_first : w_second;
                    if (wn == 0.0) continue;
                    value += wn * ((1.0 - wh1) * (1.0 - wh2) * patch_at(layer, lo1, lo2) +
                                   wh1 * (1.0 - wh2) * patch_at(layer, lo1 + 1, lo2) +
                                   (1.0 - wh1) * wh2 * patch_at(layer, lo1, lo2 + 1) +
                                   wh1 * wh2 * patch_at(layer, lo1 + 1, lo2 + 1));
                }
            }
            f[fine.index(idx.x, idx.y, idx.z)] = value;
        }
}

// ---------------------------------------------------------------------------
// Plan construction
// ---------------------------------------------------------------------------

//! Builds the exchange schedule for a (2:1 balanced) topology. Deterministic
//! for identical inputs. `partition_generation` stamps the plan for routing
//! staleness checks; structural entries do not depend on ownership.
inline ExchangePlan plan_exchange(const Topology& topo, const Int3& block_size,
                                  std::uint64_t partition_generation = 0) {
    topo.check_balance();
    ExchangePlan plan;
    plan.spec = topo.spec();
    plan.block_size = block_size;
    plan.sub_factors = topo.spec().r_sub;
    plan.partition_generation = partition_generation;
    plan.level_copy.resize(topo.max_depth() + 1);

    // Same-level copies per depth (all nodes, for multigrid level sweeps).
    for (int d = 0; d <= topo.max_depth(); ++d) {
        for (GridId id : topo.level_ids(d)) {
            for (Face f : kAllFaces) {
                if (auto nb = topo.level_neighbor(id, f)) {
                    plan.level_copy[d][face_axis(f)].push_back(CopyEntry{*nb, id, f});
                }
            }
        }
    }

    // Composite (leaf) coverage: same-level leaf copies, interface transfers,
    // physical faces.
    for (GridId id : topo.leaf_ids()) {
        const LGridNode& n = topo.node(id);
        for (Face f : kAllFaces) {
            const NeighborResult nb = topo.find_neighbor(id, f);
            switch (nb.kind) {
                case NeighborKind::SameLevel:
                    plan.composite_copy[face_axis(f)].push_back(CopyEntry{nb.ids[0], id, f});
                    break;
                case NeighborKind::DomainBoundary:
                    plan.physical.push_back(BoundaryFace{id, f});
                    break;
                case NeighborKind::FinerSet: {
                    // Generate both directions from the coarse side only.
                    const Int3 r = topo.spec().factors_below(n.depth);
                    for (int a = 0; a < 3; ++a)
                        if (a != face_axis(f) && block_size[a] % r[a] != 0)
                            throw InvalidArgument(
                                "plan_exchange: block size must be divisible by the refinement "
                                "factor on interface-tangential axes");
                    std::uint8_t hull = 0;
                    for (Face hf : kAllFaces)
                        if (on_hull(topo.spec(), n, hf)) hull |= std::uint8_t(1u << int(hf));
                    for (GridId fid : nb.ids) {
                        const LGridNode& fn = topo.node(fid);
                        const Int3 oct{fn.coord.x - n.coord.x * r.x, fn.coord.y - n.coord.y * r.y,
                                       fn.coord.z - n.coord.z * r.z};
                        plan.fine_to_coarse.push_back(F2CEntry{fid, id, f, oct});
                        plan.coarse_to_fine.push_back(C2FEntry{id, fid, opposite(f), oct, hull});
                    }
                    break;
                }
                case NeighborKind::Coarser:
                    break;  // generated from the coarse side
            }
        }
    }

    // Depth groups of the coarse-to-fine list (leaf iteration emits entries in
    // ascending coarse depth already).
    std::size_t begin = 0;
    while (begin < plan.coarse_to_fine.size()) {
        const int d = topo.node(plan.coarse_to_fine[begin].coarse).depth;
        std::size_t end = begin;
        while (end < plan.coarse_to_fine.size() &&
               topo.node(plan.coarse_to_fine[end].coarse).depth == d)
            ++end;
        plan.c2f_groups.emplace_back(begin, end);
        begin = end;
    }
    return plan;
}

//! Destination ghost-cell count of each entry kind (message volume bookkeeping).
inline std::uint64_t copy_cells(const ExchangePlan& p, const CopyEntry& e) {
    const int a = face_axis(e.dst_face);
    std::uint64_t v = 1;
    for (int b = 0; b < 3; ++b)
        if (b != a) v *= static_cast<std::uint64_t>(p.block_size[b]);
    return v;
}
inline std::uint64_t c2f_cells(const ExchangePlan& p, const C2FEntry& e) {
    const int a = face_axis(e.fine_face);
    std::uint64_t v = 1;
    for (int b = 0; b < 3; ++b)
        if (b != a) v *= static_cast<std::uint64_t>(p.block_size[b]);
    return v;
}
inline std::uint64_t f2c_cells(const ExchangePlan& p, const F2CEntry& e) {
    const int a = face_axis(e.coarse_face);
    std::uint64_t v = 1;
    for (int b = 0; b < 3; ++b)
        if (b != a) v *= static_cast<std::uint64_t>(p.block_size[b] / p.sub_factors[b]);
    return v;
}

// ---------------------------------------------------------------------------
// Sequential drivers (single address space). Worker runtimes re-run the same
// entries through the transport; see runtime.hpp.
// ---------------------------------------------------------------------------

//! Composite exchange over the leaf set: face sweeps, interface transfers,
//! then the extended corner sweep.
inline void exchange_composite(BlockStore& store, const ExchangePlan& plan, Var v,
                               InterfaceInterpolation interp = InterfaceInterpolation::Constant) {
    for (int axis = 0; axis < 3; ++axis)
        for (const CopyEntry& e : plan.composite_copy[axis])
            unpack_copy(store, e, v, pack_copy(store, e, v));
    for (const F2CEntry& e : plan.fine_to_coarse)
        unpack_f2c(store, e, v, plan.sub_factors, pack_f2c(store, e, v, plan.sub_factors));
    for (const auto& [begin, end] : plan.c2f_groups)
        for (std::size_t i = begin; i < end; ++i) {
            const C2FEntry& e = plan.coarse_to_fine[i];
            unpack_c2f(store, e, v, plan.sub_factors, pack_c2f(store, e, v, plan.sub_factors),
                       interp);
        }
    for (int axis = 1; axis < 3; ++axis)  // the x sweep carries no extension
        for (const CopyEntry& e : plan.composite_copy[axis])
            unpack_copy(store, e, v, pack_copy(store, e, v, true), true);
}

//! Same-level exchange of one hierarchy depth (multigrid level sweep). With no
//! interface entries involved a single extended sweep is already a pure
//! function of interior data.
inline void exchange_level(BlockStore& store, const ExchangePlan& plan, int depth, Var v) {
    for (int axis = 0; axis < 3; ++axis)
        for (const CopyEntry& e : plan.level_copy[depth][axis])
            unpack_copy(store, e, v, pack_copy(store, e, v, true), true);
}

//! Exchanges a list of fields (the benchmark unit is all nine per-cell
//! variables).
template <typename VarRange>
inline void exchange_all(BlockStore& store, const ExchangePlan& plan, const VarRange& vars,
                         InterfaceInterpolation interp = InterfaceInterpolation::Constant) {
    for (Var v : vars) exchange_composite(store, plan, v, interp);
}

// ---------------------------------------------------------------------------
// Plan audit
// ---------------------------------------------------------------------------

//! Verifies that every leaf face is covered by exactly one entry kind and that
//! coarse/fine interface entries pair up. Throws PlanMismatch on violation.
inline void audit_plan(const Topology& topo, const ExchangePlan& plan) {
    // kind codes: 0 none, 1 copy, 2 physical, 3 interface
    std::vector<std::array<int, 6>> cover(topo.node_count(), {0, 0, 0, 0, 0, 0});
    auto mark = [&](GridId g, Face f, int kind) {
        int& c = cover[g][static_cast<int>(f)];
        if (c != 0 && c != kind)
            throw PlanMismatch("plan audit: leaf face covered by mixed entry kinds");
        c = kind;
    };
    for (int axis = 0; axis < 3; ++axis)
        for (const CopyEntry& e : plan.composite_copy[axis]) {
            if (cover[e.dst][static_cast<int>(e.dst_face)] != 0)
                throw PlanMismatch("plan audit: duplicate same-level coverage");
            mark(e.dst, e.dst_face, 1);
        }
    for (const BoundaryFace& b : plan.physical) mark(b.grid, b.face, 2);
    for (const C2FEntry& e : plan.coarse_to_fine) mark(e.fine, e.fine_face, 3);
    for (const F2CEntry& e : plan.fine_to_coarse) mark(e.coarse, e.coarse_face, 3);

    for (GridId id : topo.leaf_ids())
        for (Face f : kAllFaces)
            if (cover[id][static_cast<int>(f)] == 0)
                throw PlanMismatch("plan audit: uncovered leaf face on grid " + std::to_string(id));

    // Interface symmetry: every coarse->fine entry has the matching reverse.
    if (plan.coarse_to_fine.size() != plan.fine_to_coarse.size())
        throw PlanMismatch("plan audit: interface entry counts differ");
    for (std::size_t i = 0; i < plan.coarse_to_fine.size(); ++i) {
        const C2FEntry& c = plan.coarse_to_fine[i];
        const F2CEntry& r = plan.fine_to_coarse[i];
        if (c.coarse != r.coarse || c.fine != r.fine || c.fine_face != opposite(r.coarse_face))
            throw PlanMismatch("plan audit: interface entries not paired");
    }
}

} // namespace blockflow

#endif // BLOCKFLOW_EXCHANGE_HPP_
