#ifndef BLOCKFLOW_TRANSFER_HPP_
#define BLOCKFLOW_TRANSFER_HPP_
//! \file transfer.hpp
//! \brief Inter-level data flow of the multigrid cycle: restriction of child
//!        block data into the parent octant (8-cell averages) and
//!        prolongation of parent data onto a child (constant injection or
//!        trilinear). Like the halo exchange, both run as pack/unpack pairs
//!        over flat buffers so the worker transport can ship them unchanged.
//!
//! Only the (2,2,2) subdivision is supported here; other factors are refused
//! explicitly.

#include <string>
#include <vector>

#include "blockflow/domain.hpp"
#include "blockflow/exchange.hpp"
#include "blockflow/types.hpp"

namespace blockflow {

inline void require_cubic_transfer(const Int3& r) {
    if (!(r == Int3{2, 2, 2}))
        throw InvalidArgument("restriction/prolongation requires (2,2,2) refinement, got (" +
                              std::to_string(r.x) + "," + std::to_string(r.y) + "," +
                              std::to_string(r.z) + ")");
}

//! Full-weighting restriction of one child block: each parent-octant cell
//! receives the mean of its eight covering child cells.
inline std::vector<double> pack_restrict(const BlockStore& store, GridId child, Var src,
                                         const Int3& r) {
    require_cubic_transfer(r);
    const DGrid& g = store.grid(child);
    const Int3 n = g.size();
    if (n.x % 2 || n.y % 2 || n.z % 2)
        throw InvalidArgument("restriction requires even block sizes");
    const auto& f = g.field(src);
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>((n.x / 2) * (n.y / 2) * (n.z / 2)));
    for (std::int64_t K = 0; K < n.z / 2; ++K)
        for (std::int64_t J = 0; J < n.y / 2; ++J)
            for (std::int64_t I = 0; I < n.x / 2; ++I) {
                double s = 0.0;
                for (std::int64_t dk = 1; dk <= 2; ++dk)
                    for (std::int64_t dj = 1; dj <= 2; ++dj)
                        for (std::int64_t di = 1; di <= 2; ++di)
                            s += f[g.index(2 * I + di, 2 * J + dj, 2 * K + dk)];
                buf.push_back(s * 0.125);
            }
    return buf;
}

//! Writes a restricted child buffer into the parent octant of `dst`.
inline void unpack_restrict(BlockStore& store, GridId parent, const Int3& octant, Var dst,
                            const std::vector<double>& buf) {
    DGrid& g = store.grid(parent);
    const Int3 n = g.size();
    const Int3 off{octant.x * (n.x / 2), octant.y * (n.y / 2), octant.z * (n.z / 2)};
    auto& f = g.field(dst);
    std::size_t p = 0;
    for (std::int64_t K = 0; K < n.z / 2; ++K)
        for (std::int64_t J = 0; J < n.y / 2; ++J)
            for (std::int64_t I = 0; I < n.x / 2; ++I)
                f[g.index(off.x + I + 1, off.y + J + 1, off.z + K + 1)] = buf[p++];
}

//! Parent-octant patch with a one-cell surround ring: (s/2+2)^3 values. The
//! ring may include parent ghost cells; callers exchange (and impose boundary
//! closures on) the parent level first.
inline std::vector<double> pack_prolong(const BlockStore& store, GridId parent, const Int3& octant,
                                        Var src, const Int3& r) {
    require_cubic_transfer(r);
    const DGrid& g = store.grid(parent);
    const Int3 n = g.size();
    const Int3 off{octant.x * (n.x / 2), octant.y * (n.y / 2), octant.z * (n.z / 2)};
    const auto& f = g.field(src);
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>((n.x / 2 + 2) * (n.y / 2 + 2) * (n.z / 2 + 2)));
    for (std::int64_t K = 0; K <= n.z / 2 + 1; ++K)
        for (std::int64_t J = 0; J <= n.y / 2 + 1; ++J)
            for (std::int64_t I = 0; I <= n.x / 2 + 1; ++I)
                buf.push_back(f[g.index(off.x + I, off.y + J, off.z + K)]);
    return buf;
}

//! Adds the prolonged parent patch into the child's `dst` interior. Constant
//! injection copies the covering parent cell; trilinear reconstructs at each
//! child centre with the (3/4, 1/4) weights.
inline void unpack_prolong(BlockStore& store, GridId child, Var dst,
                           const std::vector<double>& buf, InterfaceInterpolation interp) {
    DGrid& g = store.grid(child);
    const Int3 n = g.size();
    const std::int64_t l1 = n.x / 2 + 2, l2 = n.y / 2 + 2, l3 = n.z / 2 + 2;
    auto patch = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        return buf[static_cast<std::size_t>((k * l2 + j) * l1 + i)];
    };
    auto& f = g.field(dst);

    if (interp == InterfaceInterpolation::Constant) {
        for (std::int64_t k = 1; k <= n.z; ++k)
            for (std::int64_t j = 1; j <= n.y; ++j)
                for (std::int64_t i = 1; i <= n.x; ++i)
                    f[g.index(i, j, k)] += patch((i + 1) / 2, (j + 1) / 2, (k + 1) / 2);
        return;
    }

    // Child cell t samples the parent field at patch coordinate
    // (t - 1/2)/2 + 1/2; the bracketing pair carries weights (3/4, 1/4).
    auto split = [](std::int64_t t, std::int64_t& lo, double& w_hi) {
        const double u = (t - 0.5) * 0.5 + 0.5;
        lo = static_cast<std::int64_t>(u);
        w_hi = u - static_cast<double>(lo);
    };
    for (std::int64_t k = 1; k <= n.z; ++k) {
        std::int64_t kz;
        double wz;
        split(k, kz, wz);
        for (std::int64_t j = 1; j <= n.y; ++j) {
            std::int64_t jy;
            double wy;
            split(j, jy, wy);
            for (std::int64_t i = 1; i <= n.x; ++i) {
                std::int64_t ix;
                double wx;
                split(i, ix, wx);
                double v = 0.0;
                for (int dk = 0; dk < 2; ++dk)
                    for (int dj = 0; dj < 2; ++dj)
                        for (int di = 0; di < 2; ++di)
                            v += (di ? wx : 1 - wx) * (dj ? wy : 1 - wy) * (dk ? wz : 1 - wz) *
                                 patch(ix + di, jy + dj, kz + dk);
                f[g.index(i, j, k)] += v;
            }
        }
    }
}

} // namespace blockflow

#endif // BLOCKFLOW_TRANSFER_HPP_
