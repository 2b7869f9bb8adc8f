#ifndef BLOCKFLOW_BOUNDARY_HPP_
#define BLOCKFLOW_BOUNDARY_HPP_
//! \file boundary.hpp
//! \brief Physical boundary conditions on the domain hull and obstacle
//!        surfaces. Hull conditions are imposed through ghost cells (second
//!        order Dirichlet via reflection, zero-gradient via copy); obstacle
//!        cells are voxelised and held at their boundary values.
//!
//! Ghost slabs are written over the full padded tangential extent so edge and
//! corner ghosts are always defined; faces are processed in fixed -x..+z
//! order after the halo exchange, so hull edges hold the last writer's
//! mirror. Only boundary imposition writes physical ghosts; interface ghosts
//! belong to the halo exchange.

#include <array>
#include <functional>

#include "blockflow/domain.hpp"
#include "blockflow/poisson.hpp"
#include "blockflow/types.hpp"

namespace blockflow {

enum class VelocityBCKind { NoSlip, Inflow, Outflow, Slip };
enum class PressureBCKind { ZeroGradient, Fixed };
enum class TemperatureBCKind { Fixed, Adiabatic, Flux };

struct FaceBC {
    VelocityBCKind velocity = VelocityBCKind::NoSlip;
    PressureBCKind pressure = PressureBCKind::ZeroGradient;
    double pressure_value = 0.0;        // Pa, for Fixed
    TemperatureBCKind temperature = TemperatureBCKind::Adiabatic;
    double temperature_value = 0.0;     // K for Fixed, outward K/m for Flux
};

//! Boundary values on solid (voxelised) cells.
struct ObstacleBC {
    bool fixed_temperature = false;
    double temperature = 293.15;
};

struct BoundarySpec {
    std::array<FaceBC, 6> face;
    std::function<Real3(const Real3&)> inflow_profile;  // velocity at inflow face positions
    ObstacleBC obstacle;

    //! The projection step corrects exactly the faces the pressure operator
    //! couples, so prescribed-velocity faces need zero-gradient pressure and
    //! outflow needs a fixed pressure level.
    void validate() const {
        bool any_inflow = false;
        for (Face f : kAllFaces) {
            const FaceBC& b = face[static_cast<int>(f)];
            const bool velocity_fixed = b.velocity != VelocityBCKind::Outflow;
            if (velocity_fixed && b.pressure != PressureBCKind::ZeroGradient)
                throw InvalidArgument(std::string("boundary ") + face_name(f) +
                                      ": prescribed-velocity faces require zero-gradient pressure");
            if (!velocity_fixed && b.pressure != PressureBCKind::Fixed)
                throw InvalidArgument(std::string("boundary ") + face_name(f) +
                                      ": outflow requires a fixed pressure");
            any_inflow |= b.velocity == VelocityBCKind::Inflow;
        }
        if (any_inflow && !inflow_profile)
            throw InvalidArgument("boundary: inflow faces need an inflow profile");
    }

    PoissonBC pressure_poisson_bc() const {
        PoissonBC bc;
        for (Face f : kAllFaces) {
            const FaceBC& b = face[static_cast<int>(f)];
            bc.kind[static_cast<int>(f)] = b.pressure == PressureBCKind::Fixed
                                               ? PoissonBCKind::Dirichlet
                                               : PoissonBCKind::Neumann;
        }
        bool any_fixed = false;
        for (auto k : bc.kind) any_fixed |= k == PoissonBCKind::Dirichlet;
        if (any_fixed) {
            auto faces = face;
            bc.value = [faces](Face f, const Real3&) {
                return faces[static_cast<int>(f)].pressure_value;
            };
        }
        return bc;
    }

    //! Closed-box convenience: no-slip walls, adiabatic, zero-gradient pressure.
    static BoundarySpec closed_box() { return BoundarySpec{}; }
};

namespace detail {

template <typename Fn>
inline void for_face_slab(const DGrid& g, Face f, Fn&& fn) {
    const Int3 s = g.size();
    const int a = face_axis(f);
    const int t1 = a == 0 ? 1 : 0;
    const int t2 = a == 2 ? 1 : 2;
    const std::int64_t ghost = face_sign(f) < 0 ? 0 : s[a] + 1;
    const std::int64_t inner = face_sign(f) < 0 ? 1 : s[a];
    for (std::int64_t q2 = 0; q2 <= s[t2] + 1; ++q2)
        for (std::int64_t q1 = 0; q1 <= s[t1] + 1; ++q1) {
            Int3 gi, ii;
            gi.set(a, ghost);
            ii.set(a, inner);
            gi.set(t1, q1);
            ii.set(t1, q1);
            gi.set(t2, q2);
            ii.set(t2, q2);
            fn(gi, ii);
        }
}

} // namespace detail

//! Imposes the hull velocity conditions on one block's ghost slabs for the
//! three components stored in `vars` (either the velocities or the
//! intermediate velocities, which obey the same conditions).
inline void impose_velocity_ghosts(const Topology& topo, BlockStore& store, GridId id,
                                   const BoundarySpec& bc, const std::array<Var, 3>& vars) {
    const LGridNode& n = topo.node(id);
    DGrid& g = store.grid(id);
    for (Face f : kAllFaces) {
        if (!on_hull(topo.spec(), n, f)) continue;
        const FaceBC& fb = bc.face[static_cast<int>(f)];
        const int a = face_axis(f);
        std::array<std::vector<double>*, 3> u = {&g.field(vars[0]), &g.field(vars[1]),
                                                 &g.field(vars[2])};
        detail::for_face_slab(g, f, [&](const Int3& gi, const Int3& ii) {
            const std::size_t gidx = g.index(gi.x, gi.y, gi.z);
            const std::size_t iidx = g.index(ii.x, ii.y, ii.z);
            switch (fb.velocity) {
                case VelocityBCKind::NoSlip:
                    for (int c = 0; c < 3; ++c) (*u[c])[gidx] = -(*u[c])[iidx];
                    break;
                case VelocityBCKind::Slip:
                    for (int c = 0; c < 3; ++c)
                        (*u[c])[gidx] = c == a ? -(*u[c])[iidx] : (*u[c])[iidx];
                    break;
                case VelocityBCKind::Outflow:
                    for (int c = 0; c < 3; ++c) (*u[c])[gidx] = (*u[c])[iidx];
                    break;
                case VelocityBCKind::Inflow: {
                    Real3 pos = g.cell_center(ii.x, ii.y, ii.z);
                    pos.set(a, pos[a] + 0.5 * face_sign(f) * g.spacing()[a]);
                    const Real3 prof = bc.inflow_profile(pos);
                    for (int c = 0; c < 3; ++c) (*u[c])[gidx] = 2.0 * prof[c] - (*u[c])[iidx];
                    break;
                }
            }
        });
    }
}

inline void impose_pressure_ghosts(const Topology& topo, BlockStore& store, GridId id,
                                   const BoundarySpec& bc, Var pvar = Var::P) {
    const LGridNode& n = topo.node(id);
    DGrid& g = store.grid(id);
    auto& p = g.field(pvar);
    for (Face f : kAllFaces) {
        if (!on_hull(topo.spec(), n, f)) continue;
        const FaceBC& fb = bc.face[static_cast<int>(f)];
        detail::for_face_slab(g, f, [&](const Int3& gi, const Int3& ii) {
            const double v_in = p[g.index(ii.x, ii.y, ii.z)];
            p[g.index(gi.x, gi.y, gi.z)] = fb.pressure == PressureBCKind::Fixed
                                               ? 2.0 * fb.pressure_value - v_in
                                               : v_in;
        });
    }
}

inline void impose_temperature_ghosts(const Topology& topo, BlockStore& store, GridId id,
                                      const BoundarySpec& bc, Var tvar = Var::T) {
    const LGridNode& n = topo.node(id);
    DGrid& g = store.grid(id);
    auto& t = g.field(tvar);
    for (Face f : kAllFaces) {
        if (!on_hull(topo.spec(), n, f)) continue;
        const FaceBC& fb = bc.face[static_cast<int>(f)];
        const double da = g.spacing()[face_axis(f)];
        detail::for_face_slab(g, f, [&](const Int3& gi, const Int3& ii) {
            const double v_in = t[g.index(ii.x, ii.y, ii.z)];
            double v = v_in;
            if (fb.temperature == TemperatureBCKind::Fixed)
                v = 2.0 * fb.temperature_value - v_in;
            else if (fb.temperature == TemperatureBCKind::Flux)
                v = v_in + fb.temperature_value * da;
            t[g.index(gi.x, gi.y, gi.z)] = v;
        });
    }
}

//! Holds solid cells at their boundary values: zero velocity, the obstacle
//! temperature when one is prescribed. Halo cells included (masks cover them).
inline void impose_obstacle_cells(BlockStore& store, GridId id, const BoundarySpec& bc) {
    if (!store.has_mask(id)) return;
    DGrid& g = store.grid(id);
    const auto& mask = store.mask(id);
    auto& u1 = g.field(Var::U1);
    auto& u2 = g.field(Var::U2);
    auto& u3 = g.field(Var::U3);
    auto& us1 = g.field(Var::U1Star);
    auto& us2 = g.field(Var::U2Star);
    auto& us3 = g.field(Var::U3Star);
    auto& t = g.field(Var::T);
    for (std::size_t c = 0; c < mask.size(); ++c) {
        if (!mask[c]) continue;
        u1[c] = u2[c] = u3[c] = 0.0;
        us1[c] = us2[c] = us3[c] = 0.0;
        if (bc.obstacle.fixed_temperature) t[c] = bc.obstacle.temperature;
    }
}

} // namespace blockflow

#endif // BLOCKFLOW_BOUNDARY_HPP_
