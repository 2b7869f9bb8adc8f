#ifndef BLOCKFLOW_NAVIER_STOKES_HPP_
#define BLOCKFLOW_NAVIER_STOKES_HPP_
//! \file navier_stokes.hpp
//! \brief Fractional-step incompressible Navier-Stokes update: explicit Euler
//!        or Adams-Bashforth-2 for the convective (first-order upwind, flux
//!        form) and diffusive (central) terms, optional Boussinesq buoyancy,
//!        pressure projection via the multigrid Poisson solver, and
//!        stability-bounded time stepping.
//!
//! Cell velocities are collocated; the projection additionally maintains
//! face-normal velocities (linear interpolation of the cell values plus the
//! prescribed boundary fluxes). The Poisson right-hand side is the face
//! divergence of the intermediate field, and the correction updates both the
//! cell velocities (central pressure gradient) and the face velocities
//! (compact face gradient). Because the face divergence of the face gradient
//! is exactly the solver's seven-point operator, the corrected face field is
//! divergence-free down to the solver residual; the cell field carries the
//! usual O(h^2) collocated remainder, reported separately.

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <vector>

#include "blockflow/boundary.hpp"
#include "blockflow/exec.hpp"
#include "blockflow/poisson.hpp"

namespace blockflow {

enum class TimeScheme { ExplicitEuler, AdamsBashforth2 };

struct TimeIntegrator {
    TimeScheme scheme = TimeScheme::ExplicitEuler;
    double cfl_safety = 0.5;  // in (0, 1]
    double dt_max = 1.0;      // returned when nothing bounds the step
    double fixed_dt = 0.0;    // > 0 overrides the adaptive step

    void validate() const {
        if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
            throw InvalidArgument("integrator: cfl_safety must be in (0, 1]");
        if (!(dt_max > 0.0)) throw InvalidArgument("integrator: dt_max must be > 0");
        if (fixed_dt < 0.0) throw InvalidArgument("integrator: fixed_dt must be >= 0");
    }
};

//! Wall-clock breakdown of one time step plus the step's diagnostics.
struct StepTimings {
    int step_index = 0;
    double dt = 0.0;
    double setup_seconds = 0.0;  // stability-bound evaluation
    double exchange_seconds = 0.0;
    double advection_seconds = 0.0;
    double rhs_seconds = 0.0;
    double poisson_seconds = 0.0;
    double correction_seconds = 0.0;
    double total_seconds = 0.0;
    double poisson_share = 0.0;
    double face_divergence_rms = 0.0;  // projected face field
    double cell_divergence_rms = 0.0;  // central-difference cell field
    SolveReport poisson;
};

namespace detail {

inline bool solid_at(const BlockStore& store, GridId id, const DGrid& g, std::int64_t i,
                     std::int64_t j, std::int64_t k) {
    return store.has_mask(id) && store.mask(id)[g.index(i, j, k)] != 0;
}

//! Face status along one axis: interior faces are open unless a neighbour
//! cell is solid; hull faces are prescribed unless the condition is outflow.
enum class FaceStatus { Open, Prescribed };

struct BlockFaces {
    std::uint8_t hull = 0;
    const BoundarySpec* bc = nullptr;

    FaceStatus hull_status(Face f) const {
        const VelocityBCKind k = bc->face[static_cast<int>(f)].velocity;
        return k == VelocityBCKind::Outflow ? FaceStatus::Open : FaceStatus::Prescribed;
    }
};

//! Rebuilds the face-normal velocities of one block from cell data `vars`
//! (with current ghosts): linear interpolation on open faces, prescribed
//! values on velocity-Dirichlet hull faces, zero on solid faces.
inline void build_face_velocities(const Topology& topo, BlockStore& store, GridId id,
                                  const BoundarySpec& bc, const std::array<Var, 3>& vars) {
    const LGridNode& node = topo.node(id);
    DGrid& g = store.grid(id);
    const Int3 n = g.size();
    for (int a = 0; a < 3; ++a) {
        const auto& u = g.field(vars[a]);
        auto& uf = g.field(face_var(a));
        const int t1 = a == 0 ? 1 : 0;
        const int t2 = a == 2 ? 1 : 2;
        const bool low_hull = on_hull(topo.spec(), node, make_face(a, -1));
        const bool high_hull = on_hull(topo.spec(), node, make_face(a, +1));
        for (std::int64_t q2 = 1; q2 <= n[t2]; ++q2)
            for (std::int64_t q1 = 1; q1 <= n[t1]; ++q1)
                for (std::int64_t fi = 1; fi <= n[a] + 1; ++fi) {
                    Int3 L, R;
                    L.set(a, fi - 1);
                    R.set(a, fi);
                    L.set(t1, q1);
                    R.set(t1, q1);
                    L.set(t2, q2);
                    R.set(t2, q2);
                    double value = 0.5 * (u[g.index(L.x, L.y, L.z)] + u[g.index(R.x, R.y, R.z)]);
                    if (solid_at(store, id, g, L.x, L.y, L.z) ||
                        solid_at(store, id, g, R.x, R.y, R.z)) {
                        value = 0.0;
                    } else if ((fi == 1 && low_hull) || (fi == n[a] + 1 && high_hull)) {
                        const Face f = make_face(a, fi == 1 ? -1 : +1);
                        const FaceBC& fb = bc.face[static_cast<int>(f)];
                        if (fb.velocity == VelocityBCKind::NoSlip ||
                            fb.velocity == VelocityBCKind::Slip) {
                            value = 0.0;
                        } else if (fb.velocity == VelocityBCKind::Inflow) {
                            Real3 pos = g.cell_center(R.x, R.y, R.z);
                            pos.set(a, pos[a] - 0.5 * g.spacing()[a]);
                            value = bc.inflow_profile(pos)[a];
                        }
                        // Outflow: keep the interpolated value (ghost copy
                        // makes it the interior value).
                    }
                    uf[g.index(R.x, R.y, R.z)] = value;
                }
    }
}

//! Upwind/central transport rate of one cell variable: -div(uf * phi) +
//! diffusivity * laplace(phi). Solid-adjacent diffusive faces are dropped
//! when `insulate_solid` (adiabatic obstacles).
inline double transport_rate(const BlockStore& store, GridId id, const DGrid& g,
                             const std::vector<double>& phi, std::int64_t i, std::int64_t j,
                             std::int64_t k, double diffusivity, bool insulate_solid) {
    const Int3 n = g.size();
    double conv = 0.0, diff = 0.0;
    for (int a = 0; a < 3; ++a) {
        const auto& uf = g.field(face_var(a));
        const double da = g.spacing()[a];
        Int3 lo, hi;
        lo = {i, j, k};
        hi = {i, j, k};
        lo.set(a, (a == 0 ? i : a == 1 ? j : k) - 1);
        hi.set(a, (a == 0 ? i : a == 1 ? j : k) + 1);
        const std::size_t c = g.index(i, j, k);
        const std::size_t cm = g.index(lo.x, lo.y, lo.z);
        const std::size_t cp = g.index(hi.x, hi.y, hi.z);
        // Face indices along a: the face below the cell shares its index.
        const double uf_lo = uf[c];
        const double uf_hi = uf[cp];
        const double phi_lo = uf_lo >= 0.0 ? phi[cm] : phi[c];
        const double phi_hi = uf_hi >= 0.0 ? phi[c] : phi[cp];
        conv += (uf_hi * phi_hi - uf_lo * phi_lo) / da;

        const bool lo_solid = solid_at(store, id, g, lo.x, lo.y, lo.z);
        const bool hi_solid = solid_at(store, id, g, hi.x, hi.y, hi.z);
        double lap = 0.0;
        if (!(insulate_solid && lo_solid)) lap += phi[cm] - phi[c];
        if (!(insulate_solid && hi_solid)) lap += phi[cp] - phi[c];
        diff += diffusivity * lap / (da * da);
    }
    return -conv + diff;
}

} // namespace detail

//! Time-stepping driver for one flow problem over an execution context.
class FlowSolver {
  public:
    FlowSolver(Exec& ex, FluidProperties props, BoundarySpec bc, TimeIntegrator integrator,
               MGConfig mg, bool thermal = false,
               InterfaceInterpolation interp = InterfaceInterpolation::Trilinear)
        : ex_(ex),
          props_(props),
          bc_(std::move(bc)),
          integrator_(integrator),
          mg_(mg),
          thermal_(thermal),
          interp_(interp),
          poisson_(ex, mg, bc_.pressure_poisson_bc()) {
        props_.validate();
        bc_.validate();
        integrator_.validate();
    }

    const FluidProperties& properties() const { return props_; }
    const BoundarySpec& boundary() const { return bc_; }
    int steps_taken() const { return step_count_; }

    //! Applies initial fields, imposes ghosts and builds the face velocities.
    void initialize(const std::function<double(const Real3&)>& u1,
                    const std::function<double(const Real3&)>& u2,
                    const std::function<double(const Real3&)>& u3,
                    const std::function<double(const Real3&)>& temperature = nullptr) {
        for (GridId id : ex_.my_leaves()) {
            DGrid& g = ex_.store().grid(id);
            g.fill(Var::U1, u1);
            g.fill(Var::U2, u2);
            g.fill(Var::U3, u3);
            if (temperature) g.fill(Var::T, temperature);
            impose_obstacle_cells(ex_.store(), id, bc_);
        }
        exchange_velocity({Var::U1, Var::U2, Var::U3});
        for (GridId id : ex_.my_leaves()) {
            impose_velocity_ghosts(ex_.topo(), ex_.store(), id, bc_, {Var::U1, Var::U2, Var::U3});
            if (thermal_) impose_temperature_ghosts(ex_.topo(), ex_.store(), id, bc_);
            detail::build_face_velocities(ex_.topo(), ex_.store(), id, bc_,
                                          {Var::U1, Var::U2, Var::U3});
        }
        step_count_ = 0;
        prev_dt_ = 0.0;
    }

    //! Stability bound: cfl_safety times the smallest of the convective,
    //! viscous and thermal explicit limits over all fluid cells.
    double stable_dt() {
        BlockPartials inv_limits;  // max of 1/dt_limit
        const double nu = props_.kinematic_viscosity();
        const double alpha = thermal_ ? props_.thermal_diffusivity : 0.0;
        for (GridId id : ex_.my_leaves()) {
            const DGrid& g = ex_.store().grid(id);
            const Real3 d = g.spacing();
            const double inv_d2 = 1.0 / (d.x * d.x) + 1.0 / (d.y * d.y) + 1.0 / (d.z * d.z);
            double inv_limit = 2.0 * nu * inv_d2;  // viscous limit rho/(2 mu) ...
            inv_limit = std::max(inv_limit, 2.0 * alpha * inv_d2);
            const auto& u1 = g.field(Var::U1);
            const auto& u2 = g.field(Var::U2);
            const auto& u3 = g.field(Var::U3);
            const Int3 n = g.size();
            for (std::int64_t k = 1; k <= n.z; ++k)
                for (std::int64_t j = 1; j <= n.y; ++j)
                    for (std::int64_t i = 1; i <= n.x; ++i) {
                        if (detail::solid_at(ex_.store(), id, g, i, j, k)) continue;
                        const std::size_t c = g.index(i, j, k);
                        inv_limit = std::max(inv_limit, std::abs(u1[c]) / d.x);
                        inv_limit = std::max(inv_limit, std::abs(u2[c]) / d.y);
                        inv_limit = std::max(inv_limit, std::abs(u3[c]) / d.z);
                    }
            inv_limits.emplace_back(id, inv_limit);
        }
        const double inv = ex_.reduce_max(inv_limits);
        const double dt = inv > 0.0 ? integrator_.cfl_safety / inv : integrator_.dt_max;
        return std::min(dt, integrator_.dt_max);
    }

    //! One full fractional-step update. The Poisson report and divergence
    //! audits ride along in the returned timings.
    StepTimings step() {
        StepTimings st;
        st.step_index = ++step_count_;
        const auto t_total = std::chrono::steady_clock::now();

        auto t0 = std::chrono::steady_clock::now();
        const double dt = integrator_.fixed_dt > 0.0 ? integrator_.fixed_dt : stable_dt();
        st.dt = dt;
        st.setup_seconds = seconds_since(t0);

        // Communication: ghosts of the transported fields.
        t0 = std::chrono::steady_clock::now();
        exchange_velocity({Var::U1, Var::U2, Var::U3});
        if (thermal_) ex_.exchange_composite(Var::T, interp_);
        for (GridId id : ex_.my_leaves()) {
            impose_velocity_ghosts(ex_.topo(), ex_.store(), id, bc_, {Var::U1, Var::U2, Var::U3});
            if (thermal_) impose_temperature_ghosts(ex_.topo(), ex_.store(), id, bc_);
            impose_obstacle_cells(ex_.store(), id, bc_);
        }
        st.exchange_seconds += seconds_since(t0);

        // Intermediate velocity and temperature transport.
        t0 = std::chrono::steady_clock::now();
        const bool bootstrap = integrator_.scheme == TimeScheme::ExplicitEuler || step_count_ == 1;
        const double ratio = bootstrap ? 0.0 : dt / prev_dt_;
        const double c_now = bootstrap ? 1.0 : 1.0 + 0.5 * ratio;
        const double c_prev = bootstrap ? 0.0 : 0.5 * ratio;
        for (GridId id : ex_.my_leaves()) advect_block(id, dt, c_now, c_prev);
        if (thermal_)
            for (GridId id : ex_.my_leaves()) temperature_block(id, dt, c_now, c_prev);
        for (GridId id : ex_.my_leaves()) impose_obstacle_cells(ex_.store(), id, bc_);
        st.advection_seconds = seconds_since(t0);

        // Ghosts of the intermediate field, then its face divergence.
        t0 = std::chrono::steady_clock::now();
        exchange_velocity({Var::U1Star, Var::U2Star, Var::U3Star});
        for (GridId id : ex_.my_leaves())
            impose_velocity_ghosts(ex_.topo(), ex_.store(), id, bc_,
                                   {Var::U1Star, Var::U2Star, Var::U3Star});
        st.exchange_seconds += seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        for (GridId id : ex_.my_leaves()) {
            detail::build_face_velocities(ex_.topo(), ex_.store(), id, bc_,
                                          {Var::U1Star, Var::U2Star, Var::U3Star});
            pressure_rhs_block(id, dt);
        }
        st.rhs_seconds = seconds_since(t0);

        // Pressure Poisson solve (warm-started from the previous pressure).
        t0 = std::chrono::steady_clock::now();
        st.poisson = poisson_.solve(Var::P, Var::Rhs);
        st.poisson_seconds = seconds_since(t0);

        // Projection: correct cells and faces, audit the divergence.
        t0 = std::chrono::steady_clock::now();
        ex_.exchange_composite(Var::P, interp_);
        for (GridId id : ex_.my_leaves())
            impose_pressure_ghosts(ex_.topo(), ex_.store(), id, bc_);
        for (GridId id : ex_.my_leaves()) correct_block(id, dt);
        for (GridId id : ex_.my_leaves()) impose_obstacle_cells(ex_.store(), id, bc_);
        st.face_divergence_rms = face_divergence_rms();
        exchange_velocity({Var::U1, Var::U2, Var::U3});
        for (GridId id : ex_.my_leaves())
            impose_velocity_ghosts(ex_.topo(), ex_.store(), id, bc_, {Var::U1, Var::U2, Var::U3});
        st.cell_divergence_rms = cell_divergence_rms();
        st.correction_seconds = seconds_since(t0);

        prev_dt_ = dt;
        st.total_seconds = seconds_since(t_total);
        st.poisson_share = st.total_seconds > 0 ? st.poisson_seconds / st.total_seconds : 0.0;
        return st;
    }

    //! RMS of the face divergence of the projected face velocities: the
    //! discrete continuity defect, bounded by (dt/rho) times the Poisson
    //! residual by construction.
    double face_divergence_rms() {
        BlockPartials sums, counts;
        for (GridId id : ex_.my_leaves()) {
            const DGrid& g = ex_.store().grid(id);
            const Int3 n = g.size();
            double s2 = 0.0;
            std::int64_t cnt = 0;
            for (std::int64_t k = 1; k <= n.z; ++k)
                for (std::int64_t j = 1; j <= n.y; ++j)
                    for (std::int64_t i = 1; i <= n.x; ++i) {
                        if (detail::solid_at(ex_.store(), id, g, i, j, k)) continue;
                        const double d = face_divergence(g, i, j, k);
                        s2 += d * d;
                        ++cnt;
                    }
            sums.emplace_back(id, s2);
            counts.emplace_back(id, static_cast<double>(cnt));
        }
        const double total = ex_.reduce_sum(sums);
        const double count = ex_.reduce_sum(counts);
        return count > 0 ? std::sqrt(total / count) : 0.0;
    }

    //! RMS of the central-difference divergence of the cell velocities
    //! (requires current ghosts): the collocated O(h^2) remainder.
    double cell_divergence_rms() {
        BlockPartials sums, counts;
        for (GridId id : ex_.my_leaves()) {
            const DGrid& g = ex_.store().grid(id);
            const Int3 n = g.size();
            const auto& u1 = g.field(Var::U1);
            const auto& u2 = g.field(Var::U2);
            const auto& u3 = g.field(Var::U3);
            const Real3 d = g.spacing();
            double s2 = 0.0;
            std::int64_t cnt = 0;
            for (std::int64_t k = 1; k <= n.z; ++k)
                for (std::int64_t j = 1; j <= n.y; ++j)
                    for (std::int64_t i = 1; i <= n.x; ++i) {
                        if (detail::solid_at(ex_.store(), id, g, i, j, k)) continue;
                        const double div =
                            (u1[g.index(i + 1, j, k)] - u1[g.index(i - 1, j, k)]) / (2 * d.x) +
                            (u2[g.index(i, j + 1, k)] - u2[g.index(i, j - 1, k)]) / (2 * d.y) +
                            (u3[g.index(i, j, k + 1)] - u3[g.index(i, j, k - 1)]) / (2 * d.z);
                        s2 += div * div;
                        ++cnt;
                    }
            sums.emplace_back(id, s2);
            counts.emplace_back(id, static_cast<double>(cnt));
        }
        const double total = ex_.reduce_sum(sums);
        const double count = ex_.reduce_sum(counts);
        return count > 0 ? std::sqrt(total / count) : 0.0;
    }

    double face_divergence(const DGrid& g, std::int64_t i, std::int64_t j, std::int64_t k) const {
        const Real3 d = g.spacing();
        return (g.field(Var::FaceU1)[g.index(i + 1, j, k)] -
                g.field(Var::FaceU1)[g.index(i, j, k)]) /
                   d.x +
               (g.field(Var::FaceU2)[g.index(i, j + 1, k)] -
                g.field(Var::FaceU2)[g.index(i, j, k)]) /
                   d.y +
               (g.field(Var::FaceU3)[g.index(i, j, k + 1)] -
                g.field(Var::FaceU3)[g.index(i, j, k)]) /
                   d.z;
    }

  private:
    static double seconds_since(const std::chrono::steady_clock::time_point& t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    void exchange_velocity(const std::array<Var, 3>& vars) {
        for (Var v : vars) ex_.exchange_composite(v, interp_);
    }

    //! u* = u + dt (c_now R - c_prev R_prev), R = -conv + nu lap + b/rho.
    void advect_block(GridId id, double dt, double c_now, double c_prev) {
        DGrid& g = ex_.store().grid(id);
        const Int3 n = g.size();
        const double nu = props_.kinematic_viscosity();
        const std::array<Var, 3> uvars{Var::U1, Var::U2, Var::U3};
        const std::array<Var, 3> svars{Var::U1Star, Var::U2Star, Var::U3Star};
        const std::array<Var, 3> hvars{Var::Hist1, Var::Hist2, Var::Hist3};
        const auto& temp = g.field(Var::T);
        for (int comp = 0; comp < 3; ++comp) {
            const auto& u = g.field(uvars[comp]);
            auto& star = g.field(svars[comp]);
            auto& hist = g.field(hvars[comp]);
            const double grav = props_.gravity[comp];
            for (std::int64_t k = 1; k <= n.z; ++k)
                for (std::int64_t j = 1; j <= n.y; ++j)
                    for (std::int64_t i = 1; i <= n.x; ++i) {
                        const std::size_t c = g.index(i, j, k);
                        if (detail::solid_at(ex_.store(), id, g, i, j, k)) {
                            star[c] = 0.0;
                            hist[c] = 0.0;
                            continue;
                        }
                        double rate =
                            detail::transport_rate(ex_.store(), id, g, u, i, j, k, nu, false);
                        if (thermal_ && grav != 0.0)
                            rate -= grav * props_.beta * (temp[c] - props_.t_ref);
                        star[c] = u[c] + dt * (c_now * rate - c_prev * hist[c]);
                        hist[c] = rate;
                    }
        }
    }

    //! Explicit temperature transport with the same integrator combination.
    void temperature_block(GridId id, double dt, double c_now, double c_prev) {
        DGrid& g = ex_.store().grid(id);
        const Int3 n = g.size();
        const auto& t = g.field(Var::T);
        auto& tmp = g.field(Var::MgTmp);
        auto& hist = g.field(Var::HistT);
        const bool insulate = !bc_.obstacle.fixed_temperature;
        for (std::int64_t k = 1; k <= n.z; ++k)
            for (std::int64_t j = 1; j <= n.y; ++j)
                for (std::int64_t i = 1; i <= n.x; ++i) {
                    const std::size_t c = g.index(i, j, k);
                    if (detail::solid_at(ex_.store(), id, g, i, j, k)) {
                        tmp[c] = t[c];
                        hist[c] = 0.0;
                        continue;
                    }
                    const double rate = detail::transport_rate(
                        ex_.store(), id, g, t, i, j, k, props_.thermal_diffusivity, insulate);
                    tmp[c] = t[c] + dt * (c_now * rate - c_prev * hist[c]);
                    hist[c] = rate;
                }
        auto& tf = g.field(Var::T);
        for (std::int64_t k = 1; k <= n.z; ++k)
            for (std::int64_t j = 1; j <= n.y; ++j)
                for (std::int64_t i = 1; i <= n.x; ++i) {
                    const std::size_t c = g.index(i, j, k);
                    tf[c] = tmp[c];
                }
    }

    //! rhs = (rho/dt) * face-divergence of the intermediate face velocities.
    void pressure_rhs_block(GridId id, double dt) {
        DGrid& g = ex_.store().grid(id);
        const Int3 n = g.size();
        auto& rhs = g.field(Var::Rhs);
        const double scale = props_.rho_inf / dt;
        for (std::int64_t k = 1; k <= n.z; ++k)
            for (std::int64_t j = 1; j <= n.y; ++j)
                for (std::int64_t i = 1; i <= n.x; ++i) {
                    const std::size_t c = g.index(i, j, k);
                    rhs[c] = detail::solid_at(ex_.store(), id, g, i, j, k)
                                 ? 0.0
                                 : scale * face_divergence(g, i, j, k);
                }
    }

    //! u = u* - (dt/rho) grad p on cells (average of the two face gradients
    //! per axis, closed faces contributing zero) and on open faces.
    void correct_block(GridId id, double dt) {
        const Topology& topo = ex_.topo();
        const LGridNode& node = topo.node(id);
        DGrid& g = ex_.store().grid(id);
        const Int3 n = g.size();
        const auto& p = g.field(Var::P);
        const double factor = dt / props_.rho_inf;

        std::array<bool, 6> hull{};
        for (Face f : kAllFaces) hull[static_cast<int>(f)] = on_hull(topo.spec(), node, f);

        // Face gradient along axis a at face index fi (between cells fi-1, fi),
        // or 0 when the face carries a prescribed velocity or touches a solid.
        auto face_grad = [&](int a, Int3 cell_lo, Int3 cell_hi, std::int64_t fi) -> double {
            if (detail::solid_at(ex_.store(), id, g, cell_lo.x, cell_lo.y, cell_lo.z) ||
                detail::solid_at(ex_.store(), id, g, cell_hi.x, cell_hi.y, cell_hi.z))
                return 0.0;
            if (fi == 1 && hull[static_cast<int>(make_face(a, -1))] &&
                bc_.face[static_cast<int>(make_face(a, -1))].velocity != VelocityBCKind::Outflow)
                return 0.0;
            if (fi == n[a] + 1 && hull[static_cast<int>(make_face(a, +1))] &&
                bc_.face[static_cast<int>(make_face(a, +1))].velocity != VelocityBCKind::Outflow)
                return 0.0;
            return (p[g.index(cell_hi.x, cell_hi.y, cell_hi.z)] -
                    p[g.index(cell_lo.x, cell_lo.y, cell_lo.z)]) /
                   g.spacing()[a];
        };

        const std::array<Var, 3> uvars{Var::U1, Var::U2, Var::U3};
        const std::array<Var, 3> svars{Var::U1Star, Var::U2Star, Var::U3Star};
        for (int a = 0; a < 3; ++a) {
            auto& u = g.field(uvars[a]);
            const auto& star = g.field(svars[a]);
            for (std::int64_t k = 1; k <= n.z; ++k)
                for (std::int64_t j = 1; j <= n.y; ++j)
                    for (std::int64_t i = 1; i <= n.x; ++i) {
                        const std::size_t c = g.index(i, j, k);
                        if (detail::solid_at(ex_.store(), id, g, i, j, k)) {
                            u[c] = 0.0;
                            continue;
                        }
                        Int3 cell{i, j, k}, lo{i, j, k}, hi{i, j, k};
                        const std::int64_t ca = a == 0 ? i : a == 1 ? j : k;
                        lo.set(a, ca - 1);
                        hi.set(a, ca + 1);
                        const double gm = face_grad(a, lo, cell, ca);
                        const double gp = face_grad(a, cell, hi, ca + 1);
                        u[c] = star[c] - factor * 0.5 * (gm + gp);
                    }

            // Face velocities on open faces.
            auto& uf = g.field(face_var(a));
            const int t1 = a == 0 ? 1 : 0;
            const int t2 = a == 2 ? 1 : 2;
            for (std::int64_t q2 = 1; q2 <= n[t2]; ++q2)
                for (std::int64_t q1 = 1; q1 <= n[t1]; ++q1)
                    for (std::int64_t fi = 1; fi <= n[a] + 1; ++fi) {
                        Int3 L, R;
                        L.set(a, fi - 1);
                        R.set(a, fi);
                        L.set(t1, q1);
                        R.set(t1, q1);
                        L.set(t2, q2);
                        R.set(t2, q2);
                        uf[g.index(R.x, R.y, R.z)] -= factor * face_grad(a, L, R, fi);
                    }
        }
    }

    Exec& ex_;
    FluidProperties props_;
    BoundarySpec bc_;
    TimeIntegrator integrator_;
    MGConfig mg_;
    bool thermal_;
    InterfaceInterpolation interp_;
    PoissonSolver poisson_;
    int step_count_ = 0;
    double prev_dt_ = 0.0;
};

} // namespace blockflow

#endif // BLOCKFLOW_NAVIER_STOKES_HPP_
