#ifndef BLOCKFLOW_DGRID_HPP_
#define BLOCKFLOW_DGRID_HPP_
//! \file dgrid.hpp
//! \brief Per-block cell-centred storage ("d-grids"): a (sx,sy,sz) block of
//!        cells with a one-cell ghost halo around it, nine named field
//!        variables per cell, plus indexing, initialisation and interior
//!        reductions.
//!
//! Storage is one contiguous array per variable (structure of arrays,
//! x fastest). Arrays materialise lazily on first access so that runs which
//! touch only a subset of the variables (e.g. pure Poisson benchmarks) do not
//! pay for all nine.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "blockflow/types.hpp"

namespace blockflow {

//! Field variables stored per cell. The first nine are the exchanged solver
//! variables; the remaining slots are framework-internal work arrays (time
//! integrator history, multigrid scratch, face-normal velocities) that are
//! never counted against the per-cell variable budget.
enum class Var : int {
    U1 = 0,
    U2,
    U3,
    P,
    T,
    U1Star,
    U2Star,
    U3Star,
    Rhs,
    // internal work arrays
    MgRes,
    MgTmp,
    Hist1,
    Hist2,
    Hist3,
    HistT,
    FaceU1,
    FaceU2,
    FaceU3,
};

inline constexpr int kNumCanonicalVars = 9;
inline constexpr int kNumVars = 18;

inline constexpr std::array<Var, kNumCanonicalVars> kCanonicalVars = {
    Var::U1, Var::U2, Var::U3, Var::P, Var::T, Var::U1Star, Var::U2Star, Var::U3Star, Var::Rhs};

inline const char* var_name(Var v) {
    static constexpr const char* names[kNumVars] = {
        "u1",    "u2",    "u3",    "p",     "T",     "u1_star", "u2_star", "u3_star", "rhs",
        "mg_res", "mg_tmp", "hist1", "hist2", "hist3", "histT",  "face_u1", "face_u2", "face_u3"};
    return names[static_cast<int>(v)];
}

inline Var var_from_name(const std::string& name) {
    for (int i = 0; i < kNumVars; ++i)
        if (name == var_name(static_cast<Var>(i))) return static_cast<Var>(i);
    throw NotFound("unknown field variable '" + name + "'");
}

inline constexpr Var velocity_var(int axis) {
    return axis == 0 ? Var::U1 : axis == 1 ? Var::U2 : Var::U3;
}
inline constexpr Var star_var(int axis) {
    return axis == 0 ? Var::U1Star : axis == 1 ? Var::U2Star : Var::U3Star;
}
inline constexpr Var face_var(int axis) {
    return axis == 0 ? Var::FaceU1 : axis == 1 ? Var::FaceU2 : Var::FaceU3;
}

//! Geometry/extent description of one d-grid. Halo width is fixed at one cell:
//! all stencils are seven-point (centre + six face neighbours).
struct DGridSpec {
    Int3 size{16, 16, 16};     // cells, excluding halo
    int halo_width = 1;        // fixed
    Real3 spacing{1.0, 1.0, 1.0};  // metres

    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (size[a] < 2) throw InvalidArgument("d-grid size components must be >= 2");
            if (!(spacing[a] > 0.0)) throw InvalidArgument("d-grid spacing must be > 0");
        }
        if (halo_width != 1) throw InvalidArgument("halo width is fixed at 1");
    }
};

//! Physical properties of the (constant-density) fluid plus the Boussinesq
//! coupling parameters.
struct FluidProperties {
    double rho_inf = 1.0;              // kg/m^3
    double mu = 1e-3;                  // Pa s
    double beta = 0.0;                 // 1/K thermal expansion
    double t_ref = 293.15;             // K
    Real3 gravity{0.0, 0.0, 0.0};      // m/s^2
    double thermal_diffusivity = 0.0;  // m^2/s

    void validate() const {
        if (!(rho_inf > 0.0)) throw InvalidArgument("rho_inf must be > 0");
        if (mu < 0.0) throw InvalidArgument("mu must be >= 0");
        if (thermal_diffusivity < 0.0) throw InvalidArgument("thermal_diffusivity must be >= 0");
    }

    double kinematic_viscosity() const { return mu / rho_inf; }
};

//! One block's field storage: (sx+2)(sy+2)(sz+2) cells per variable, interior
//! indices 1..s, halo at 0 and s+1. Owned by exactly one worker at a time.
class DGrid {
  public:
    DGrid() = default;
    DGrid(const Int3& size, const Real3& spacing, const Real3& origin)
        : size_(size), spacing_(spacing), origin_(origin) {
        nx_ = size.x + 2;
        ny_ = size.y + 2;
        nz_ = size.z + 2;
        cells_ = static_cast<std::size_t>(nx_) * ny_ * nz_;
    }

    explicit DGrid(const DGridSpec& spec, const Real3& origin = {})
        : DGrid(spec.size, spec.spacing, origin) {
        spec.validate();
    }

    const Int3& size() const { return size_; }
    const Real3& spacing() const { return spacing_; }
    const Real3& origin() const { return origin_; }
    Int3 padded() const { return {nx_, ny_, nz_}; }
    std::size_t cells_with_halo() const { return cells_; }
    std::size_t interior_cells() const { return static_cast<std::size_t>(size_.product()); }
    double cell_volume() const { return spacing_.x * spacing_.y * spacing_.z; }

    std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return (static_cast<std::size_t>(k) * ny_ + j) * nx_ + i;
    }

    //! Centre of interior cell (i,j,k), 1-based interior indexing.
    Real3 cell_center(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return {origin_.x + (i - 0.5) * spacing_.x, origin_.y + (j - 0.5) * spacing_.y,
                origin_.z + (k - 0.5) * spacing_.z};
    }

    bool materialized(Var v) const { return !data_[static_cast<int>(v)].empty(); }

    //! Variable array, zero-initialised (halo included) on first access.
    std::vector<double>& field(Var v) {
        auto& a = data_[static_cast<int>(v)];
        if (a.empty()) a.assign(cells_, 0.0);
        return a;
    }
    const std::vector<double>& field(Var v) const {
        auto& a = data_[static_cast<int>(v)];
        if (a.empty()) a.assign(cells_, 0.0);
        return a;
    }

    double& at(Var v, std::int64_t i, std::int64_t j, std::int64_t k) {
        return field(v)[index(i, j, k)];
    }
    double at(Var v, std::int64_t i, std::int64_t j, std::int64_t k) const {
        return field(v)[index(i, j, k)];
    }

    void for_interior(const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) const {
        for (std::int64_t k = 1; k <= size_.z; ++k)
            for (std::int64_t j = 1; j <= size_.y; ++j)
                for (std::int64_t i = 1; i <= size_.x; ++i) fn(i, j, k);
    }

    void for_halo(const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) const {
        for (std::int64_t k = 0; k < nz_; ++k)
            for (std::int64_t j = 0; j < ny_; ++j)
                for (std::int64_t i = 0; i < nx_; ++i)
                    if (i == 0 || i == nx_ - 1 || j == 0 || j == ny_ - 1 || k == 0 || k == nz_ - 1)
                        fn(i, j, k);
    }

    //! Sets every interior cell of `v` to f(cell centre); the halo is untouched.
    void fill(Var v, const std::function<double(const Real3&)>& f) {
        auto& a = field(v);
        for (std::int64_t k = 1; k <= size_.z; ++k)
            for (std::int64_t j = 1; j <= size_.y; ++j)
                for (std::int64_t i = 1; i <= size_.x; ++i)
                    a[index(i, j, k)] = f(cell_center(i, j, k));
    }

    void fill_constant(Var v, double value) {
        fill(v, [value](const Real3&) { return value; });
    }

    struct Norms {
        double l2 = 0.0;    // root mean square over interior cells
        double linf = 0.0;
    };

    Norms interior_norms(Var v) const {
        const auto& a = field(v);
        double sum2 = 0.0, maxabs = 0.0;
        for (std::int64_t k = 1; k <= size_.z; ++k)
            for (std::int64_t j = 1; j <= size_.y; ++j)
                for (std::int64_t i = 1; i <= size_.x; ++i) {
                    const double x = a[index(i, j, k)];
                    sum2 += x * x;
                    maxabs = std::max(maxabs, std::abs(x));
                }
        return {std::sqrt(sum2 / static_cast<double>(interior_cells())), maxabs};
    }

    //! Interior sum (used by conservation audits and mean pinning).
    double interior_sum(Var v) const {
        const auto& a = field(v);
        double s = 0.0;
        for (std::int64_t k = 1; k <= size_.z; ++k)
            for (std::int64_t j = 1; j <= size_.y; ++j)
                for (std::int64_t i = 1; i <= size_.x; ++i) s += a[index(i, j, k)];
        return s;
    }

  private:
    Int3 size_{0, 0, 0};
    Real3 spacing_{1, 1, 1};
    Real3 origin_{0, 0, 0};
    std::int64_t nx_ = 0, ny_ = 0, nz_ = 0;
    std::size_t cells_ = 0;
    mutable std::array<std::vector<double>, kNumVars> data_;  // lazy, see field()
};

} // namespace blockflow

#endif // BLOCKFLOW_DGRID_HPP_
