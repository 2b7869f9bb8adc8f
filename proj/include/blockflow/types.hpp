#ifndef BLOCKFLOW_TYPES_HPP_
#define BLOCKFLOW_TYPES_HPP_
//! \file types.hpp
//! \brief Small shared vocabulary types: index triples, grid ids, face
//!        directions, and the exception hierarchy used across the library.

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace blockflow {

using GridId = std::uint64_t;
inline constexpr GridId kNoGrid = std::numeric_limits<GridId>::max();

//! Integer lattice triple (block coordinates, cell counts, refinement factors).
struct Int3 {
    std::int64_t x = 0, y = 0, z = 0;

    constexpr std::int64_t operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
    constexpr bool operator==(const Int3&) const = default;

    constexpr Int3 operator+(const Int3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Int3 operator*(const Int3& o) const { return {x * o.x, y * o.y, z * o.z}; }

    constexpr std::int64_t product() const { return x * y * z; }
    void set(int axis, std::int64_t v) { (axis == 0 ? x : axis == 1 ? y : z) = v; }
};

//! Real-valued triple (spacings, positions, gravity).
struct Real3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr double operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
    constexpr bool operator==(const Real3&) const = default;
    void set(int axis, double v) { (axis == 0 ? x : axis == 1 ? y : z) = v; }
};

//! Axis-aligned face directions of a block. axis = face/2, positive side = face%2.
enum class Face : int { XMinus = 0, XPlus = 1, YMinus = 2, YPlus = 3, ZMinus = 4, ZPlus = 5 };

inline constexpr std::array<Face, 6> kAllFaces = {Face::XMinus, Face::XPlus, Face::YMinus,
                                                  Face::YPlus,  Face::ZMinus, Face::ZPlus};

constexpr int face_axis(Face f) { return static_cast<int>(f) / 2; }
constexpr int face_sign(Face f) { return static_cast<int>(f) % 2 == 0 ? -1 : +1; }
constexpr Face opposite(Face f) {
    const int i = static_cast<int>(f);
    return static_cast<Face>(i % 2 == 0 ? i + 1 : i - 1);
}
constexpr Face make_face(int axis, int sign) { return static_cast<Face>(2 * axis + (sign > 0 ? 1 : 0)); }

inline const char* face_name(Face f) {
    static constexpr const char* names[6] = {"-x", "+x", "-y", "+y", "-z", "+z"};
    return names[static_cast<int>(f)];
}

inline Int3 face_offset(Face f) {
    Int3 off;
    off.set(face_axis(f), face_sign(f));
    return off;
}

// ---------------------------------------------------------------------------
// Error types. All carry a plain message; callers match on type.
// ---------------------------------------------------------------------------

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

//! A pair of face-adjacent leaves violates the 2:1 depth balance.
struct BalanceViolation : std::runtime_error {
    GridId a, b;
    BalanceViolation(GridId a_, GridId b_, const std::string& msg)
        : std::runtime_error(msg), a(a_), b(b_) {}
};

//! An exchange plan or routed plan no longer matches the structures it was built for.
struct PlanMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

//! Configuration text failed validation; carries the offending line (1-based, 0 = n/a).
struct ConfigError : std::runtime_error {
    int line = 0;
    ConfigError(const std::string& msg, int line_ = 0) : std::runtime_error(msg), line(line_) {}
};

//! Multiply with overflow check; counting paper-scale hierarchies stays in range,
//! but absurd specs must fail loudly instead of wrapping.
inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r))
        throw InvalidArgument(std::string(what) + ": 64-bit overflow in size arithmetic");
    return r;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b, const char* what) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r))
        throw InvalidArgument(std::string(what) + ": 64-bit overflow in size arithmetic");
    return r;
}

} // namespace blockflow

#endif // BLOCKFLOW_TYPES_HPP_
