#ifndef BLOCKFLOW_TOPOLOGY_HPP_
#define BLOCKFLOW_TOPOLOGY_HPP_
//! \file topology.hpp
//! \brief Logical grid hierarchy ("l-grids"): construction of uniform and
//!        statically adaptive block hierarchies, neighbour resolution across
//!        refinement levels, Morton (Lebesgue) linearisation, and symbolic
//!        grid/cell counting.
//!
//! The hierarchy is a tree of non-overlapping, orthogonal, regular grids.
//! The root sits at depth 0 and is refined by the top-level factors; every
//! deeper refinement uses the subdivision factors. Each node links to exactly
//! one data grid. A topology is immutable once built.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "blockflow/types.hpp"

namespace blockflow {

//! Per-axis refinement factors: top-level (root -> depth 1) and subsequent
//! subdivisions, plus the maximum admissible depth.
struct RefinementSpec {
    Int3 r_top{2, 2, 2};
    Int3 r_sub{2, 2, 2};
    int d_max = 8;

    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (r_top[a] < 1 || r_sub[a] < 1)
                throw InvalidArgument("refinement factors must be >= 1");
        }
        if (r_sub.x < 2 && r_sub.y < 2 && r_sub.z < 2)
            throw InvalidArgument("at least one subdivision factor must be >= 2");
        if (d_max < 0) throw InvalidArgument("d_max must be >= 0");
    }

    //! Subdivision factors applied to a node at `depth` to produce its children.
    Int3 factors_below(int depth) const { return depth == 0 ? r_top : r_sub; }

    //! Number of grids per axis in the lattice of a given depth.
    Int3 lattice_extent(int depth) const {
        Int3 e{1, 1, 1};
        for (int d = 0; d < depth; ++d) e = e * factors_below(d);
        return e;
    }

    //! Grid count of one full level.
    std::uint64_t level_count(int depth) const {
        const Int3 e = lattice_extent(depth);
        std::uint64_t n = 1;
        n = checked_mul(n, static_cast<std::uint64_t>(e.x), "level_count");
        n = checked_mul(n, static_cast<std::uint64_t>(e.y), "level_count");
        n = checked_mul(n, static_cast<std::uint64_t>(e.z), "level_count");
        return n;
    }

    bool operator==(const RefinementSpec&) const = default;
};

//! One node of the logical hierarchy.
struct LGridNode {
    GridId id = kNoGrid;
    int depth = 0;
    Int3 coord;                    // position in the lattice of this depth
    GridId parent = kNoGrid;
    std::vector<GridId> children;  // empty or exactly prod(factors) entries
    GridId dgrid = kNoGrid;        // the one linked data grid

    bool is_leaf() const { return children.empty(); }
};

enum class NeighborKind { SameLevel, Coarser, FinerSet, DomainBoundary };

//! Result of a composite (leaf-level) neighbour query.
struct NeighborResult {
    NeighborKind kind = NeighborKind::DomainBoundary;
    std::vector<GridId> ids;  // singleton for SameLevel/Coarser, the covering set for FinerSet
    Face face = Face::XMinus;
};

// ---------------------------------------------------------------------------
// Morton / Lebesgue linearisation
// ---------------------------------------------------------------------------

//! Interleaves the low `bits` bits of each coordinate: bit j of x lands on key
//! bit 3j, y on 3j+1, z on 3j+2 (x least significant).
inline std::uint64_t interleave_bits(const Int3& c, int bits) {
    std::uint64_t key = 0;
    for (int j = 0; j < bits; ++j) {
        key |= ((static_cast<std::uint64_t>(c.x) >> j) & 1u) << (3 * j + 0);
        key |= ((static_cast<std::uint64_t>(c.y) >> j) & 1u) << (3 * j + 1);
        key |= ((static_cast<std::uint64_t>(c.z) >> j) & 1u) << (3 * j + 2);
    }
    return key;
}

//! Morton key of a lattice coordinate at `depth`. For anisotropic refinement
//! the per-axis bit counts differ; shorter axes are padded with zero bits so
//! the key remains totally ordered.
inline std::uint64_t morton_key(const RefinementSpec& spec, const Int3& coord, int depth) {
    const Int3 ext = spec.lattice_extent(depth);
    int bits = 1;
    for (int a = 0; a < 3; ++a) {
        if (coord[a] < 0 || coord[a] >= ext[a])
            throw InvalidArgument("morton_key: coordinate outside the depth-" +
                                  std::to_string(depth) + " lattice");
        const auto axis_bits = std::bit_width(static_cast<std::uint64_t>(ext[a] - 1));
        bits = std::max(bits, static_cast<int>(axis_bits));
    }
    if (bits > 21) throw InvalidArgument("morton_key: lattice too deep for 64-bit keys");
    return interleave_bits(coord, bits);
}

// ---------------------------------------------------------------------------
// Symbolic size arithmetic (no allocation)
// ---------------------------------------------------------------------------

struct GridCounts {
    std::uint64_t total_lgrids = 0;
    std::uint64_t leaf_lgrids = 0;
};

struct CellCounts {
    std::uint64_t total_cells = 0;
    std::uint64_t total_variables = 0;
};

//! Grid counts of a fully refined hierarchy of the given depth.
inline GridCounts count_grids(const RefinementSpec& spec, int depth) {
    spec.validate();
    if (depth < 0 || depth > spec.d_max)
        throw InvalidArgument("count_grids: depth out of range [0, d_max]");
    GridCounts c;
    for (int d = 0; d <= depth; ++d)
        c.total_lgrids = checked_add(c.total_lgrids, spec.level_count(d), "count_grids");
    c.leaf_lgrids = spec.level_count(depth);
    return c;
}

//! Cell and variable counts of a fully refined hierarchy. Every l-grid carries
//! one d-grid, so non-leaf levels contribute too.
inline CellCounts count_cells(const RefinementSpec& spec, int depth, const Int3& dgrid_size,
                              std::uint64_t vars_per_cell) {
    const GridCounts g = count_grids(spec, depth);
    std::uint64_t per_grid = 1;
    for (int a = 0; a < 3; ++a) {
        if (dgrid_size[a] < 1) throw InvalidArgument("count_cells: d-grid size must be positive");
        per_grid = checked_mul(per_grid, static_cast<std::uint64_t>(dgrid_size[a]), "count_cells");
    }
    CellCounts c;
    c.total_cells = checked_mul(g.total_lgrids, per_grid, "count_cells");
    c.total_variables = checked_mul(c.total_cells, vars_per_cell, "count_cells");
    return c;
}

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

//! Region-based refinement callback for adaptive construction: receives a
//! node's depth, lattice coordinate and its box in unit-domain coordinates,
//! and answers whether that node should be subdivided further.
using RefinePredicate =
    std::function<bool(int depth, const Int3& coord, const Real3& lo, const Real3& hi)>;

//! Immutable hierarchy of l-grids. Construction is single-threaded; afterwards
//! the structure is safe for concurrent reads.
class Topology {
  public:
    //! Fully refined hierarchy: every node above `depth` subdivided, every
    //! node at `depth` a leaf.
    static Topology build_uniform(const RefinementSpec& spec, int depth) {
        spec.validate();
        if (depth < 0 || depth > spec.d_max)
            throw InvalidArgument("build_uniform: depth out of range [0, d_max]");
        Topology t(spec);
        t.refine_while([&](const LGridNode& n) { return n.depth < depth; });
        t.finalize();
        return t;
    }

    //! Statically adaptive hierarchy: refine every node the predicate selects
    //! (starting from the root) until it declines or d_max is reached, then
    //! verify the 2:1 face balance.
    static Topology build_adaptive(const RefinementSpec& spec, const RefinePredicate& refine) {
        spec.validate();
        Topology t(spec);
        t.refine_while([&](const LGridNode& n) {
            if (n.depth >= spec.d_max) return false;
            const Int3 ext = spec.lattice_extent(n.depth);
            Real3 lo{static_cast<double>(n.coord.x) / ext.x, static_cast<double>(n.coord.y) / ext.y,
                     static_cast<double>(n.coord.z) / ext.z};
            Real3 hi{static_cast<double>(n.coord.x + 1) / ext.x,
                     static_cast<double>(n.coord.y + 1) / ext.y,
                     static_cast<double>(n.coord.z + 1) / ext.z};
            return refine(n.depth, n.coord, lo, hi);
        });
        t.finalize();
        t.check_balance();
        return t;
    }

    const RefinementSpec& spec() const { return spec_; }
    std::size_t node_count() const { return nodes_.size(); }
    int max_depth() const { return max_depth_; }

    const LGridNode& node(GridId id) const {
        if (id >= nodes_.size()) throw NotFound("unknown l-grid id " + std::to_string(id));
        return nodes_[id];
    }
    bool is_leaf(GridId id) const { return node(id).is_leaf(); }

    //! All node ids, construction order (root first, then level by level).
    std::vector<GridId> all_ids() const {
        std::vector<GridId> ids(nodes_.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        return ids;
    }

    //! Leaf ids in (depth, Morton) order.
    const std::vector<GridId>& leaf_ids() const { return leaves_; }

    //! Ids of one depth level in Morton order.
    std::vector<GridId> level_ids(int depth) const {
        std::vector<GridId> ids;
        if (depth < 0 || depth > max_depth_) return ids;
        ids.reserve(by_depth_[depth].size());
        for (const auto& [key, id] : by_depth_[depth]) ids.push_back(id);
        return ids;
    }

    //! Plain lattice lookup: the node at (depth, coord) if it exists.
    std::optional<GridId> lookup(int depth, const Int3& coord) const {
        if (depth < 0 || depth > max_depth_) return std::nullopt;
        const Int3 ext = spec_.lattice_extent(depth);
        for (int a = 0; a < 3; ++a)
            if (coord[a] < 0 || coord[a] >= ext[a]) return std::nullopt;
        const std::uint64_t key = morton_key(spec_, coord, depth);
        const auto& lvl = by_depth_[depth];
        auto it = std::lower_bound(lvl.begin(), lvl.end(), key,
                                   [](const auto& p, std::uint64_t k) { return p.first < k; });
        if (it == lvl.end() || it->first != key) return std::nullopt;
        return it->second;
    }

    //! Same-depth lattice neighbour (exists or not); no leaf semantics.
    std::optional<GridId> level_neighbor(GridId id, Face f) const {
        const LGridNode& n = node(id);
        return lookup(n.depth, n.coord + face_offset(f));
    }

    //! Composite neighbour query: resolves the face of `id` against the leaf
    //! structure (same level, one coarser, a finer covering set, or the
    //! domain hull).
    NeighborResult find_neighbor(GridId id, Face f) const {
        const LGridNode& n = node(id);
        NeighborResult res;
        res.face = f;
        const Int3 c = n.coord + face_offset(f);
        const Int3 ext = spec_.lattice_extent(n.depth);
        const int axis = face_axis(f);
        if (c[axis] < 0 || c[axis] >= ext[axis]) {
            res.kind = NeighborKind::DomainBoundary;
            return res;
        }
        if (auto m = lookup(n.depth, c)) {
            const LGridNode& mn = node(*m);
            if (mn.is_leaf()) {
                res.kind = NeighborKind::SameLevel;
                res.ids = {*m};
                return res;
            }
            // Refined deeper: collect the children tiling the shared face.
            res.kind = NeighborKind::FinerSet;
            const Int3 r = spec_.factors_below(mn.depth);
            const std::int64_t face_pos = face_sign(f) > 0 ? 0 : r[axis] - 1;
            for (GridId ch : mn.children) {
                const LGridNode& cn = node(ch);
                Int3 octant{cn.coord.x - mn.coord.x * r.x, cn.coord.y - mn.coord.y * r.y,
                            cn.coord.z - mn.coord.z * r.z};
                if (octant[axis] == face_pos) res.ids.push_back(ch);
            }
            return res;
        }
        // No same-level node: the covering ancestor one level up must be a leaf
        // (children tile a parent completely, and 2:1 balance forbids deeper gaps).
        if (n.depth == 0) {
            res.kind = NeighborKind::DomainBoundary;
            return res;
        }
        const Int3 r = spec_.factors_below(n.depth - 1);
        const Int3 pc{div_floor(c.x, r.x), div_floor(c.y, r.y), div_floor(c.z, r.z)};
        if (auto p = lookup(n.depth - 1, pc)) {
            res.kind = NeighborKind::Coarser;
            res.ids = {*p};
            return res;
        }
        throw NotFound("find_neighbor: hierarchy has a gap next to grid " + std::to_string(id) +
                       " across face " + face_name(f));
    }

    //! Morton key of a node within its depth level.
    std::uint64_t node_key(GridId id) const {
        const LGridNode& n = node(id);
        return morton_key(spec_, n.coord, n.depth);
    }

    //! Verifies the 2:1 balance: every pair of face-adjacent leaves differs by
    //! at most one depth level. Throws BalanceViolation naming the first
    //! offending pair.
    void check_balance() const {
        for (GridId id : leaves_) {
            const LGridNode& n = node(id);
            for (Face f : kAllFaces) {
                const NeighborResult nb = find_neighbor(id, f);
                if (nb.kind != NeighborKind::FinerSet) continue;
                for (GridId fid : nb.ids) {
                    if (!node(fid).is_leaf()) {
                        // The finer grid is itself refined: depth jump of 2+.
                        const GridId deep = node(fid).children.front();
                        throw BalanceViolation(
                            id, deep,
                            "2:1 balance violated between leaf " + std::to_string(id) + " (depth " +
                                std::to_string(n.depth) + ") and leaf " + std::to_string(deep) +
                                " (depth " + std::to_string(node(deep).depth) + ") across face " +
                                face_name(f));
                    }
                }
            }
        }
    }

    // -- line-oriented text serialisation (debugging, server bootstrap) ------

    void write_text(std::ostream& os) const {
        os << "blockflow-topology 1\n";
        os << "rtop " << spec_.r_top.x << ' ' << spec_.r_top.y << ' ' << spec_.r_top.z << '\n';
        os << "rsub " << spec_.r_sub.x << ' ' << spec_.r_sub.y << ' ' << spec_.r_sub.z << '\n';
        os << "dmax " << spec_.d_max << '\n';
        for (const LGridNode& n : nodes_) {
            os << "node " << n.id << ' ' << n.depth << ' ' << n.coord.x << ' ' << n.coord.y << ' '
               << n.coord.z << ' ';
            if (n.parent == kNoGrid)
                os << '-';
            else
                os << n.parent;
            os << ' ' << n.dgrid << ' ' << n.children.size();
            for (GridId c : n.children) os << ' ' << c;
            os << '\n';
        }
    }

    std::string to_text() const {
        std::ostringstream os;
        write_text(os);
        return os.str();
    }

    static Topology from_text(std::istream& is) {
        std::string line;
        if (!std::getline(is, line) || line != "blockflow-topology 1")
            throw IoError("topology text: bad header");
        RefinementSpec spec;
        auto read_triple = [&](const char* tag, Int3& out) {
            if (!std::getline(is, line)) throw IoError("topology text: truncated");
            std::istringstream ls(line);
            std::string t;
            ls >> t >> out.x >> out.y >> out.z;
            if (t != tag || !ls) throw IoError(std::string("topology text: expected ") + tag);
        };
        read_triple("rtop", spec.r_top);
        read_triple("rsub", spec.r_sub);
        if (!std::getline(is, line)) throw IoError("topology text: truncated");
        {
            std::istringstream ls(line);
            std::string t;
            ls >> t >> spec.d_max;
            if (t != "dmax" || !ls) throw IoError("topology text: expected dmax");
        }
        Topology t(spec);
        t.nodes_.clear();
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string tag, parent;
            LGridNode n;
            std::size_t nch = 0;
            ls >> tag >> n.id >> n.depth >> n.coord.x >> n.coord.y >> n.coord.z >> parent >>
                n.dgrid >> nch;
            if (tag != "node" || !ls) throw IoError("topology text: bad node line: " + line);
            n.parent = parent == "-" ? kNoGrid : static_cast<GridId>(std::stoull(parent));
            n.children.resize(nch);
            for (std::size_t i = 0; i < nch; ++i) ls >> n.children[i];
            if (!ls) throw IoError("topology text: bad child list: " + line);
            if (n.id != t.nodes_.size()) throw IoError("topology text: ids must be dense");
            t.nodes_.push_back(std::move(n));
        }
        if (t.nodes_.empty()) throw IoError("topology text: no nodes");
        t.finalize();
        return t;
    }

    static Topology from_text(const std::string& s) {
        std::istringstream is(s);
        return from_text(is);
    }

  private:
    explicit Topology(const RefinementSpec& spec) : spec_(spec) {
        LGridNode root;
        root.id = 0;
        root.dgrid = 0;
        nodes_.push_back(root);
    }

    static std::int64_t div_floor(std::int64_t a, std::int64_t b) {
        return a >= 0 ? a / b : -((-a + b - 1) / b);
    }

    //! Breadth-first refinement driven by a node predicate.
    void refine_while(const std::function<bool(const LGridNode&)>& want) {
        std::vector<GridId> frontier{0};
        while (!frontier.empty()) {
            std::vector<GridId> next;
            for (GridId id : frontier) {
                if (!want(nodes_[id])) continue;
                const int d = nodes_[id].depth;
                const Int3 r = spec_.factors_below(d);
                const Int3 base = nodes_[id].coord * r;
                nodes_[id].children.reserve(static_cast<std::size_t>(r.product()));
                for (std::int64_t cz = 0; cz < r.z; ++cz)
                    for (std::int64_t cy = 0; cy < r.y; ++cy)
                        for (std::int64_t cx = 0; cx < r.x; ++cx) {
                            LGridNode ch;
                            ch.id = nodes_.size();
                            ch.depth = d + 1;
                            ch.coord = base + Int3{cx, cy, cz};
                            ch.parent = id;
                            ch.dgrid = ch.id;
                            nodes_[id].children.push_back(ch.id);
                            next.push_back(ch.id);
                            nodes_.push_back(std::move(ch));
                        }
            }
            frontier = std::move(next);
        }
    }

    void finalize() {
        max_depth_ = 0;
        for (const LGridNode& n : nodes_) max_depth_ = std::max(max_depth_, n.depth);
        by_depth_.assign(max_depth_ + 1, {});
        for (const LGridNode& n : nodes_)
            by_depth_[n.depth].emplace_back(morton_key(spec_, n.coord, n.depth), n.id);
        for (auto& lvl : by_depth_) std::sort(lvl.begin(), lvl.end());
        leaves_.clear();
        for (int d = 0; d <= max_depth_; ++d)
            for (const auto& [key, id] : by_depth_[d])
                if (nodes_[id].is_leaf()) leaves_.push_back(id);
    }

    RefinementSpec spec_;
    std::vector<LGridNode> nodes_;
    std::vector<std::vector<std::pair<std::uint64_t, GridId>>> by_depth_;
    std::vector<GridId> leaves_;
    int max_depth_ = 0;
};

} // namespace blockflow

#endif // BLOCKFLOW_TOPOLOGY_HPP_
