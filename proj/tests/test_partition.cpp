#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "blockflow/partition.hpp"
#include "blockflow/server.hpp"

using namespace blockflow;

namespace {
RefinementSpec cubic_spec(int d_max = 8) { return RefinementSpec{{2, 2, 2}, {2, 2, 2}, d_max}; }
}

TEST_CASE("assign: one leaf per worker in Morton order") {
    auto topo = Topology::build_uniform(cubic_spec(), 1);
    auto map = assign(topo, 8);
    CHECK(map.consistent());
    const auto leaves = topo.level_ids(1);  // Morton order
    for (int w = 0; w < 8; ++w) CHECK(map.owner(leaves[w]) == w);
}

TEST_CASE("assign: ceil/floor split sizes") {
    auto topo = Topology::build_uniform(cubic_spec(), 1);
    auto map = assign(topo, 3);
    const auto leaves = topo.level_ids(1);
    std::array<int, 3> counts{0, 0, 0};
    for (GridId id : leaves) counts[map.owner(id)]++;
    CHECK(counts == std::array<int, 3>{3, 3, 2});

    // Contiguity in Morton order.
    int prev = 0;
    for (GridId id : leaves) {
        CHECK(map.owner(id) >= prev);
        prev = map.owner(id);
    }
}

TEST_CASE("assign: every level split independently and balanced") {
    auto topo = Topology::build_uniform(cubic_spec(), 2);
    auto map = assign(topo, 4);
    CHECK(map.consistent());

    for (int d = 0; d <= 2; ++d) {
        std::vector<int> counts(4, 0);
        for (GridId id : topo.level_ids(d)) counts[map.owner(id)]++;
        const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
        CHECK(*mx - *mn <= 1);
        if (d == 2)
            for (int c : counts) CHECK(c == 16);
    }

    // Load balance holds for every P up to the leaf count.
    for (int p : {1, 2, 3, 5, 7, 8, 16, 33, 64}) {
        auto m = assign(topo, p);
        for (int d = 0; d <= 2; ++d) {
            std::vector<int> counts(p, 0);
            for (GridId id : topo.level_ids(d)) counts[m.owner(id)]++;
            const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
            CHECK(*mx - *mn <= 1);
        }
    }

    CHECK_THROWS_AS(assign(topo, 0), InvalidArgument);
}

TEST_CASE("owner queries") {
    auto topo = Topology::build_uniform(cubic_spec(), 1);
    auto one = assign(topo, 1);
    for (GridId id : topo.all_ids()) CHECK(one.owner(id) == 0);

    auto two = assign(topo, 2);
    CHECK(two.owner(topo.level_ids(1).front()) == 0);
    CHECK_THROWS_AS(two.owner(GridId{999}), NotFound);
}

TEST_CASE("migrate updates owner and generation") {
    auto topo = Topology::build_uniform(cubic_spec(), 1);
    auto map = assign(topo, 2);
    const GridId g = topo.level_ids(1).front();
    const auto gen0 = map.generation();

    map.migrate(g, 1);
    CHECK(map.owner(g) == 1);
    CHECK(map.generation() == gen0 + 1);
    CHECK(map.consistent());

    // Migration to the current owner only bumps the generation.
    map.migrate(g, 1);
    CHECK(map.owner(g) == 1);
    CHECK(map.generation() == gen0 + 2);

    // One grid moved off a (4,4) split -> imbalance 2.
    CHECK(map.balance_report().imbalance >= 1);
    auto fresh = assign(topo, 2);
    fresh.migrate(topo.level_ids(1).front(), 1);
    const auto rep = fresh.balance_report();
    // Root level: rank 0 had the root. Leaf level: (3,5) after the move.
    CHECK(rep.imbalance == 2);

    // Moving everything to rank 0 empties the rest.
    for (GridId id : topo.all_ids()) fresh.migrate(id, 0);
    CHECK(fresh.worker_grids(0).size() == topo.node_count());
    CHECK(fresh.worker_grids(1).empty());
    CHECK(fresh.consistent());

    CHECK_THROWS_AS(fresh.migrate(GridId{999}, 0), NotFound);
    CHECK_THROWS_AS(fresh.migrate(g, 7), NotFound);
}

TEST_CASE("comm_pattern: single worker is all-diagonal") {
    auto topo = Topology::build_uniform(cubic_spec(), 1);
    auto map = assign(topo, 1);
    auto vol = comm_pattern(topo, map, {16, 16, 16});
    REQUIRE(vol.size() == 1);
    CHECK(vol[0][0] == 24u * 16 * 16);  // 24 directed faces x 256 cells
    CHECK(cut_volume(vol) == 0);
}

TEST_CASE("comm_pattern: two-worker Morton split cuts one plane") {
    auto topo = Topology::build_uniform(cubic_spec(), 1);
    auto map = assign(topo, 2);
    auto vol = comm_pattern(topo, map, {16, 16, 16});
    REQUIRE(vol.size() == 2);
    // Morton order puts the lower-z quad on rank 0: the cut is the z midplane,
    // 4 block-face pairs each way, 256 cells per face.
    CHECK(vol[0][1] == 4u * 256);
    CHECK(vol[1][0] == 4u * 256);
    CHECK(vol[0][1] == vol[1][0]);
}

TEST_CASE("comm_pattern symmetry on a uniform hierarchy") {
    auto topo = Topology::build_uniform(cubic_spec(), 2);
    auto map = assign(topo, 4);
    auto vol = comm_pattern(topo, map, {8, 8, 8});
    for (std::size_t a = 0; a < vol.size(); ++a)
        for (std::size_t b = 0; b < vol.size(); ++b) CHECK(vol[a][b] == vol[b][a]);
}

TEST_CASE("Z-order split cuts less than random permutations") {
    auto topo = Topology::build_uniform(cubic_spec(), 3);
    const int workers = 8;
    auto zmap = assign(topo, workers);
    const auto zcut = cut_volume(comm_pattern(topo, zmap, {8, 8, 8}));

    int wins = 0;
    const int trials = 5;
    for (int seed = 0; seed < trials; ++seed) {
        // Random permutation split with identical range sizes per level.
        auto rmap = assign(topo, workers);
        std::mt19937 rng(1234 + seed);
        for (int d = 0; d <= topo.max_depth(); ++d) {
            auto ids = topo.level_ids(d);
            std::shuffle(ids.begin(), ids.end(), rng);
            std::size_t pos = 0;
            const std::size_t n = ids.size();
            for (int w = 0; w < workers; ++w) {
                const std::size_t take = n / workers + (std::size_t(w) < n % workers ? 1 : 0);
                for (std::size_t i = 0; i < take; ++i, ++pos)
                    if (rmap.owner(ids[pos]) != w) rmap.migrate(ids[pos], w);
            }
        }
        const auto rcut = cut_volume(comm_pattern(topo, rmap, {8, 8, 8}));
        if (zcut <= rcut) ++wins;
    }
    CHECK(wins == trials);
}

TEST_CASE("server protocol: golden bytes and round-trips") {
    // query-owner for grid 7: fixed little-endian layout.
    proto::Request req{proto::Kind::QueryOwner, 7, 0};
    const auto bytes = proto::encode_request(req);
    REQUIRE(bytes.size() == 24);
    const std::vector<std::uint8_t> golden = {0x42, 0x46, 0x4E, 0x53, 0x01, 0x00, 0x01, 0x00,
                                              0x07, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                                              0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
    CHECK(bytes == golden);

    const auto back = proto::decode_request(bytes);
    CHECK(back.kind == proto::Kind::QueryOwner);
    CHECK(back.arg0 == 7);

    proto::Response resp;
    resp.kind = proto::Kind::FetchPattern;
    resp.generation = 3;
    resp.payload = {2, 0, 512, 512, 0};
    const auto rb = proto::encode_response(resp);
    const auto rback = proto::decode_response(rb);
    CHECK(rback.kind == resp.kind);
    CHECK(rback.status == proto::Status::Ok);
    CHECK(rback.generation == 3);
    CHECK(rback.payload == resp.payload);

    CHECK_THROWS_AS(proto::decode_request({1, 2, 3}), IoError);
}

TEST_CASE("neighbourhood server state machine") {
    auto topo = Topology::build_uniform(cubic_spec(), 1);
    NeighbourhoodServer server(topo, assign(topo, 2));

    const GridId g = topo.level_ids(1).front();
    auto resp = proto::decode_response(
        server.handle(proto::encode_request({proto::Kind::QueryOwner, g, 0})));
    REQUIRE(resp.status == proto::Status::Ok);
    CHECK(resp.payload == std::vector<std::uint64_t>{0});

    resp = proto::decode_response(
        server.handle(proto::encode_request({proto::Kind::RequestMigrate, g, 1})));
    REQUIRE(resp.status == proto::Status::Ok);
    CHECK(resp.payload == std::vector<std::uint64_t>{1});
    CHECK(resp.generation == 1);

    resp = proto::decode_response(
        server.handle(proto::encode_request({proto::Kind::QueryOwner, g, 0})));
    CHECK(resp.payload == std::vector<std::uint64_t>{1});

    resp = proto::decode_response(server.handle(
        proto::encode_request({proto::Kind::FetchPattern, proto::pack_block_size({8, 8, 8}), 0})));
    REQUIRE(resp.status == proto::Status::Ok);
    REQUIRE(resp.payload.size() == 1 + 4);
    CHECK(resp.payload[0] == 2);

    // Unknown grid id.
    resp = proto::decode_response(
        server.handle(proto::encode_request({proto::Kind::QueryOwner, 999, 0})));
    CHECK(resp.status == proto::Status::NotFound);
}
