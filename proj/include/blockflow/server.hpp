#ifndef BLOCKFLOW_SERVER_HPP_
#define BLOCKFLOW_SERVER_HPP_
//! \file server.hpp
//! \brief The neighbourhood server: a coordinator that knows the full logical
//!        structure and the ownership map but never field data. Workers
//!        address it through a versioned, language-neutral record layout;
//!        in-process it is a state machine handling one request at a time.
//!
//! Record layout (all integers little-endian, fixed width):
//!
//!   request  := magic:u32 ("BFNS" = 0x534E4642) version:u16 kind:u16
//!               arg0:u64 arg1:u64
//!   response := magic:u32 version:u16 kind:u16 status:u32
//!               generation:u64 count:u64 payload:u64[count]
//!
//!   kind 1 query-owner     arg0 = grid id            payload = [owner rank]
//!   kind 2 request-migrate arg0 = grid id, arg1 = to payload = [new owner]
//!   kind 3 fetch-pattern   arg0 = block sx,sy,sz packed (21 bits each)
//!                          payload = [P, vol[0][0..P), vol[1][0..P), ...]
//!
//!   status 0 = ok, 1 = not found, 2 = invalid request
//!
//! The topology bootstrap uses the line-oriented text format of
//! Topology::write_text.

#include <cstdint>
#include <mutex>
#include <vector>

#include "blockflow/partition.hpp"
#include "blockflow/topology.hpp"
#include "blockflow/types.hpp"

namespace blockflow {
namespace proto {

inline constexpr std::uint32_t kMagic = 0x534E4642u;  // "BFNS"
inline constexpr std::uint16_t kVersion = 1;

enum class Kind : std::uint16_t { QueryOwner = 1, RequestMigrate = 2, FetchPattern = 3 };
enum class Status : std::uint32_t { Ok = 0, NotFound = 1, Invalid = 2 };

inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Reader {
    const std::vector<std::uint8_t>& b;
    std::size_t pos = 0;

    bool fits(std::size_t n) const { return pos + n <= b.size(); }
    std::uint16_t u16() {
        std::uint16_t v = static_cast<std::uint16_t>(b[pos] | (b[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
};

struct Request {
    Kind kind = Kind::QueryOwner;
    std::uint64_t arg0 = 0;
    std::uint64_t arg1 = 0;
};

struct Response {
    Kind kind = Kind::QueryOwner;
    Status status = Status::Ok;
    std::uint64_t generation = 0;
    std::vector<std::uint64_t> payload;
};

inline std::vector<std::uint8_t> encode_request(const Request& r) {
    std::vector<std::uint8_t> b;
    b.reserve(24);
    put_u32(b, kMagic);
    put_u16(b, kVersion);
    put_u16(b, static_cast<std::uint16_t>(r.kind));
    put_u64(b, r.arg0);
    put_u64(b, r.arg1);
    return b;
}

inline Request decode_request(const std::vector<std::uint8_t>& b) {
    Reader rd{b};
    if (!rd.fits(24)) throw IoError("server request: truncated record");
    if (rd.u32() != kMagic) throw IoError("server request: bad magic");
    if (rd.u16() != kVersion) throw IoError("server request: unsupported version");
    Request r;
    r.kind = static_cast<Kind>(rd.u16());
    r.arg0 = rd.u64();
    r.arg1 = rd.u64();
    return r;
}

inline std::vector<std::uint8_t> encode_response(const Response& r) {
    std::vector<std::uint8_t> b;
    b.reserve(28 + 8 * r.payload.size());
    put_u32(b, kMagic);
    put_u16(b, kVersion);
    put_u16(b, static_cast<std::uint16_t>(r.kind));
    put_u32(b, static_cast<std::uint32_t>(r.status));
    put_u64(b, r.generation);
    put_u64(b, r.payload.size());
    for (std::uint64_t v : r.payload) put_u64(b, v);
    return b;
}

inline Response decode_response(const std::vector<std::uint8_t>& b) {
    Reader rd{b};
    if (!rd.fits(28)) throw IoError("server response: truncated record");
    if (rd.u32() != kMagic) throw IoError("server response: bad magic");
    if (rd.u16() != kVersion) throw IoError("server response: unsupported version");
    Response r;
    r.kind = static_cast<Kind>(rd.u16());
    r.status = static_cast<Status>(rd.u32());
    r.generation = rd.u64();
    const std::uint64_t n = rd.u64();
    if (!rd.fits(8 * n)) throw IoError("server response: truncated payload");
    r.payload.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) r.payload.push_back(rd.u64());
    return r;
}

inline std::uint64_t pack_block_size(const Int3& s) {
    return (static_cast<std::uint64_t>(s.x) & 0x1FFFFF) |
           ((static_cast<std::uint64_t>(s.y) & 0x1FFFFF) << 21) |
           ((static_cast<std::uint64_t>(s.z) & 0x1FFFFF) << 42);
}
inline Int3 unpack_block_size(std::uint64_t v) {
    return {static_cast<std::int64_t>(v & 0x1FFFFF), static_cast<std::int64_t>((v >> 21) & 0x1FFFFF),
            static_cast<std::int64_t>((v >> 42) & 0x1FFFFF)};
}

} // namespace proto

//! Coordinator state machine. All mutation is serialised (one request at a
//! time); ownership queries take the same lock for simplicity since they are
//! cheap. Holds the topology by reference and the partition map by value.
class NeighbourhoodServer {
  public:
    NeighbourhoodServer(const Topology& topo, PartitionMap map)
        : topo_(topo), map_(std::move(map)) {}

    //! Message-interface entry point: decode, apply, encode.
    std::vector<std::uint8_t> handle(const std::vector<std::uint8_t>& request_bytes) {
        std::scoped_lock lock(mutex_);
        proto::Response resp;
        try {
            const proto::Request req = proto::decode_request(request_bytes);
            resp.kind = req.kind;
            switch (req.kind) {
                case proto::Kind::QueryOwner:
                    resp.payload = {static_cast<std::uint64_t>(map_.owner(req.arg0))};
                    break;
                case proto::Kind::RequestMigrate:
                    map_.migrate(req.arg0, static_cast<int>(req.arg1));
                    resp.payload = {static_cast<std::uint64_t>(map_.owner(req.arg0))};
                    break;
                case proto::Kind::FetchPattern: {
                    const auto pattern =
                        comm_pattern(topo_, map_, proto::unpack_block_size(req.arg0));
                    resp.payload.push_back(pattern.size());
                    for (const auto& row : pattern)
                        for (std::uint64_t v : row) resp.payload.push_back(v);
                    break;
                }
                default:
                    resp.status = proto::Status::Invalid;
            }
        } catch (const NotFound&) {
            resp.status = proto::Status::NotFound;
        } catch (const IoError&) {
            resp.status = proto::Status::Invalid;
        }
        resp.generation = map_.generation();
        return proto::encode_response(resp);
    }

    //! Read-side snapshot for the runtime (taken under the lock).
    PartitionMap snapshot() const {
        std::scoped_lock lock(mutex_);
        return map_;
    }

    std::uint64_t generation() const {
        std::scoped_lock lock(mutex_);
        return map_.generation();
    }

  private:
    const Topology& topo_;
    PartitionMap map_;
    mutable std::mutex mutex_;
};

} // namespace blockflow

#endif // BLOCKFLOW_SERVER_HPP_
