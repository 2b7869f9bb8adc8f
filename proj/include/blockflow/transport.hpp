#ifndef BLOCKFLOW_TRANSPORT_HPP_
#define BLOCKFLOW_TRANSPORT_HPP_
//! \file transport.hpp
//! \brief Typed in-process message transport between workers and the
//!        neighbourhood server: per-participant mailboxes with reliable,
//!        per-sender-ordered delivery, bulk-synchronous phase tagging, and
//!        payload accounting (which is how tests prove that no field data is
//!        ever addressed to the server).
//!
//! The interface is deliberately narrow (typed messages in, typed messages
//! out, a phase counter advanced at barriers) so a multi-process binding
//! could replace it without touching solver code.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <vector>

#include "blockflow/dgrid.hpp"
#include "blockflow/types.hpp"

namespace blockflow {

enum class MessageKind : std::uint8_t {
    HaloCopy,
    HaloFineToCoarse,
    HaloCoarseToFine,
    Restrict,
    Prolong,
    FieldMigration,
    ServerRecord,
};

//! One packed slab/patch addressed by its index in the exchange plan (or the
//! destination grid for vertical transfers).
struct SlabItem {
    std::uint32_t entry = 0;
    std::int64_t len1 = 0, len2 = 0;  // patch extents (coarse-to-fine only)
    std::vector<double> data;
};

struct Message {
    MessageKind kind = MessageKind::HaloCopy;
    int from = -1;
    std::uint64_t seq = 0;    // per-sender sequence number
    std::uint64_t phase = 0;  // transport phase at send time
    Var var = Var::P;
    std::vector<SlabItem> items;

    // FieldMigration payload
    GridId grid = kNoGrid;
    std::vector<std::pair<Var, std::vector<double>>> fields;

    // ServerRecord payload
    std::vector<std::uint8_t> record;
};

//! Mailboxes for ranks 0..P-1 plus the server at rank P. Delivery is reliable
//! and ordered per sender-receiver pair; drains sort by (sender, sequence) so
//! application order is deterministic.
class Transport {
  public:
    explicit Transport(int workers)
        : workers_(workers),
          boxes_(workers + 1),
          field_bytes_(workers + 1),
          sent_(workers + 1) {
        for (auto& b : field_bytes_) b.store(0);
        for (auto& c : sent_) c.store(0);
    }

    int workers() const { return workers_; }
    int server_rank() const { return workers_; }
    std::uint64_t phase() const { return phase_.load(std::memory_order_acquire); }

    //! Advanced exactly once per bulk-synchronous barrier (by one thread).
    void advance_phase() { phase_.fetch_add(1, std::memory_order_acq_rel); }

    void send(int from, int to, Message m) {
        m.from = from;
        m.seq = sent_[from].fetch_add(1, std::memory_order_relaxed);
        m.phase = phase();
        std::uint64_t bytes = 0;
        for (const SlabItem& s : m.items) bytes += s.data.size() * sizeof(double);
        for (const auto& [v, data] : m.fields) bytes += data.size() * sizeof(double);
        field_bytes_[to].fetch_add(bytes, std::memory_order_relaxed);
        Mailbox& box = boxes_[to];
        std::scoped_lock lock(box.mutex);
        box.messages.push_back(std::move(m));
    }

    //! Accounting hook for the synchronous server interface: the encoded
    //! record travels as a message but is handled in place.
    void count_server_record(std::size_t bytes) {
        server_record_bytes_.fetch_add(bytes, std::memory_order_relaxed);
    }
    std::uint64_t server_record_bytes() const {
        return server_record_bytes_.load(std::memory_order_relaxed);
    }

    //! Removes and returns all pending messages for `rank`, sorted by
    //! (sender, sequence). Asserts the bulk-synchronous contract: a drained
    //! message must have been sent in the immediately preceding phase.
    std::vector<Message> drain(int rank) {
        Mailbox& box = boxes_[rank];
        std::vector<Message> out;
        {
            std::scoped_lock lock(box.mutex);
            out.swap(box.messages);
        }
        const std::uint64_t now = phase();
        for (const Message& m : out)
            if (m.phase + 1 != now)
                throw PlanMismatch("transport: message crossed more than one barrier (sent phase " +
                                   std::to_string(m.phase) + ", drained at " + std::to_string(now) +
                                   ")");
        std::sort(out.begin(), out.end(), [](const Message& a, const Message& b) {
            return a.from != b.from ? a.from < b.from : a.seq < b.seq;
        });
        return out;
    }

    //! Field payload bytes ever addressed to a participant. The server's
    //! counter staying at zero is the "no data at the server" instrumentation.
    std::uint64_t field_bytes_to(int rank) const {
        return field_bytes_[rank].load(std::memory_order_relaxed);
    }

    std::uint64_t total_field_bytes() const {
        std::uint64_t t = 0;
        for (const auto& b : field_bytes_) t += b.load(std::memory_order_relaxed);
        return t;
    }

  private:
    struct Mailbox {
        std::mutex mutex;
        std::vector<Message> messages;
    };

    int workers_;
    std::vector<Mailbox> boxes_;
    std::vector<std::atomic<std::uint64_t>> field_bytes_;
    std::vector<std::atomic<std::uint64_t>> sent_;
    std::atomic<std::uint64_t> server_record_bytes_{0};
    std::atomic<std::uint64_t> phase_{1};
};

} // namespace blockflow

#endif // BLOCKFLOW_TRANSPORT_HPP_
