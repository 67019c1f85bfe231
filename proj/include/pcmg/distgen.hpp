#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pcmg/lsgen.hpp"
#include "pcmg/scenario.hpp"

namespace pcmg {

// ---------------------------------------------------------------------------
// Wire protocol (docs/protocol.md). Every message is one frame:
//   'P' 'C' 'D' 'G' | u8 version | u8 type | u32 LE payload length | payload
// The worker sends HELLO on connect; the coordinator answers with ASSIGN; the
// worker streams SAMPLES batches and finishes the range with DONE (which
// carries the diagnostics and the skipped sample indices, so kept + skipped
// always reconstructs the assigned range exactly). Either side may send
// ERROR with a message before closing.
// ---------------------------------------------------------------------------
constexpr std::uint8_t kProtoVersion = 1;

enum MsgType : std::uint8_t {
  kMsgHello = 1,
  kMsgAssign = 2,
  kMsgSamples = 3,
  kMsgDone = 4,
  kMsgError = 5,
};

struct Frame {
  std::uint8_t type = 0;
  std::vector<unsigned char> payload;
};

std::vector<unsigned char> encode_frame(const Frame& f);
// Decodes one complete frame from a byte buffer; returns bytes consumed.
// Throws on bad magic, unsupported version, or oversized/truncated payloads.
std::size_t decode_frame(const unsigned char* data, std::size_t len, Frame& out);

struct WorkAssignment {
  std::uint64_t seed = 0;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;  // exclusive
  BalancingRequirement req;
  std::uint64_t scenario_digest = 0;
  std::string scenario_text;  // canonical scenario document
};

std::vector<unsigned char> encode_assign(const WorkAssignment& a);
WorkAssignment decode_assign(const std::vector<unsigned char>& payload);

std::vector<unsigned char> encode_samples(const std::vector<LabeledSample>& batch,
                                          std::size_t attr_count);
std::vector<LabeledSample> decode_samples(const std::vector<unsigned char>& payload,
                                          std::size_t attr_count);

std::vector<unsigned char> encode_done(const GenerationDiagnostics& diag,
                                       const std::vector<std::uint32_t>& skipped);
void decode_done(const std::vector<unsigned char>& payload,
                 GenerationDiagnostics& diag, std::vector<std::uint32_t>& skipped);

std::vector<unsigned char> encode_error(const std::string& message);
std::string decode_error(const std::vector<unsigned char>& payload);

// Contiguous near-even split of [0, n): the first n % workers ranges get one
// extra index. Ranges can be empty when workers > n.
std::vector<std::pair<std::uint32_t, std::uint32_t>> partition_ranges(
    std::uint32_t n, int workers);

// Blocking whole-frame I/O over a connected socket. recv_frame throws on
// EOF or protocol violations.
void send_frame(int fd, const Frame& f);
Frame recv_frame(int fd);

// ---------------------------------------------------------------------------
// Worker
// ---------------------------------------------------------------------------
struct WorkerOptions {
  int port = 0;         // 0 picks an ephemeral port
  int fail_after = -1;  // >= 0: hard-close each connection after streaming
                        // this many samples (failure injection for tests)
  bool once = false;    // exit after the first connection closes
};

// Opens a loopback listener; returns the listening fd. Throws on error.
int open_worker_listener(int port);
int listener_port(int listen_fd);

// Accept loop: handles one connection at a time, any number of assignments
// per connection. Never returns unless opt.once is set. Closes listen_fd.
void serve_worker(int listen_fd, const WorkerOptions& opt);

// open_worker_listener + a "listening on <port>" line on stdout + serve.
void run_worker(const WorkerOptions& opt);

// ---------------------------------------------------------------------------
// Coordinator: partitions the indices over the endpoints ("host:port"),
// collects the parts, and merges a learning set byte-identical to the
// single-process generate_ls. A failing worker's whole range is reassigned
// to a surviving endpoint and its partial output discarded; the run fails
// only when no endpoint survives.
// ---------------------------------------------------------------------------
LearningSet run_distributed(const Scenario& s, const BalancingRequirement& req,
                            int n, std::uint64_t seed,
                            const std::vector<std::string>& endpoints);

}  // namespace pcmg
