#include "pcmg/distgen.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pcmg/util.hpp"

namespace pcmg {
namespace {

constexpr char kMagic[4] = {'P', 'C', 'D', 'G'};
constexpr std::size_t kHeaderLen = 10;  // magic + version + type + length
constexpr std::size_t kMaxPayload = 64u << 20;
constexpr int kBatch = 512;  // samples per SAMPLES frame

// Thrown to simulate a worker crash: the connection is dropped with no DONE.
struct InjectedFailure {};

[[noreturn]] void sys_fail(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

void write_all(int fd, const unsigned char* p, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      sys_fail("send");
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

// false = clean EOF before any byte; mid-buffer EOF throws.
bool read_all(int fd, unsigned char* p, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, p + got, n - got, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      sys_fail("recv");
    }
    if (r == 0) {
      if (got == 0) return false;
      throw std::runtime_error("connection closed mid-frame");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void check_header(const unsigned char* h, std::uint8_t& type, std::uint32_t& len) {
  if (std::memcmp(h, kMagic, 4) != 0)
    throw std::runtime_error("bad frame magic");
  if (h[4] != kProtoVersion)
    throw std::runtime_error("unsupported protocol version " +
                             std::to_string(int(h[4])));
  type = h[5];
  len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(h[6 + i]) << (8 * i);
  if (len > kMaxPayload) throw std::runtime_error("oversized frame payload");
}

std::optional<Frame> try_recv_frame(int fd) {
  unsigned char h[kHeaderLen];
  if (!read_all(fd, h, kHeaderLen)) return std::nullopt;
  Frame f;
  std::uint32_t len = 0;
  check_header(h, f.type, len);
  f.payload.resize(len);
  if (len > 0 && !read_all(fd, f.payload.data(), len))
    throw std::runtime_error("connection closed mid-frame");
  return f;
}

}  // namespace

std::vector<unsigned char> encode_frame(const Frame& f) {
  ByteWriter w;
  w.bytes(kMagic, 4);
  w.u8(kProtoVersion);
  w.u8(f.type);
  w.u32(static_cast<std::uint32_t>(f.payload.size()));
  w.bytes(f.payload.data(), f.payload.size());
  return std::move(w.data);
}

std::size_t decode_frame(const unsigned char* data, std::size_t len, Frame& out) {
  if (len < kHeaderLen) throw std::runtime_error("truncated frame header");
  std::uint32_t plen = 0;
  check_header(data, out.type, plen);
  if (len < kHeaderLen + plen) throw std::runtime_error("truncated frame payload");
  out.payload.assign(data + kHeaderLen, data + kHeaderLen + plen);
  return kHeaderLen + plen;
}

std::vector<unsigned char> encode_assign(const WorkAssignment& a) {
  ByteWriter w;
  w.u64(a.seed);
  w.u32(a.begin);
  w.u32(a.end);
  w.u8(static_cast<std::uint8_t>(a.req.direction));
  w.u8(static_cast<std::uint8_t>(a.req.origin));
  w.f64(a.req.magnitude_kw);
  w.u64(a.scenario_digest);
  w.u32(static_cast<std::uint32_t>(a.scenario_text.size()));
  w.bytes(a.scenario_text.data(), a.scenario_text.size());
  return std::move(w.data);
}

WorkAssignment decode_assign(const std::vector<unsigned char>& payload) {
  ByteReader r(payload.data(), payload.size());
  WorkAssignment a;
  a.seed = r.u64();
  a.begin = r.u32();
  a.end = r.u32();
  a.req.direction = static_cast<Direction>(r.u8());
  a.req.origin = static_cast<Origin>(r.u8());
  a.req.magnitude_kw = r.f64();
  a.scenario_digest = r.u64();
  const std::uint32_t n = r.u32();
  r.need(n);
  a.scenario_text.assign(reinterpret_cast<const char*>(payload.data()) + r.pos, n);
  r.pos += n;
  if (!r.done()) throw std::runtime_error("trailing bytes in assignment");
  if (a.end < a.begin) throw std::runtime_error("assignment range reversed");
  return a;
}

std::vector<unsigned char> encode_samples(const std::vector<LabeledSample>& batch,
                                          std::size_t attr_count) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(batch.size()));
  w.u32(static_cast<std::uint32_t>(attr_count));
  for (const LabeledSample& s : batch) {
    if (s.attrs.size() != attr_count)
      throw std::runtime_error("sample attribute count mismatch");
    w.u32(s.sample_index);
    w.u8(s.feasible ? 1 : 0);
    w.f64(s.profit);
    for (double a : s.attrs) w.f64(a);
  }
  return std::move(w.data);
}

std::vector<LabeledSample> decode_samples(const std::vector<unsigned char>& payload,
                                          std::size_t attr_count) {
  ByteReader r(payload.data(), payload.size());
  const std::uint32_t count = r.u32();
  const std::uint32_t attrs = r.u32();
  if (attrs != attr_count)
    throw std::runtime_error("worker streamed " + std::to_string(attrs) +
                             " attributes per sample, expected " +
                             std::to_string(attr_count));
  std::vector<LabeledSample> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    LabeledSample s;
    s.sample_index = r.u32();
    s.feasible = r.u8() != 0;
    s.profit = r.f64();
    s.attrs.resize(attr_count);
    for (std::size_t k = 0; k < attr_count; ++k) s.attrs[k] = r.f64();
    s.label = false;
    out.push_back(std::move(s));
  }
  if (!r.done()) throw std::runtime_error("trailing bytes in samples frame");
  return out;
}

std::vector<unsigned char> encode_done(const GenerationDiagnostics& diag,
                                       const std::vector<std::uint32_t>& skipped) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(diag.attempted));
  w.u32(static_cast<std::uint32_t>(diag.kept));
  w.u32(static_cast<std::uint32_t>(diag.skipped_allocation));
  w.u32(static_cast<std::uint32_t>(diag.pf_not_converged));
  w.u32(static_cast<std::uint32_t>(diag.constraint_infeasible));
  w.f64(diag.max_mismatch_kw);
  w.u32(static_cast<std::uint32_t>(skipped.size()));
  for (std::uint32_t i : skipped) w.u32(i);
  return std::move(w.data);
}

void decode_done(const std::vector<unsigned char>& payload,
                 GenerationDiagnostics& diag, std::vector<std::uint32_t>& skipped) {
  ByteReader r(payload.data(), payload.size());
  diag.attempted = static_cast<int>(r.u32());
  diag.kept = static_cast<int>(r.u32());
  diag.skipped_allocation = static_cast<int>(r.u32());
  diag.pf_not_converged = static_cast<int>(r.u32());
  diag.constraint_infeasible = static_cast<int>(r.u32());
  diag.max_mismatch_kw = r.f64();
  const std::uint32_t n = r.u32();
  skipped.clear();
  skipped.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) skipped.push_back(r.u32());
  if (!r.done()) throw std::runtime_error("trailing bytes in done frame");
}

std::vector<unsigned char> encode_error(const std::string& message) {
  ByteWriter w;
  w.str(message.substr(0, 60000));
  return std::move(w.data);
}

std::string decode_error(const std::vector<unsigned char>& payload) {
  ByteReader r(payload.data(), payload.size());
  return r.str();
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> partition_ranges(
    std::uint32_t n, int workers) {
  if (workers < 1)
    throw std::invalid_argument("partition_ranges: need at least one worker");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  const std::uint32_t w = static_cast<std::uint32_t>(workers);
  const std::uint32_t base = n / w, extra = n % w;
  std::uint32_t at = 0;
  for (std::uint32_t i = 0; i < w; ++i) {
    const std::uint32_t len = base + (i < extra ? 1 : 0);
    out.emplace_back(at, at + len);
    at += len;
  }
  return out;
}

void send_frame(int fd, const Frame& f) {
  const auto bytes = encode_frame(f);
  write_all(fd, bytes.data(), bytes.size());
}

Frame recv_frame(int fd) {
  auto f = try_recv_frame(fd);
  if (!f) throw std::runtime_error("connection closed");
  return std::move(*f);
}

// ---------------------------------------------------------------------------
// worker side
// ---------------------------------------------------------------------------

int open_worker_listener(int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) sys_fail("socket");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    ::close(fd);
    sys_fail("bind");
  }
  if (::listen(fd, 16) < 0) {
    ::close(fd);
    sys_fail("listen");
  }
  return fd;
}

int listener_port(int listen_fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len) < 0)
    sys_fail("getsockname");
  return ntohs(addr.sin_port);
}

namespace {

// Streams one assigned range back; throws InjectedFailure to simulate a crash
// once `streamed` would pass opt.fail_after.
void handle_assign(int fd, const WorkAssignment& a, const WorkerOptions& opt,
                   int& streamed) {
  const Scenario s = parse_scenario(a.scenario_text);
  const std::uint64_t digest = scenario_digest(s);
  if (digest != a.scenario_digest)
    throw std::runtime_error("scenario digest mismatch: assignment says " +
                             hex64(a.scenario_digest) + ", document hashes to " +
                             hex64(digest));

  GenerationDiagnostics diag;
  const std::vector<LabeledSample> samples =
      draw_range(s, a.req, a.begin, a.end, a.seed, diag);
  const std::size_t attr_count = attr_schema(s).size();

  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t take = std::min<std::size_t>(kBatch, samples.size() - i);
    bool fail_now = false;
    if (opt.fail_after >= 0) {
      const std::size_t allowed =
          streamed >= opt.fail_after
              ? 0
              : static_cast<std::size_t>(opt.fail_after - streamed);
      if (take >= allowed) {
        take = allowed;
        fail_now = true;
      }
    }
    if (take > 0) {
      const std::vector<LabeledSample> batch(samples.begin() + i,
                                             samples.begin() + i + take);
      send_frame(fd, Frame{kMsgSamples, encode_samples(batch, attr_count)});
      streamed += static_cast<int>(take);
      i += take;
    }
    if (fail_now) throw InjectedFailure{};
  }
  if (opt.fail_after >= 0 && samples.empty() && streamed >= opt.fail_after)
    throw InjectedFailure{};

  std::vector<std::uint32_t> skipped;
  std::size_t k = 0;
  for (std::uint32_t idx = a.begin; idx < a.end; ++idx) {
    if (k < samples.size() && samples[k].sample_index == idx)
      ++k;
    else
      skipped.push_back(idx);
  }
  send_frame(fd, Frame{kMsgDone, encode_done(diag, skipped)});
}

}  // namespace

void serve_worker(int listen_fd, const WorkerOptions& opt) {
  for (;;) {
    const int fd = ::accept(listen_fd, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      ::close(listen_fd);
      sys_fail("accept");
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    int streamed = 0;
    try {
      send_frame(fd, Frame{kMsgHello, {}});
      for (;;) {
        auto f = try_recv_frame(fd);
        if (!f) break;  // coordinator is done with this connection
        if (f->type == kMsgAssign) {
          handle_assign(fd, decode_assign(f->payload), opt, streamed);
        } else {
          send_frame(fd, Frame{kMsgError,
                               encode_error("unexpected message type " +
                                            std::to_string(int(f->type)))});
          break;
        }
      }
    } catch (const InjectedFailure&) {
      // drop the connection with no DONE, like a crash would
    } catch (const std::exception& e) {
      try {
        send_frame(fd, Frame{kMsgError, encode_error(e.what())});
      } catch (...) {
      }
    }
    ::close(fd);
    if (opt.once) break;
  }
  ::close(listen_fd);
}

void run_worker(const WorkerOptions& opt) {
  const int listen_fd = open_worker_listener(opt.port);
  std::printf("pcdg worker listening on %d\n", listener_port(listen_fd));
  std::fflush(stdout);
  serve_worker(listen_fd, opt);
}

// ---------------------------------------------------------------------------
// coordinator side
// ---------------------------------------------------------------------------

namespace {

int connect_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos)
    throw std::runtime_error("endpoint '" + endpoint + "' is not host:port");
  const std::string host = endpoint.substr(0, colon);
  const std::string port = endpoint.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0)
    throw std::runtime_error("resolve '" + endpoint + "': " + gai_strerror(rc));
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw std::runtime_error("cannot connect to " + endpoint);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

struct RangeResult {
  std::vector<LabeledSample> samples;
  GenerationDiagnostics diag;
  std::vector<std::uint32_t> skipped;
};

RangeResult fetch_range(int fd, const WorkAssignment& a, std::size_t attr_count) {
  Frame hello = recv_frame(fd);
  if (hello.type != kMsgHello)
    throw std::runtime_error("worker did not greet with HELLO");
  send_frame(fd, Frame{kMsgAssign, encode_assign(a)});

  RangeResult r;
  for (;;) {
    Frame f = recv_frame(fd);
    if (f.type == kMsgSamples) {
      auto batch = decode_samples(f.payload, attr_count);
      r.samples.insert(r.samples.end(), std::make_move_iterator(batch.begin()),
                       std::make_move_iterator(batch.end()));
    } else if (f.type == kMsgDone) {
      decode_done(f.payload, r.diag, r.skipped);
      break;
    } else if (f.type == kMsgError) {
      throw std::runtime_error("worker error: " + decode_error(f.payload));
    } else {
      throw std::runtime_error("unexpected frame type " +
                               std::to_string(int(f.type)));
    }
  }

  // Completeness: kept and skipped indices must tile [begin, end) exactly.
  std::vector<std::uint32_t> all;
  all.reserve(r.samples.size() + r.skipped.size());
  for (const LabeledSample& s : r.samples) all.push_back(s.sample_index);
  all.insert(all.end(), r.skipped.begin(), r.skipped.end());
  std::sort(all.begin(), all.end());
  if (all.size() != a.end - a.begin)
    throw std::runtime_error("range incomplete: worker reported " +
                             std::to_string(all.size()) + " of " +
                             std::to_string(a.end - a.begin) + " indices");
  for (std::uint32_t i = 0; i < all.size(); ++i)
    if (all[i] != a.begin + i)
      throw std::runtime_error("range incomplete: index " +
                               std::to_string(a.begin + i) +
                               " neither kept nor skipped");
  return r;
}

}  // namespace

LearningSet run_distributed(const Scenario& s, const BalancingRequirement& req,
                            int n, std::uint64_t seed,
                            const std::vector<std::string>& endpoints) {
  if (n <= 0)
    throw std::invalid_argument("run_distributed: n must be positive");
  if (endpoints.empty())
    throw std::invalid_argument("run_distributed: no worker endpoints");

  const std::string text = canonical_text(s);
  const std::uint64_t digest = scenario_digest(s);
  const std::vector<std::string> attr_names = attr_schema(s);
  const auto ranges =
      partition_ranges(static_cast<std::uint32_t>(n),
                       static_cast<int>(endpoints.size()));
  const std::size_t w = endpoints.size();

  std::vector<std::optional<RangeResult>> results(ranges.size());
  std::vector<std::string> errors(w);
  std::vector<char> alive(w, 1);

  auto attempt = [&](std::size_t worker, std::size_t range_idx) {
    const auto [b, e] = ranges[range_idx];
    const WorkAssignment a{seed, b, e, req, digest, text};
    int fd = -1;
    try {
      fd = connect_endpoint(endpoints[worker]);
      const auto t0 = std::chrono::steady_clock::now();
      RangeResult r = fetch_range(fd, a, attr_names.size());
      const std::chrono::duration<double> dt =
          std::chrono::steady_clock::now() - t0;
      std::fprintf(stderr, "[timing] range [%u,%u) on %s: %.3f s\n", b, e,
                   endpoints[worker].c_str(), dt.count());
      ::close(fd);
      results[range_idx] = std::move(r);
    } catch (const std::exception& ex) {
      if (fd >= 0) ::close(fd);
      errors[worker] = ex.what();
      alive[worker] = 0;
    }
  };

  // First pass: range i to endpoint i, in parallel.
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (ranges[i].first == ranges[i].second) {
      results[i] = RangeResult{};
      continue;
    }
    threads.emplace_back(attempt, i, i);
  }
  for (auto& t : threads) t.join();

  // Failed ranges move whole to a surviving endpoint; partial output from the
  // failed attempt was confined to its discarded RangeResult.
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    while (!results[i]) {
      std::size_t survivor = w;
      for (std::size_t k = 0; k < w; ++k)
        if (alive[k]) {
          survivor = k;
          break;
        }
      if (survivor == w) {
        std::ostringstream msg;
        msg << "run_distributed: every worker failed;";
        for (std::size_t k = 0; k < w; ++k)
          msg << " [" << endpoints[k] << "] "
              << (errors[k].empty() ? "no error recorded" : errors[k]) << ";";
        throw std::runtime_error(msg.str());
      }
      attempt(survivor, i);
    }
  }

  LearningSet ls;
  ls.attr_names = attr_names;
  ls.seed = seed;
  ls.stream = stream_for(req);
  ls.req = req;
  ls.scenario_digest = digest;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    RangeResult& r = *results[i];
    ls.samples.insert(ls.samples.end(),
                      std::make_move_iterator(r.samples.begin()),
                      std::make_move_iterator(r.samples.end()));
    ls.diag.attempted += r.diag.attempted;
    ls.diag.kept += r.diag.kept;
    ls.diag.skipped_allocation += r.diag.skipped_allocation;
    ls.diag.pf_not_converged += r.diag.pf_not_converged;
    ls.diag.constraint_infeasible += r.diag.constraint_infeasible;
    ls.diag.max_mismatch_kw = std::max(ls.diag.max_mismatch_kw, r.diag.max_mismatch_kw);
  }
  if (ls.diag.skipped_allocation * 10 > n * 9) {
    std::ostringstream msg;
    msg << "run_distributed: allocation sampler skipped "
        << ls.diag.skipped_allocation << " of " << n
        << " draws; the requirement is outside the portfolio's flexibility";
    throw std::runtime_error(msg.str());
  }
  return ls;
}

}  // namespace pcmg
