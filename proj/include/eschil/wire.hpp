#pragma once

#include "eschil/controller.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace eschil {

// Loopback wire protocol for an external controller process. Little-endian
// frames over a byte stream:
//   magic u32 = 0x45534348 ("ESCH"), version u16 = 1,
//   kind u16 (1 = SyncA, 2 = SyncB), cycle u64, payload count u16,
//   payload of 8-byte doubles.
// SyncA carries the sampled probe values in declared order; SyncB carries
// per-gate (duty, phase) pairs followed by one carrier period. Every SyncA
// must be answered by exactly one SyncB with the same cycle number.

namespace wire {

constexpr std::uint32_t kMagic = 0x45534348;
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kKindSyncA = 1;
constexpr std::uint16_t kKindSyncB = 2;

struct Frame {
    std::uint16_t kind = 0;
    std::uint64_t cycle = 0;
    std::vector<double> payload;
};

std::vector<std::uint8_t> encode(const Frame& frame);

/// Decode one frame from the buffer front. Returns the consumed byte count,
/// or 0 when more bytes are needed. Throws SimError("controller", ...) on a
/// malformed frame (bad magic or version mismatch).
std::size_t decode(const std::uint8_t* data, std::size_t size, Frame& out);

/// Blocking byte stream; the TCP implementation below and in-memory test
/// doubles both satisfy it.
class ByteStream {
public:
    virtual ~ByteStream() = default;
    virtual void write_all(const std::uint8_t* data, std::size_t size) = 0;
    /// Reads at least one byte, up to size; returns 0 on peer close.
    virtual std::size_t read_some(std::uint8_t* data, std::size_t size) = 0;
};

/// Connect to "host:port" over loopback TCP.
std::unique_ptr<ByteStream> tcp_connect(const std::string& endpoint);

/// Listening socket for test peers; accept() blocks for one connection.
class TcpListener {
public:
    TcpListener();  // binds 127.0.0.1 on an ephemeral port
    ~TcpListener();
    [[nodiscard]] int port() const { return port_; }
    std::unique_ptr<ByteStream> accept();

private:
    int fd_ = -1;
    int port_ = 0;
};

/// Serve one connection: answer every SyncA with a fixed-duty SyncB for
/// `gate_count` gates. Returns after `cycles` exchanges (or peer close when
/// cycles == 0).
void run_echo_peer(ByteStream& stream, std::size_t gate_count, double duty, double phase,
                   double carrier_period, std::uint64_t cycles = 0);

}  // namespace wire

/// Controller backed by an external peer over the wire protocol. Gate
/// carriers, polarity, pairing and dead time come from the template; the
/// peer supplies duty and phase per gate plus the carrier period.
class ExternalController : public CycleController {
public:
    ExternalController(std::unique_ptr<wire::ByteStream> stream, PwmConfig gate_template);

    PwmConfig initial_command() override { return template_; }
    PwmConfig on_cycle(std::uint64_t k, Real t, const std::vector<Real>& samples) override;

private:
    wire::Frame exchange(std::uint64_t k, const std::vector<Real>& samples);

    std::unique_ptr<wire::ByteStream> stream_;
    PwmConfig template_;
    std::vector<std::uint8_t> rx_buffer_;
};

}  // namespace eschil
