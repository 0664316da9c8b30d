#include "eschil/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace eschil {

namespace wire {

namespace {

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0]) | static_cast<std::uint16_t>(p[1]) << 8;
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

constexpr std::size_t kHeaderSize = 4 + 2 + 2 + 8 + 2;

}  // namespace

std::vector<std::uint8_t> encode(const Frame& frame) {
    std::vector<std::uint8_t> b;
    b.reserve(kHeaderSize + 8 * frame.payload.size());
    put_u32(b, kMagic);
    put_u16(b, kVersion);
    put_u16(b, frame.kind);
    put_u64(b, frame.cycle);
    put_u16(b, static_cast<std::uint16_t>(frame.payload.size()));
    for (double v : frame.payload) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(b, bits);
    }
    return b;
}

std::size_t decode(const std::uint8_t* data, std::size_t size, Frame& out) {
    if (size < kHeaderSize) return 0;
    if (get_u32(data) != kMagic) {
        throw SimError("controller", "malformed frame: bad magic");
    }
    const std::uint16_t version = get_u16(data + 4);
    if (version != kVersion) {
        throw SimError("controller",
                       "protocol version mismatch: got " + std::to_string(version));
    }
    const std::uint16_t kind = get_u16(data + 6);
    const std::uint64_t cycle = get_u64(data + 8);
    const std::uint16_t count = get_u16(data + 16);
    const std::size_t total = kHeaderSize + 8ull * count;
    if (size < total) return 0;
    out.kind = kind;
    out.cycle = cycle;
    out.payload.resize(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        const std::uint64_t bits = get_u64(data + kHeaderSize + 8ull * i);
        std::memcpy(&out.payload[i], &bits, 8);
    }
    return total;
}

namespace {

class TcpStream : public ByteStream {
public:
    explicit TcpStream(int fd) : fd_(fd) {}
    ~TcpStream() override {
        if (fd_ >= 0) ::close(fd_);
    }

    void write_all(const std::uint8_t* data, std::size_t size) override {
        while (size > 0) {
            const ssize_t n = ::send(fd_, data, size, MSG_NOSIGNAL);
            if (n <= 0) {
                throw SimError("controller", "connection lost while sending");
            }
            data += n;
            size -= static_cast<std::size_t>(n);
        }
    }

    std::size_t read_some(std::uint8_t* data, std::size_t size) override {
        const ssize_t n = ::recv(fd_, data, size, 0);
        if (n < 0) throw SimError("controller", "connection error while receiving");
        return static_cast<std::size_t>(n);
    }

private:
    int fd_;
};

}  // namespace

std::unique_ptr<ByteStream> tcp_connect(const std::string& endpoint) {
    std::string host = "127.0.0.1";
    std::string port_str = endpoint;
    const auto colon = endpoint.rfind(':');
    if (colon != std::string::npos) {
        host = endpoint.substr(0, colon);
        port_str = endpoint.substr(colon + 1);
    }
    const int port = std::stoi(port_str);

    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw SimError("controller", "cannot create socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw SimError("controller", "bad endpoint host '" + host + "'");
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        throw SimError("controller", "cannot connect to " + endpoint);
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return std::make_unique<TcpStream>(fd);
}

TcpListener::TcpListener() {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw SimError("controller", "cannot create listener socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(fd_, 1) != 0) {
        ::close(fd_);
        throw SimError("controller", "cannot bind loopback listener");
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<ByteStream> TcpListener::accept() {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw SimError("controller", "accept failed");
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return std::make_unique<TcpStream>(fd);
}

void run_echo_peer(ByteStream& stream, std::size_t gate_count, double duty, double phase,
                   double carrier_period, std::uint64_t cycles) {
    std::vector<std::uint8_t> buffer;
    std::uint8_t chunk[4096];
    std::uint64_t served = 0;
    while (cycles == 0 || served < cycles) {
        Frame frame;
        std::size_t consumed = buffer.empty() ? 0 : decode(buffer.data(), buffer.size(), frame);
        if (consumed == 0) {
            const std::size_t n = stream.read_some(chunk, sizeof chunk);
            if (n == 0) return;
            buffer.insert(buffer.end(), chunk, chunk + n);
            continue;
        }
        buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(consumed));
        if (frame.kind != kKindSyncA) continue;

        Frame reply;
        reply.kind = kKindSyncB;
        reply.cycle = frame.cycle;
        for (std::size_t g = 0; g < gate_count; ++g) {
            reply.payload.push_back(duty);
            reply.payload.push_back(phase);
        }
        reply.payload.push_back(carrier_period);
        const auto bytes = encode(reply);
        stream.write_all(bytes.data(), bytes.size());
        ++served;
    }
}

}  // namespace wire

ExternalController::ExternalController(std::unique_ptr<wire::ByteStream> stream,
                                       PwmConfig gate_template)
    : stream_(std::move(stream)), template_(std::move(gate_template)) {}

wire::Frame ExternalController::exchange(std::uint64_t k, const std::vector<Real>& samples) {
    wire::Frame out;
    out.kind = wire::kKindSyncA;
    out.cycle = k;
    out.payload.assign(samples.begin(), samples.end());
    const auto bytes = wire::encode(out);
    stream_->write_all(bytes.data(), bytes.size());

    // Controller-frozen semantics: block until the peer's SyncB arrives.
    wire::Frame reply;
    std::uint8_t chunk[4096];
    while (true) {
        if (!rx_buffer_.empty()) {
            const std::size_t consumed = wire::decode(rx_buffer_.data(), rx_buffer_.size(), reply);
            if (consumed > 0) {
                rx_buffer_.erase(rx_buffer_.begin(),
                                 rx_buffer_.begin() + static_cast<std::ptrdiff_t>(consumed));
                return reply;
            }
        }
        const std::size_t n = stream_->read_some(chunk, sizeof chunk);
        if (n == 0) {
            throw SimError("controller", "connection closed by external controller", -1.0,
                           static_cast<std::int64_t>(k));
        }
        rx_buffer_.insert(rx_buffer_.end(), chunk, chunk + n);
    }
}

PwmConfig ExternalController::on_cycle(std::uint64_t k, Real, const std::vector<Real>& samples) {
    wire::Frame reply;
    try {
        reply = exchange(k, samples);
    } catch (const SimError& e) {
        if (e.cycle() >= 0) throw;
        throw SimError(e.module(), e.message(), -1.0, static_cast<std::int64_t>(k));
    }

    if (reply.kind != wire::kKindSyncB) {
        throw SimError("controller", "expected SyncB frame", -1.0, static_cast<std::int64_t>(k));
    }
    if (reply.cycle != k) {
        throw SimError("controller",
                       "SyncB cycle mismatch: got " + std::to_string(reply.cycle), -1.0,
                       static_cast<std::int64_t>(k));
    }
    const std::size_t expected = 2 * template_.gates.size() + 1;
    if (reply.payload.size() != expected) {
        throw SimError("controller", "malformed SyncB payload size", -1.0,
                       static_cast<std::int64_t>(k));
    }

    PwmConfig cfg = template_;
    const Real period = reply.payload.back();
    if (!(period > 0.0)) {
        throw SimError("controller", "malformed frame: carrier period must be > 0", -1.0,
                       static_cast<std::int64_t>(k));
    }
    for (std::size_t g = 0; g < cfg.gates.size(); ++g) {
        const Real duty = reply.payload[2 * g];
        const Real phase = reply.payload[2 * g + 1];
        if (duty < 0.0 || duty > 1.0 || phase < 0.0 || phase >= 1.0) {
            throw SimError("controller",
                           "malformed frame: duty/phase out of range on gate " + std::to_string(g),
                           -1.0, static_cast<std::int64_t>(k));
        }
        cfg.gates[g].duty = duty;
        cfg.gates[g].phase = phase;
        if (cfg.gates[g].complementary_of < 0) cfg.gates[g].period = period;
    }
    return cfg;
}

}  // namespace eschil
