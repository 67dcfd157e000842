#pragma once

#include "hitchhike/error.hpp"
#include "hitchhike/ip.hpp"
#include "hitchhike/probe.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

namespace hitchhike::probe {

/// RFC 1071 one's-complement sum, folded, not inverted.
inline std::uint16_t ones_complement_sum(const std::uint8_t* data, std::size_t len) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < len; i += 2) sum += static_cast<std::uint32_t>(data[i] << 8 | data[i + 1]);
    if (len % 2) sum += static_cast<std::uint32_t>(data[len - 1] << 8);
    while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
    return static_cast<std::uint16_t>(sum);
}

inline std::uint16_t internet_checksum(const std::uint8_t* data, std::size_t len) {
    return static_cast<std::uint16_t>(~ones_complement_sum(data, len));
}

/// ICMP echo request whose checksum field equals `checksum` whatever the
/// sequence number: the first payload word absorbs the difference. Per-flow
/// load balancers hash the first four ICMP bytes, so a fixed checksum keeps
/// every probe of a flow on one path. `type` is 8 for ICMPv4, 128 for ICMPv6
/// (the kernel rewrites the v6 checksum, so v6 flows are keyed by identifier).
inline std::vector<std::uint8_t> build_icmp_echo(std::uint16_t identifier, std::uint16_t sequence, std::uint16_t checksum,
                                                 std::size_t payload_len = 32, std::uint8_t type = 8) {
    if (payload_len < 2) payload_len = 2;
    std::vector<std::uint8_t> pkt(8 + payload_len, 0);
    pkt[0] = type;
    pkt[1] = 0;
    pkt[2] = static_cast<std::uint8_t>(checksum >> 8);
    pkt[3] = static_cast<std::uint8_t>(checksum);
    pkt[4] = static_cast<std::uint8_t>(identifier >> 8);
    pkt[5] = static_cast<std::uint8_t>(identifier);
    pkt[6] = static_cast<std::uint8_t>(sequence >> 8);
    pkt[7] = static_cast<std::uint8_t>(sequence);
    for (std::size_t i = 10; i < pkt.size(); ++i) pkt[i] = static_cast<std::uint8_t>(0x40 + (i % 26));
    // Choose the compensating word so the whole message sums to 0xFFFF.
    std::uint32_t s = ones_complement_sum(pkt.data(), pkt.size());
    std::uint16_t w = static_cast<std::uint16_t>(~s);
    pkt[8] = static_cast<std::uint8_t>(w >> 8);
    pkt[9] = static_cast<std::uint8_t>(w);
    return pkt;
}

/// Probes over real sockets. ICMP needs CAP_NET_RAW; UDP and TCP probes use
/// fixed ports so the 5-tuple is constant per flow, and read ICMP errors from a
/// raw socket.
class RawTransport final : public Transport {
public:
    struct Options {
        std::uint16_t udp_base_port = 33434;
        std::uint16_t tcp_port = 80;
        std::uint16_t source_port_base = 40000;
    };

    RawTransport() : RawTransport(Options{}) {}
    explicit RawTransport(Options o) : opts_(o), identifier_(static_cast<std::uint16_t>(::getpid() & 0xFFFF)) {}

    std::optional<ProbeReply> send(const ProbeRequest& r) override {
        if (r.ttl < 1 || r.ttl > 255) throw TransportError("ttl out of range");
        switch (r.protocol) {
        case Protocol::icmp: return send_icmp(r);
        case Protocol::udp: return send_udp(r);
        case Protocol::tcp: return send_tcp(r);
        }
        return std::nullopt;
    }

private:
    class Fd {
    public:
        explicit Fd(int fd) : fd_(fd) {}
        Fd(const Fd&) = delete;
        Fd& operator=(const Fd&) = delete;
        ~Fd() {
            if (fd_ >= 0) ::close(fd_);
        }
        int get() const noexcept { return fd_; }

    private:
        int fd_;
    };

    static std::int64_t mono_us() {
        using namespace std::chrono;
        return duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count();
    }

    static void fill_sockaddr(const IpAddress& a, std::uint16_t port, sockaddr_storage& ss, socklen_t& len) {
        std::memset(&ss, 0, sizeof ss);
        if (a.is_v4()) {
            auto* sin = reinterpret_cast<sockaddr_in*>(&ss);
            sin->sin_family = AF_INET;
            sin->sin_port = htons(port);
            std::memcpy(&sin->sin_addr, a.bytes().data(), 4);
            len = sizeof(sockaddr_in);
        } else {
            auto* sin6 = reinterpret_cast<sockaddr_in6*>(&ss);
            sin6->sin6_family = AF_INET6;
            sin6->sin6_port = htons(port);
            std::memcpy(&sin6->sin6_addr, a.bytes().data(), 16);
            len = sizeof(sockaddr_in6);
        }
    }

    static IpAddress from_sockaddr(const sockaddr_storage& ss) {
        if (ss.ss_family == AF_INET) {
            const auto* sin = reinterpret_cast<const sockaddr_in*>(&ss);
            return IpAddress::from_bytes(IpAddress::Family::v4, reinterpret_cast<const std::uint8_t*>(&sin->sin_addr));
        }
        const auto* sin6 = reinterpret_cast<const sockaddr_in6*>(&ss);
        return IpAddress::from_bytes(IpAddress::Family::v6, reinterpret_cast<const std::uint8_t*>(&sin6->sin6_addr));
    }

    static int open_icmp(bool v4) {
        int fd = ::socket(v4 ? AF_INET : AF_INET6, SOCK_RAW, v4 ? int{IPPROTO_ICMP} : int{IPPROTO_ICMPV6});
        if (fd < 0) throw TransportError(std::string("raw ICMP socket: ") + std::strerror(errno));
        return fd;
    }

    static void set_ttl(int fd, bool v4, int ttl) {
        int rc = v4 ? ::setsockopt(fd, IPPROTO_IP, IP_TTL, &ttl, sizeof ttl)
                    : ::setsockopt(fd, IPPROTO_IPV6, IPV6_UNICAST_HOPS, &ttl, sizeof ttl);
        if (rc != 0) throw TransportError(std::string("setting TTL: ") + std::strerror(errno));
    }

    struct IcmpView {
        std::uint8_t type = 0, code = 0;
        const std::uint8_t* body = nullptr; // after the 8-byte ICMP header
        std::size_t body_len = 0;
        const std::uint8_t* header = nullptr;
    };

    // v4 raw sockets deliver the IP header; v6 ones do not.
    static std::optional<IcmpView> icmp_view(const std::uint8_t* buf, std::size_t n, bool v4) {
        std::size_t off = 0;
        if (v4) {
            if (n < 20) return std::nullopt;
            off = static_cast<std::size_t>(buf[0] & 0x0F) * 4;
        }
        if (n < off + 8) return std::nullopt;
        return IcmpView{buf[off], buf[off + 1], buf + off + 8, n - off - 8, buf + off};
    }

    // Quoted original datagram inside an ICMP error: returns (protocol, pointer
    // to the quoted transport header, its length).
    struct Quoted {
        std::uint8_t protocol = 0;
        const std::uint8_t* l4 = nullptr;
        std::size_t len = 0;
    };

    static std::optional<Quoted> quoted(const IcmpView& v, bool v4) {
        if (v4) {
            if (v.body_len < 20) return std::nullopt;
            std::size_t ihl = static_cast<std::size_t>(v.body[0] & 0x0F) * 4;
            if (v.body_len < ihl + 8) return std::nullopt;
            return Quoted{v.body[9], v.body + ihl, v.body_len - ihl};
        }
        if (v.body_len < 40 + 8) return std::nullopt;
        return Quoted{v.body[6], v.body + 40, v.body_len - 40};
    }

    static bool is_time_exceeded(const IcmpView& v, bool v4) { return v4 ? v.type == 11 : v.type == 3; }
    static bool is_unreachable(const IcmpView& v, bool v4) { return v4 ? v.type == 3 : v.type == 1; }

    template <class Match>
    std::optional<ProbeReply> await(int fd, bool v4, std::int64_t sent_us, std::int64_t timeout_us, Match match) {
        std::array<std::uint8_t, 2048> buf{};
        for (;;) {
            std::int64_t left = sent_us + timeout_us - mono_us();
            if (left <= 0) return std::nullopt;
            pollfd p{fd, POLLIN, 0};
            int rc = ::poll(&p, 1, static_cast<int>((left + 999) / 1000));
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("poll: ") + std::strerror(errno));
            }
            if (rc == 0) return std::nullopt;
            sockaddr_storage from{};
            socklen_t fl = sizeof from;
            auto n = ::recvfrom(fd, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &fl);
            std::int64_t now = mono_us();
            if (n <= 0) continue;
            auto view = icmp_view(buf.data(), static_cast<std::size_t>(n), v4);
            if (!view) continue;
            if (auto kind = match(*view)) return ProbeReply{from_sockaddr(from), std::max<std::int64_t>(1, now - sent_us), *kind};
        }
    }

    std::optional<ProbeReply> send_icmp(const ProbeRequest& r) {
        bool v4 = r.target.is_v4();
        Fd fd(open_icmp(v4));
        set_ttl(fd.get(), v4, r.ttl);
        auto seq = static_cast<std::uint16_t>(seq_.fetch_add(1));
        auto id = static_cast<std::uint16_t>(identifier_ ^ (v4 ? 0 : r.flow_id));
        auto pkt = build_icmp_echo(id, seq, static_cast<std::uint16_t>(r.flow_id), 32, v4 ? 8 : 128);
        sockaddr_storage ss{};
        socklen_t len = 0;
        fill_sockaddr(r.target, 0, ss, len);
        std::int64_t sent = mono_us();
        if (::sendto(fd.get(), pkt.data(), pkt.size(), 0, reinterpret_cast<sockaddr*>(&ss), len) < 0)
            throw TransportError(std::string("sendto: ") + std::strerror(errno));
        auto ours = [&](const std::uint8_t* h) {
            return (h[4] << 8 | h[5]) == id && (h[6] << 8 | h[7]) == seq;
        };
        return await(fd.get(), v4, sent, r.timeout_us, [&](const IcmpView& v) -> std::optional<ReplyKind> {
            if ((v4 && v.type == 0) || (!v4 && v.type == 129)) {
                if (ours(v.header)) return ReplyKind::echo_reply;
                return std::nullopt;
            }
            if (is_time_exceeded(v, v4)) {
                auto q = quoted(v, v4);
                if (q && q->len >= 8 && ours(q->l4)) return ReplyKind::ttl_expired;
            }
            return std::nullopt;
        });
    }

    std::uint16_t source_port(std::uint32_t flow_id) const {
        return static_cast<std::uint16_t>(opts_.source_port_base + flow_id % 16384);
    }

    std::optional<ProbeReply> send_udp(const ProbeRequest& r) {
        bool v4 = r.target.is_v4();
        Fd icmp(open_icmp(v4));
        Fd udp(::socket(v4 ? AF_INET : AF_INET6, SOCK_DGRAM, 0));
        if (udp.get() < 0) throw TransportError(std::string("UDP socket: ") + std::strerror(errno));
        int one = 1;
        ::setsockopt(udp.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_storage local{};
        socklen_t llen = 0;
        fill_sockaddr(v4 ? *IpAddress::parse("0.0.0.0") : *IpAddress::parse("::"), source_port(r.flow_id), local, llen);
        if (::bind(udp.get(), reinterpret_cast<sockaddr*>(&local), llen) != 0)
            throw TransportError(std::string("bind: ") + std::strerror(errno));
        set_ttl(udp.get(), v4, r.ttl);
        sockaddr_storage ss{};
        socklen_t len = 0;
        std::uint16_t dport = opts_.udp_base_port;
        fill_sockaddr(r.target, dport, ss, len);
        std::array<std::uint8_t, 12> payload{};
        std::int64_t sent = mono_us();
        if (::sendto(udp.get(), payload.data(), payload.size(), 0, reinterpret_cast<sockaddr*>(&ss), len) < 0)
            throw TransportError(std::string("sendto: ") + std::strerror(errno));
        std::uint16_t sport = source_port(r.flow_id);
        return await(icmp.get(), v4, sent, r.timeout_us, [&](const IcmpView& v) -> std::optional<ReplyKind> {
            bool te = is_time_exceeded(v, v4), un = is_unreachable(v, v4);
            if (!te && !un) return std::nullopt;
            auto q = quoted(v, v4);
            if (!q || q->protocol != IPPROTO_UDP) return std::nullopt;
            if ((q->l4[0] << 8 | q->l4[1]) != sport || (q->l4[2] << 8 | q->l4[3]) != dport) return std::nullopt;
            return te ? ReplyKind::ttl_expired : ReplyKind::port_unreachable;
        });
    }

    std::optional<ProbeReply> send_tcp(const ProbeRequest& r) {
        bool v4 = r.target.is_v4();
        Fd icmp(open_icmp(v4));
        Fd tcp(::socket(v4 ? AF_INET : AF_INET6, SOCK_STREAM, 0));
        if (tcp.get() < 0) throw TransportError(std::string("TCP socket: ") + std::strerror(errno));
        int one = 1;
        ::setsockopt(tcp.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_storage local{};
        socklen_t llen = 0;
        std::uint16_t sport = source_port(r.flow_id);
        fill_sockaddr(v4 ? *IpAddress::parse("0.0.0.0") : *IpAddress::parse("::"), sport, local, llen);
        ::bind(tcp.get(), reinterpret_cast<sockaddr*>(&local), llen);
        set_ttl(tcp.get(), v4, r.ttl);
        ::fcntl(tcp.get(), F_SETFL, ::fcntl(tcp.get(), F_GETFL) | O_NONBLOCK);
        sockaddr_storage ss{};
        socklen_t len = 0;
        fill_sockaddr(r.target, opts_.tcp_port, ss, len);
        std::int64_t sent = mono_us();
        int rc = ::connect(tcp.get(), reinterpret_cast<sockaddr*>(&ss), len);
        if (rc != 0 && errno != EINPROGRESS) throw TransportError(std::string("connect: ") + std::strerror(errno));

        for (;;) {
            std::int64_t left = sent + r.timeout_us - mono_us();
            if (left <= 0) return std::nullopt;
            std::array<pollfd, 2> p{{{icmp.get(), POLLIN, 0}, {tcp.get(), POLLOUT, 0}}};
            int n = ::poll(p.data(), p.size(), static_cast<int>((left + 999) / 1000));
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) return std::nullopt;
            if (p[1].revents) {
                int err = 0;
                socklen_t el = sizeof err;
                ::getsockopt(tcp.get(), SOL_SOCKET, SO_ERROR, &err, &el);
                if (err == 0 || err == ECONNREFUSED)
                    return ProbeReply{r.target, std::max<std::int64_t>(1, mono_us() - sent), ReplyKind::tcp_response};
                if (err != EHOSTUNREACH && err != ENETUNREACH) return std::nullopt;
            }
            if (p[0].revents) {
                auto reply = await(icmp.get(), v4, sent, 0 + std::max<std::int64_t>(1, left),
                                   [&](const IcmpView& v) -> std::optional<ReplyKind> {
                                       if (!is_time_exceeded(v, v4)) return std::nullopt;
                                       auto q = quoted(v, v4);
                                       if (!q || q->protocol != IPPROTO_TCP) return std::nullopt;
                                       if ((q->l4[0] << 8 | q->l4[1]) != sport) return std::nullopt;
                                       return ReplyKind::ttl_expired;
                                   });
                if (reply) return reply;
            }
        }
    }

    Options opts_;
    std::uint16_t identifier_;
    std::atomic<std::uint32_t> seq_{1};
};

} // namespace hitchhike::probe
