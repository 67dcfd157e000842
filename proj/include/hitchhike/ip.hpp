#pragma once

#include <arpa/inet.h>
#include <sys/socket.h>

#include <algorithm>
#include <cctype>
#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace hitchhike {

/// IPv4 or IPv6 address stored as 16 network-order bytes.
/// IPv4 addresses occupy the first four bytes; the rest are zero.
class IpAddress {
public:
    enum class Family : std::uint8_t { v4 = 4, v6 = 6 };

    IpAddress() = default;

    static std::optional<IpAddress> parse(std::string_view text) {
        std::string s(text);
        // Tolerate "[v6]" and surrounding whitespace from hand-edited files.
        auto not_space = [](unsigned char c) { return !std::isspace(c); };
        s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
        s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
        if (s.size() > 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);

        IpAddress a;
        if (::inet_pton(AF_INET, s.c_str(), a.bytes_.data()) == 1) {
            a.family_ = Family::v4;
            return a;
        }
        if (::inet_pton(AF_INET6, s.c_str(), a.bytes_.data()) == 1) {
            a.family_ = Family::v6;
            return a;
        }
        return std::nullopt;
    }

    static IpAddress v4(std::uint32_t host_order) {
        IpAddress a;
        a.family_ = Family::v4;
        a.bytes_[0] = static_cast<std::uint8_t>(host_order >> 24);
        a.bytes_[1] = static_cast<std::uint8_t>(host_order >> 16);
        a.bytes_[2] = static_cast<std::uint8_t>(host_order >> 8);
        a.bytes_[3] = static_cast<std::uint8_t>(host_order);
        return a;
    }

    static IpAddress from_bytes(Family family, const std::uint8_t* data) {
        IpAddress a;
        a.family_ = family;
        std::copy_n(data, family == Family::v4 ? 4 : 16, a.bytes_.begin());
        return a;
    }

    Family family() const noexcept { return family_; }
    bool is_v4() const noexcept { return family_ == Family::v4; }
    bool is_v6() const noexcept { return family_ == Family::v6; }
    unsigned bit_width() const noexcept { return is_v4() ? 32U : 128U; }
    const std::array<std::uint8_t, 16>& bytes() const noexcept { return bytes_; }

    std::string to_string() const {
        char buf[INET6_ADDRSTRLEN] = {};
        ::inet_ntop(is_v4() ? AF_INET : AF_INET6, bytes_.data(), buf, sizeof buf);
        return buf;
    }

    /// True when the first `prefix_len` bits of both addresses agree and families match.
    bool shares_prefix(const IpAddress& other, unsigned prefix_len) const noexcept {
        if (family_ != other.family_ || prefix_len > bit_width()) return false;
        unsigned full = prefix_len / 8;
        if (!std::equal(bytes_.begin(), bytes_.begin() + full, other.bytes_.begin())) return false;
        unsigned rem = prefix_len % 8;
        if (rem == 0) return true;
        auto mask = static_cast<std::uint8_t>(0xFFU << (8 - rem));
        return (bytes_[full] & mask) == (other.bytes_[full] & mask);
    }

    auto operator<=>(const IpAddress&) const = default;

private:
    Family family_ = Family::v4;
    std::array<std::uint8_t, 16> bytes_{};
};

/// CIDR block such as 98.97.0.0/16 or 2605:59c8::/32.
struct IpPrefix {
    IpAddress network;
    unsigned length = 0;

    static std::optional<IpPrefix> parse(std::string_view text) {
        auto slash = text.find('/');
        auto addr = IpAddress::parse(text.substr(0, slash));
        if (!addr) return std::nullopt;
        unsigned len = addr->bit_width();
        if (slash != std::string_view::npos) {
            auto digits = text.substr(slash + 1);
            if (digits.empty() || digits.size() > 3) return std::nullopt;
            len = 0;
            for (char c : digits) {
                if (c < '0' || c > '9') return std::nullopt;
                len = len * 10 + static_cast<unsigned>(c - '0');
            }
            if (len > addr->bit_width()) return std::nullopt;
        }
        return IpPrefix{*addr, len};
    }

    bool contains(const IpAddress& a) const noexcept { return network.shares_prefix(a, length); }

    std::string to_string() const { return network.to_string() + "/" + std::to_string(length); }
};

} // namespace hitchhike

template <>
struct std::hash<hitchhike::IpAddress> {
    std::size_t operator()(const hitchhike::IpAddress& a) const noexcept {
        std::size_t h = static_cast<std::size_t>(a.family());
        for (auto b : a.bytes()) h = h * 1099511628211ULL ^ b;
        return h;
    }
};
