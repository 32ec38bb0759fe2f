//! Host syntax checks and address classification.

use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

/// RFC 1035/1123 name rules: labels of 1-63 letters, digits or hyphens,
/// no hyphen at either end, at most 253 chars, two or more labels and an
/// alphabetic top label. One trailing dot is tolerated.
pub fn validate_dns_format(host: &str) -> bool {
    let name = host.strip_suffix('.').unwrap_or(host);
    if name.is_empty() || name.len() > 253 || validate_ip(name) {
        return false;
    }
    let labels: Vec<&str> = name.split('.').collect();
    if labels.len() < 2 {
        return false;
    }
    let label_ok = |l: &str| {
        !l.is_empty() && l.len() <= 63 && !l.starts_with('-') && !l.ends_with('-') && l.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
    };
    let tld = labels[labels.len() - 1];
    labels.iter().all(|l| label_ok(l)) && tld.len() >= 2 && tld.bytes().all(|b| b.is_ascii_alphabetic())
}

/// IPv4 dotted quad or IPv6 text, optionally in brackets.
pub fn parse_ip(text: &str) -> Option<IpAddr> {
    let t = text.trim();
    let t = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')).unwrap_or(t);
    t.parse().ok()
}

pub fn validate_ip(text: &str) -> bool {
    parse_ip(text).is_some()
}

/// True when the text is meant as an address rather than a name: digits
/// and dots only, a colon-separated form, or dotted single-char groups
/// such as `x.x.x.x`.
pub fn looks_like_ip(text: &str) -> bool {
    let t = text.trim_start_matches('[').trim_end_matches(']');
    if t.contains(':') {
        return t.chars().all(|c| c.is_ascii_hexdigit() || c == ':' || c == '.');
    }
    if t.chars().all(|c| c.is_ascii_digit() || c == '.') && t.chars().any(|c| c.is_ascii_digit()) {
        return true;
    }
    let parts: Vec<&str> = t.split('.').collect();
    let filler = |p: &str| p.chars().all(|c| matches!(c, 'x' | 'X' | '*' | '#' | '?'));
    parts.len() == 4 && parts.iter().all(|p| (1..=3).contains(&p.len()) && (p.chars().all(|c| c.is_ascii_digit()) || filler(p)))
}

fn v4_routable(ip: Ipv4Addr) -> bool {
    let o = ip.octets();
    let in_net = |net: [u8; 4], bits: u32| {
        let mask = if bits == 0 { 0 } else { u32::MAX << (32 - bits) };
        u32::from(ip) & mask == u32::from(Ipv4Addr::from(net)) & mask
    };
    !(ip.is_unspecified()
        || ip.is_loopback()
        || ip.is_private()
        || ip.is_link_local()
        || ip.is_broadcast()
        || ip.is_documentation()
        || ip.is_multicast()
        || o[0] == 0
        || in_net([100, 64, 0, 0], 10)
        || in_net([192, 0, 0, 0], 24)
        || in_net([198, 18, 0, 0], 15)
        || in_net([240, 0, 0, 0], 4))
}

fn v6_routable(ip: Ipv6Addr) -> bool {
    if let Some(v4) = ip.to_ipv4_mapped() {
        return v4_routable(v4);
    }
    let s = ip.segments();
    !(ip.is_unspecified()
        || ip.is_loopback()
        || ip.is_multicast()
        || (s[0] & 0xfe00) == 0xfc00
        || (s[0] & 0xffc0) == 0xfe80
        || (s[0] == 0x2001 && s[1] == 0x0db8)
        || (s[0] == 0x0100 && s[1] == 0 && s[2] == 0 && s[3] == 0)
        || s[0] == 0)
}

/// Public unicast: excludes loopback, private, shared, link-local,
/// unique-local, unspecified, reserved, multicast and documentation space.
pub fn is_routable(ip: IpAddr) -> bool {
    match ip {
        IpAddr::V4(v) => v4_routable(v),
        IpAddr::V6(v) => v6_routable(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dns_format() {
        assert!(validate_dns_format("sh1.cirray.cn"));
        assert!(validate_dns_format("kraken.shore.mbari.org."));
        assert!(!validate_dns_format("-bad-.example.com"));
        assert!(!validate_dns_format(&format!("{}.com", "a".repeat(64))));
        assert!(validate_dns_format(&format!("{}.com", "a".repeat(63))));
        assert!(!validate_dns_format("localhost"));
        assert!(!validate_dns_format("db_host.corp.io"));
        assert!(!validate_dns_format("10.0.0.1"));
        assert!(!validate_dns_format("host.c0m"));
        let long = vec!["abcdefghi"; 26].join(".") + ".com";
        assert!(long.len() > 253);
        assert!(!validate_dns_format(&long));
    }

    #[test]
    fn ip_validity_and_routing() {
        assert!(validate_ip("127.0.0.1") && !is_routable(parse_ip("127.0.0.1").unwrap()));
        assert!(validate_ip("192.168.1.1") && !is_routable(parse_ip("192.168.1.1").unwrap()));
        assert!(!validate_ip("x.x.x.x"));
        assert!(!validate_ip("256.1.1.1"));
        for ip in ["0.0.0.0", "10.1.2.3", "172.16.0.9", "169.254.1.1", "100.64.0.1", "203.0.113.5", "224.0.0.1", "240.0.0.1", "::1", "fe80::1", "fd00::1", "2001:db8::1", "::ffff:10.0.0.1"] {
            assert!(!is_routable(parse_ip(ip).unwrap()), "{ip}");
        }
        for ip in ["111.230.140.27", "120.77.222.217", "185.60.21.35", "2606:4700::1111", "[2a00:1450::1]"] {
            assert!(is_routable(parse_ip(ip).unwrap()), "{ip}");
        }
    }

    #[test]
    fn address_shapes() {
        for t in ["127.0.0.1", "x.x.x.x", "0.0.0.0", "300.1.1.1", "::1", "[fe80::1]", "10.0.0", "xxx.xxx.xxx.xxx"] {
            assert!(looks_like_ip(t), "{t}");
        }
        for t in ["db.corp.io", "sh1.cirray.cn", "localhost", "a.b.c.com", "www.example.com"] {
            assert!(!looks_like_ip(t), "{t}");
        }
    }
}
