//! The four character sets: alphanumerics alone, or plus one of `#`, `/`, `'`.

use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Alnum,
    Hash,
    Slash,
    Tick,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Alnum, Variant::Hash, Variant::Slash, Variant::Tick];

    /// The extra non-alphanumeric byte allowed by the variant.
    pub fn extra(self) -> Option<u8> {
        match self {
            Variant::Alnum => None,
            Variant::Hash => Some(b'#'),
            Variant::Slash => Some(b'/'),
            Variant::Tick => Some(b'\''),
        }
    }

    pub fn charset(self) -> Charset {
        let mut c = Charset::alnum();
        if let Some(e) = self.extra() {
            c.insert(e);
        }
        c.variant = Some(self);
        c
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Variant> {
        Variant::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Alnum => "alnum",
            Variant::Hash => "hash",
            Variant::Slash => "slash",
            Variant::Tick => "tick",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Variant, String> {
        match s.to_ascii_lowercase().as_str() {
            "alnum" => Ok(Variant::Alnum),
            "hash" | "#" => Ok(Variant::Hash),
            "slash" | "/" => Ok(Variant::Slash),
            "tick" | "'" => Ok(Variant::Tick),
            _ => Err(format!("unknown variant `{s}` (expected alnum, hash, slash or tick)")),
        }
    }
}

pub fn is_alnum(b: u8) -> bool {
    b.is_ascii_alphanumeric()
}

/// A set of allowed byte values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Charset {
    bits: [u64; 4],
    variant: Option<Variant>,
}

impl Charset {
    pub fn empty() -> Charset {
        Charset { bits: [0; 4], variant: None }
    }

    pub fn alnum() -> Charset {
        let mut c = Charset::empty();
        for b in (b'0'..=b'9').chain(b'A'..=b'Z').chain(b'a'..=b'z') {
            c.insert(b);
        }
        c.variant = Some(Variant::Alnum);
        c
    }

    pub fn from_bytes(bytes: &[u8]) -> Charset {
        let mut c = Charset::empty();
        for &b in bytes {
            c.insert(b);
        }
        c
    }

    pub fn insert(&mut self, b: u8) {
        self.bits[(b >> 6) as usize] |= 1 << (b & 63);
        self.variant = None;
    }

    #[inline]
    pub fn contains(&self, b: u8) -> bool {
        self.bits[(b >> 6) as usize] >> (b & 63) & 1 == 1
    }

    pub fn variant(&self) -> Option<Variant> {
        self.variant
    }

    /// Allowed bytes in ascending order.
    pub fn bytes(&self) -> Vec<u8> {
        (0..=255u8).filter(|&b| self.contains(b)).collect()
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_valid(&self, bytes: &[u8]) -> bool {
        bytes.iter().all(|&b| self.contains(b))
    }
}

pub fn is_charset_valid(bytes: &[u8], charset: &Charset) -> bool {
    charset.is_valid(bytes)
}
