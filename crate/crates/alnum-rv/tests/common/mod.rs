#![allow(dead_code)]

use std::sync::OnceLock;

use alnum_rv::charset::Variant;
use alnum_rv::link::Linker;

/// Bytes of a colored listing: `\textcolor{..}{..}` and `\phantom{..}` markup
/// dropped, `\#` unescaped, `(X)\^{}\{N\}` expanded, spaces and line breaks ignored.
pub fn parse_listing(tex: &str) -> Vec<u8> {
    let mut s = String::new();
    let mut rest = tex;
    while let Some(i) = rest.find("\\^{}\\{") {
        let open = rest[..i].rfind('(').unwrap();
        s.push_str(&rest[..open]);
        let unit = &rest[open + 1..i - 1];
        let tail = &rest[i + 6..];
        let end = tail.find("\\}").unwrap();
        s.push_str(&unit.repeat(tail[..end].parse().unwrap()));
        rest = &tail[end + 2..];
    }
    s.push_str(rest);
    let mut s = s.replace("\\\\", "").replace("\\space", "").replace("\\#", "#");
    for cmd in ["\\phantom{", "\\textcolor{"] {
        while let Some(i) = s.find(cmd) {
            let j = i + s[i..].find('}').unwrap();
            s.replace_range(i..=j, "");
        }
    }
    s.chars().filter(|c| !c.is_whitespace() && !"{}".contains(*c)).collect::<String>().into_bytes()
}

pub fn hash_listing() -> Vec<u8> {
    parse_listing(include_str!("../fixtures/hash_hello.tex"))
}

pub fn linker(v: Variant) -> &'static Linker {
    static HASH: OnceLock<Linker> = OnceLock::new();
    static SLASH: OnceLock<Linker> = OnceLock::new();
    static TICK: OnceLock<Linker> = OnceLock::new();
    let cell = match v {
        Variant::Hash => &HASH,
        Variant::Slash => &SLASH,
        _ => &TICK,
    };
    cell.get_or_init(|| Linker::new(v).unwrap())
}
