use std::fmt;

use super::{DecodedInstr, Mnemonic};

fn csr_name(csr: u16) -> Option<&'static str> {
    Some(match csr {
        0x001 => "fflags",
        0x002 => "frm",
        0x003 => "fcsr",
        0x300 => "mstatus",
        0x301 => "misa",
        0x305 => "mtvec",
        0x341 => "mepc",
        0x342 => "mcause",
        0xF14 => "mhartid",
        _ => return None,
    })
}

const RM: [&str; 8] = ["rne", "rtz", "rdn", "rup", "rmm", "?", "?", "dyn"];

/// Assembler-style text, close to what a reference disassembler prints.
pub(super) fn render(d: &DecodedInstr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    use Mnemonic::*;
    let name = d.mnemonic.name();
    let m = d.mnemonic;
    let imm = d.imm.unwrap_or(0);
    if m == Hint {
        return write!(f, "hint 0x{imm:04x}");
    }
    if m.reads_memory() && !m.is_amo() || m.writes_memory() && !m.is_amo() {
        let data = if m.writes_memory() { d.rs2 } else { d.rd };
        return write!(f, "{name} {},{}({})", data.unwrap(), imm, d.rs1.unwrap());
    }
    if m.is_amo() {
        let suffix = match (d.aq, d.rl) {
            (true, true) => ".aqrl",
            (true, false) => ".aq",
            (false, true) => ".rl",
            _ => "",
        };
        return match d.rs2 {
            Some(rs2) => write!(f, "{name}{suffix} {},{},({})", d.rd.unwrap(), rs2, d.rs1.unwrap()),
            None => write!(f, "{name}{suffix} {},({})", d.rd.unwrap(), d.rs1.unwrap()),
        };
    }
    match m {
        Lui | Auipc => return write!(f, "{name} {},0x{:x}", d.rd.unwrap(), imm),
        Jalr => return write!(f, "{name} {},{}({})", d.rd.unwrap(), imm, d.rs1.unwrap()),
        Fence => {
            let set = |v: i32| {
                let s: String = ["i", "o", "r", "w"]
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| v >> (3 - i) & 1 == 1)
                    .map(|(_, c)| *c)
                    .collect();
                if s.is_empty() { "0".to_string() } else { s }
            };
            return write!(f, "fence {},{}", set(imm >> 4), set(imm & 0xF));
        }
        _ => {}
    }
    let mut parts: Vec<String> = Vec::new();
    for r in [d.rd, d.rs1, d.rs2, d.rs3].into_iter().flatten() {
        parts.push(r.to_string());
    }
    if let Some(c) = d.csr {
        let c = csr_name(c).map(str::to_string).unwrap_or_else(|| format!("0x{c:x}"));
        parts.insert(1.min(parts.len()), c);
    }
    if let Some(v) = d.imm {
        parts.push(v.to_string());
    }
    if let Some(rm) = d.rm {
        if rm != 7 {
            parts.push(RM[rm as usize & 7].to_string());
        }
    }
    if parts.is_empty() {
        f.write_str(name)
    } else {
        write!(f, "{name} {}", parts.join(","))
    }
}
