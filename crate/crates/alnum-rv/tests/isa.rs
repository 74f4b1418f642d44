use alnum_rv::isa::*;
use proptest::prelude::*;

fn dec(bytes: &[u8]) -> Option<DecodedInstr> {
    InstrWord::from_bytes(bytes).and_then(decode)
}

#[test]
fn lui_t5_from_text() {
    let d = dec(b"7OOT").unwrap();
    assert_eq!(d.mnemonic, Mnemonic::Lui);
    assert_eq!(d.rd, Some(Reg::T5));
    assert_eq!(d.imm, Some(0x544f4));
    assert_eq!(d.to_string(), "lui t5,0x544f4");
}

#[test]
fn woot_is_invalid() {
    assert!(dec(b"WOOT").is_none());
}

#[test]
fn every_16_bit_word_round_trips() {
    for v in 0..=u16::MAX {
        let Some(w) = InstrWord::new16(v) else { continue };
        if let Some(d) = decode(w) {
            // c.addi sp and c.addi16sp can both hold the same instruction, so compare meaning
            let e = encode(&d, PreferredWidth::W16).unwrap_or_else(|e| panic!("{v:#06x} {d}: {e}"));
            assert_eq!(decode(e), Some(d), "{v:#06x}");
        }
    }
}

#[test]
fn known_encodings() {
    let addi = DecodedInstr::new(Mnemonic::Addi).rd(Reg::X(5)).rs1(Reg::ZERO).imm(7);
    assert_eq!(encode(&addi, PreferredWidth::W32).unwrap().value(), 0x0070_0293);
    let fence_i = DecodedInstr::new(Mnemonic::FenceI).rd(Reg::ZERO).rs1(Reg::ZERO).imm(0);
    assert_eq!(encode(&fence_i, PreferredWidth::W32).unwrap().value(), 0x0000_100f);
    assert_eq!(dec(&[0x31, 0xa0]).unwrap().to_string(), "j 12");
}

#[test]
fn disassembly_walks_mixed_widths() {
    let out = disassemble(b"3Z0Aya");
    assert_eq!(out.len(), 2);
    assert_eq!(out[0].0, 0);
    assert_eq!(out[1].0, 4);
    assert!(out.iter().all(|(_, d)| d.is_some()));
}

proptest! {
    #[test]
    fn decoded_32_bit_words_round_trip(v in any::<u32>()) {
        let v = v | 3;
        if let Some(w) = InstrWord::new32(v) {
            if let Some(d) = decode(w) {
                let e = encode(&d, PreferredWidth::W32);
                prop_assert!(e.is_ok(), "{:#010x} {}", v, d);
                prop_assert_eq!(decode(e.unwrap()), Some(d));
            }
        }
    }

    #[test]
    fn decode_is_a_function_of_the_bytes(bytes in proptest::collection::vec(any::<u8>(), 4)) {
        prop_assert_eq!(dec(&bytes), dec(&bytes));
    }
}
