use alnum_rv::catalog::Catalog;
use alnum_rv::charset::{is_alnum, Variant};
use alnum_rv::isa::*;

fn alnum_bytes() -> Vec<u8> {
    (0..=255u8).filter(|b| is_alnum(*b)).collect()
}

#[test]
fn charset_sizes() {
    assert_eq!(alnum_bytes().len(), 62);
    for v in [Variant::Hash, Variant::Slash, Variant::Tick] {
        assert_eq!(v.charset().len(), 63);
    }
    assert!(Variant::Hash.charset().contains(b'#'));
    assert!(!Variant::Hash.charset().contains(b'/'));
}

#[test]
fn entries_are_charset_valid_and_decode_to_themselves() {
    for v in Variant::ALL {
        let cat = Catalog::for_variant(v);
        let cs = v.charset();
        for (w, d) in cat.iter() {
            assert!(cs.is_valid(&w.bytes()), "{v:?} {d}");
            assert_eq!(decode(*w).as_ref(), Some(d));
        }
    }
}

/// Opcode-bit count of 32-bit lui words, independent of the decoder.
#[test]
fn lui_count_matches_a_bit_level_count() {
    let al = alnum_bytes();
    let wide = al.iter().filter(|&&a| a & 0x7f == 0x37).count() * al.len().pow(3);
    let mut narrow = 0;
    for &a in &al {
        for &b in &al {
            let h = u16::from_le_bytes([a, b]);
            let rd = (h >> 7) & 31;
            if h & 3 == 1 && h >> 13 == 3 && rd != 0 && rd != 2 && (h & 0x107c) != 0 {
                narrow += 1;
            }
        }
    }
    let cat = Catalog::for_variant(Variant::Alnum);
    let lui = cat.get(Mnemonic::Lui);
    assert_eq!(lui.iter().filter(|(w, _)| w.len() == 4).count(), wide);
    assert_eq!(lui.iter().filter(|(w, _)| w.len() == 2).count(), narrow);
    assert_eq!(wide + narrow, 238_719);
}

#[test]
fn no_plain_store_in_alnum() {
    let cat = Catalog::for_variant(Variant::Alnum);
    for m in [Mnemonic::Sd, Mnemonic::Sw, Mnemonic::Fsd, Mnemonic::AmoorD] {
        assert_eq!(cat.count(m), 0, "{m:?}");
    }
}

#[test]
fn each_variant_gains_its_store() {
    assert!(Catalog::for_variant(Variant::Hash).count(Mnemonic::Sd) > 0);
    assert!(Catalog::for_variant(Variant::Slash).count(Mnemonic::AmoorD) > 0);
    assert!(Catalog::for_variant(Variant::Tick).count(Mnemonic::Fsd) > 0);
}

#[test]
fn catalog_file_round_trips() {
    let cat = Catalog::for_variant(Variant::Tick);
    let mut buf = Vec::new();
    cat.write_to(&mut buf).unwrap();
    let back = Catalog::read_from(&mut &buf[..]).unwrap();
    assert_eq!(back.total(), cat.total());
    assert!(back.iter().zip(cat.iter()).all(|(a, b)| a == b));
}
