mod common;

use alnum_rv::charset::Variant;
use alnum_rv::emu::{EmuConfig, EmuState, Stop, DEFAULT_BASE};
use alnum_rv::isa::Reg;

fn run_listing() -> EmuState {
    let bytes = common::hash_listing();
    let mut st = EmuState::with_image(EmuConfig::default(), &bytes);
    // The jal lands in a sled of c.lwsp, which reads through sp before the
    // listing sets it; on the reference board that address is readable.
    st.set_reg(Reg::SP, DEFAULT_BASE);
    st
}

#[test]
fn listing_parses_to_the_expected_shape() {
    let bytes = common::hash_listing();
    assert_eq!(bytes.len(), 11208);
    assert!(bytes.starts_with(b"o#0#"));
    assert!(bytes.ends_with(b"ySySySySs0A4"));
    assert!(Variant::Hash.charset().is_valid(&bytes));
}

#[test]
fn listing_prints_hello_world() {
    let mut st = run_listing();
    let stop = st.run(1_000_000);
    assert_eq!(String::from_utf8_lossy(&st.serial_out), "Hello, world!\n");
    assert!(matches!(stop, Stop::Trap(_) | Stop::StepBudgetExceeded | Stop::Exit), "{stop:?}");
}
