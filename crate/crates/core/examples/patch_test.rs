//! Patch test of the plate element on an irregular five-triangle patch,
//! for the element itself and for two deliberately wrong variants.
//!
//! cargo run --release --example patch_test

use pem_plate::assembly::{patch_test_with, pure_bending_material, PATCH_TOLERANCE};
use pem_plate::element::BendingVariant;

fn main() -> pem_plate::Result<()> {
    let mat = pure_bending_material();
    for variant in [BendingVariant::Specht, BendingVariant::ReversedMu, BendingVariant::Bciz] {
        let r = patch_test_with(&mat, variant)?;
        println!("{variant:?}: {} (tolerance {PATCH_TOLERANCE:.0e})", if r.passed { "pass" } else { "FAIL" });
        for (state, err) in &r.states {
            println!("  {state:>24}  {err:.3e}");
        }
    }
    Ok(())
}
