//! Monte Carlo checks of the allocator's load guarantees, at a tenth of the
//! default trial counts.
//!
//!     cargo run --release --example verify_lemmas

use balsched::verification::{run_lemmas, LemmaId, VerifyScale};

fn main() -> balsched::Result<()> {
    let scale = VerifyScale::default().scaled(0.1);
    for r in run_lemmas(&LemmaId::ALL, &scale, 1)? {
        let bound = if r.one_sided { "<=" } else { "~=" };
        println!(
            "{}  {}  observed {:.5} {bound} predicted {:.5} (tol {:.5}, {} trials)  {}",
            r.lemma_id,
            if r.pass { "PASS" } else { "FAIL" },
            r.observed,
            r.predicted,
            r.tolerance,
            r.trials,
            r.lemma_id.describe(),
        );
    }
    Ok(())
}
