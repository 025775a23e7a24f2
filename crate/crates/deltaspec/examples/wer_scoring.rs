//! Score transcript pairs with word and character error rates.
//!
//! Run with: `cargo run --example wer_scoring`

use deltaspec::{edit_distance_rate, TranscriptPair};

fn main() {
    let pairs = [
        ("the quick brown fox", "the quick brown fox"),
        ("the quick brown fox", "the quack brown fox"),
        ("show me the way home", "show me way home please"),
        ("one two three", ""),
    ];

    for (reference, hypothesis) in pairs {
        let wer = edit_distance_rate(&TranscriptPair::words(reference, hypothesis)).unwrap();
        let cer = edit_distance_rate(&TranscriptPair::characters(reference, hypothesis)).unwrap();
        println!(
            "ref {reference:22} hyp {hypothesis:22} WER {:.3} (S{} I{} D{})  CER {:.3}",
            wer.rate, wer.substitutions, wer.insertions, wer.deletions, cer.rate
        );
    }
}
