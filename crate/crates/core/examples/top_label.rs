//! Reducing multiclass probabilities to top-label confidences before binning.

use calibound::binning::BinningScheme;
use calibound::data::top_label_reduce;
use calibound::metrics::ece;

fn main() -> calibound::Result<()> {
    let probs = vec![
        vec![0.7, 0.2, 0.1],
        vec![0.1, 0.6, 0.3],
        vec![0.3, 0.3, 0.4],
        vec![0.05, 0.05, 0.9],
        vec![0.5, 0.5, 0.0],
        vec![0.2, 0.7, 0.1],
    ];
    let truth = [0, 2, 2, 2, 1, 1];
    let d = top_label_reduce(&probs, &truth)?;
    for s in d.samples() {
        println!("confidence {:.2}  correct {}", s.score(), s.label());
    }
    println!(
        "top-label ECE (2 UWB bins): {:.4}",
        ece(&d, &BinningScheme::uwb(2)?).value
    );
    Ok(())
}
