//! Held-out versus training-reuse histogram recalibration on synthetic data.

use calibound::experiment::{evaluate_recalibration, synthetic_recalibration_data, RecalibVariant};
use calibound::models::SyntheticModel;

fn main() -> calibound::Result<()> {
    let model = SyntheticModel::new(0.5, -1.5)?;
    let (train, recal, test) = synthetic_recalibration_data(&model, 4000, 100, 4000, 7)?;
    let recal = recal.expect("n_re > 0");
    let runs = [
        (
            "holdout",
            evaluate_recalibration(
                &recal,
                &test,
                15,
                RecalibVariant::Holdout { n_re: 100 },
                (0.0, 0.0),
            )?,
        ),
        (
            "reuse",
            evaluate_recalibration(&train, &test, 15, RecalibVariant::Reuse, (0.0, 0.0))?,
        ),
    ];
    println!(
        "{:>8} {:>6} {:>11} {:>10} {:>8}",
        "variant", "n_fit", "ECE before", "ECE after", "bound"
    );
    for (name, o) in &runs {
        println!(
            "{name:>8} {:>6} {:>11.5} {:>10.5} {:>8.4}",
            o.n_fit, o.ece_before, o.ece_after, o.bound.value
        );
    }
    println!("{}", serde_json::to_string(&runs[1].1.recalibrator)?);
    Ok(())
}
