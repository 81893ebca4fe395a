//! Trains each variant on the default synthetic process and prints test
//! accuracy and wall time. Usage: `synth_compare [epochs] [seed]`.

use std::time::Instant;

use step_core::cells::Variant;
use step_core::synth::{generate, SynthConfig};
use step_core::training::{train, TrainConfig};

fn main() -> step_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(100, |a| a.parse().expect("epochs"));
    let seed = args.next().map_or(0, |a| a.parse().expect("seed"));
    let synth = SynthConfig { seed, ..SynthConfig::default() };
    let dataset = generate(&synth)?;
    println!("bayes_rate={:.4}", dataset.bayes_rate.unwrap_or(f64::NAN));
    for variant in [Variant::Step, Variant::Lstm, Variant::ConvLstm] {
        let config = TrainConfig { variant, epochs, seed, ..TrainConfig::default() };
        let start = Instant::now();
        let out = train(&dataset, &config)?;
        let last = out.metrics.last().unwrap();
        println!(
            "{variant}: train_loss={:.4} train_acc={:.4} test_acc={:.4} ({:.1}s)",
            last.train_loss,
            last.train_acc,
            last.test_acc,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
