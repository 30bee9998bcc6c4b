//! Zeros as normal, 5/6/8/9 as known faults, the remaining digits as
//! unknown, plus ambiguous digits interpolated in the augmented model's
//! latent space. Expects idx files under `$OODFDD_DATA_DIR/mnist` or
//! `data/mnist`.
//!
//! cargo run --release --example mnist_digits -- [seed] [max_per_digit]

use oodfdd::data::DatasetKind;
use oodfdd::detect::{table1_csv, table2_csv};
use oodfdd::experiment::{compare, ExperimentConfig};

fn main() -> oodfdd::Result<()> {
    let mut cfg = ExperimentConfig::defaults(DatasetKind::Digits);
    let mut args = std::env::args().skip(1);
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse().expect("seed must be an integer");
    }
    if let Some(m) = args.next() {
        cfg.mnist_max_per_digit = Some(m.parse().expect("max_per_digit must be an integer"));
    }
    let c = compare(&cfg)?;
    println!("train {} / test {} examples", c.prepared.train.len(), c.test.len());
    print!("{}", table1_csv(std::slice::from_ref(&c.report)));
    println!();
    print!("{}", table2_csv(std::slice::from_ref(&c.report)));
    println!();
    print!("{}", c.entropy_csv());
    print!("{}", c.separation_csv());
    Ok(())
}
