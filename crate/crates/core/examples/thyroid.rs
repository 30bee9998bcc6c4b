//! Thyroid comparison: normal and diseased patients train the models,
//! subnormal patients are held out as the incipient group. Expects
//! `ann-train.data` and/or `ann-test.data` under `$OODFDD_DATA_DIR/thyroid`
//! or `data/thyroid`.
//!
//! cargo run --release --example thyroid -- [seed]

use oodfdd::data::DatasetKind;
use oodfdd::detect::{table1_csv, table2_csv};
use oodfdd::experiment::{compare, ExperimentConfig};
use oodfdd::Error;

fn main() {
    let mut cfg = ExperimentConfig::defaults(DatasetKind::Thyroid);
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse().expect("seed must be an integer");
    }
    let c = match compare(&cfg) {
        Ok(c) => c,
        Err(Error::DataNotFound(msg)) => {
            eprintln!("{msg}; see README for where to place the thyroid files");
            std::process::exit(2);
        }
        Err(e) => panic!("{e}"),
    };
    print!("{}", table1_csv(std::slice::from_ref(&c.report)));
    println!();
    print!("{}", table2_csv(std::slice::from_ref(&c.report)));
    println!();
    print!("{}", c.entropy_csv());
    print!("{}", c.separation_csv());
}
