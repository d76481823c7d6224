//! Range-code symbols under the discretized Gaussian tables and compare
//! the coded size with the model's information content.
//!
//!     cargo run --example range_coding

use cps::blocks::SplitMix64;
use cps::entropy::cdf::bin_sigma;
use cps::entropy::{gaussian_tables, range_decode, range_encode, rate_estimate};

fn main() -> cps::Result<()> {
    let tables = gaussian_tables();
    let mut rng = SplitMix64::new(3);
    for bin in [0usize, 20, 40, 63] {
        let n = 20_000;
        let cdf = tables.get(bin).as_slice();
        let symbols: Vec<i16> = (0..n)
            .map(|_| {
                let u = (rng.next_u64() % 65536) as u32;
                (cdf.partition_point(|&c| c <= u) as i32 - 1 - 128) as i16
            })
            .collect();
        let bins = vec![bin as u8; n];
        let rate = rate_estimate(&symbols, &bins)?;
        let bytes = range_encode(&symbols, &bins)?;
        assert_eq!(range_decode(&bytes, &bins, n)?, symbols);
        println!(
            "sigma {:>7.3}: {:>6.3} bits/symbol estimated, {:>6.3} coded",
            bin_sigma(bin),
            rate.bits / n as f64,
            8.0 * bytes.len() as f64 / n as f64
        );
    }
    Ok(())
}
