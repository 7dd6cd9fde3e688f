//! Grid scan over `V` with the necessity check at every point, driven through
//! the same entry point as the binary.

use statdisc::cli::{self, Axis, Command, RunConfig};

fn main() -> statdisc::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data/split.json");
    let mut config = RunConfig::new(Command::Scan, data);
    config.b0 = Some(vec![1.0, 0.0]);
    config.axes = vec!["V1.re=-1:1:5".parse::<Axis>()?, "V2.re=-1:1:5".parse::<Axis>()?];

    let q = cli::load_quadric(&config.input)?;
    let base = cli::resolve(&q, &config)?;
    let result = cli::scan(&q, &base, &config)?;
    for r in &result.records {
        if let Ok(p) = &r.outcome {
            println!(
                "V = ({:+.1}, {:+.1}): jet sigma_min {:.3e}, minimal {}",
                r.v[0].re, r.v[1].re, p.jet_sigma_min, p.minimal
            );
        }
    }
    println!(
        "{} points, {} nondefective, {} with invertible jet Jacobian, {} necessity violations",
        result.records.len(),
        result.nondefective(),
        result.jet_invertible(),
        result.violations.len()
    );
    Ok(())
}
