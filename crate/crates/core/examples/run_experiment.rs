//! A single-seed, two-task extraction experiment driven by the harness,
//! writing CSV reports to a temporary directory.

use qnn_extract::harness::{ExperimentConfig, Harness, Scheme};

fn main() -> qnn_extract::Result<()> {
    let mut cfg = ExperimentConfig::default().desk_scale();
    cfg.data_dir = std::env::args().nth(1).unwrap_or_else(|| "data".into()).into();
    cfg.out_dir = std::env::temp_dir().join("qnn-extract-demo");
    cfg.tasks = vec!["m01".parse()?, "f01".parse()?];
    cfg.seeds = vec![0];
    cfg.rr_grid = vec![0.6, 1.0];
    cfg.pretrain.barlow.epochs = 20;
    cfg.pretrain.source_images = 128;

    let harness = Harness::new(cfg.clone(), 2)?;
    let report = harness.run(&Scheme::ALL)?;
    for row in &report.table.rows {
        println!(
            "{} {:>7} rr={:.1} accuracy {:.3} clean {:.3}",
            row.task,
            row.scheme.as_str(),
            row.rr,
            row.accuracy,
            row.clean_fraction
        );
    }
    println!("reports in {}", cfg.out_dir.display());
    Ok(())
}
