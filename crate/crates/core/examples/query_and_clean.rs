//! Trains a victim, queries it over five rounds of a drifting day through the
//! service, and ranks the answers by cross-round variance.

use qnn_extract::cleanse::{clean_fraction, label_samples, rr_filter};
use qnn_extract::datapipe::{resized_pixels, BinaryTask, DatasetKind, DatasetSplits, TaskSizes, VICTIM_SIDE};
use qnn_extract::noisemodel::{ScheduleConfig, Shots};
use qnn_extract::qnnaas::QnnService;
use qnn_extract::trainers::{train_victim, FitConfig};

fn main() -> qnn_extract::Result<()> {
    let data_dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let splits = DatasetSplits::load(&data_dir, DatasetKind::Mnist)?;
    let task = BinaryTask::build("m23".parse()?, &splits, TaskSizes::DESK, 0)?;
    let (victim, log) = train_victim(&task, &FitConfig::victim(), 0)?;
    println!("victim test accuracy {:.3}", log.last().and_then(|e| e.test_acc).unwrap_or(f64::NAN));

    let schedule = ScheduleConfig::reference(4, 0.3, 5, 30.0).build()?;
    let mut service = QnnService::new(victim, schedule, Shots::Finite(1024))?;
    let queried = &task.public[..40];
    let pixels = resized_pixels(queried, VICTIM_SIDE)?;
    let truth: Vec<usize> = queried.iter().filter_map(|s| s.label).collect();

    let tensor = service.multi_round_query(&pixels, 5, 0.0)?;
    println!("{} labels recorded at hours {:?}", service.ledger().total_labels(), tensor.hours());

    let labeled = label_samples(&pixels, &tensor)?;
    for rr in [1.0, 0.8, 0.6, 0.4] {
        let kept = rr_filter(&labeled, rr)?;
        println!(
            "RR {rr:.1}: keep {:>2}, clean fraction {:.3}",
            kept.retained.len(),
            clean_fraction(&kept.retained, &truth)
        );
    }
    service.ledger().write_csv(std::io::stdout().lock())?;
    Ok(())
}
