//! Base and QuantumLeak-style substitutes trained on the same 40 queried
//! samples, with their gate budgets.

use qnn_extract::datapipe::{BinaryTask, DatasetKind, DatasetSplits, TaskSizes, VICTIM_SIDE};
use qnn_extract::trainers::{labelled_inputs, one_hot, train_base, train_qleak, FitConfig, DEFAULT_COMMITTEE};

fn main() -> qnn_extract::Result<()> {
    let data_dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let splits = DatasetSplits::load(&data_dir, DatasetKind::Fashion)?;
    let task = BinaryTask::build("f01".parse()?, &splits, TaskSizes::DESK, 0)?;
    let train: Vec<(Vec<f64>, Vec<f64>)> = labelled_inputs(&task.public[..40], VICTIM_SIDE)?
        .into_iter()
        .map(|(x, y)| (x, one_hot(y, 2)))
        .collect();
    let test = labelled_inputs(&task.test, VICTIM_SIDE)?;

    let (base, _) = train_base(&train, &FitConfig::baseline(), 0, None)?;
    println!("Base : accuracy {:.3}, gates {:?}", base.accuracy(&test)?, base.circuit.gate_counts());
    let (ens, _) = train_qleak(&train, DEFAULT_COMMITTEE, &FitConfig::baseline(), 0)?;
    println!("QLeak: accuracy {:.3}, gates {:?}", ens.accuracy(&test)?, ens.gate_counts());
    Ok(())
}
