//! Executes one circuit on the drifting device model at several hours of the
//! day, analytically and with 1024 shots.

use qnn_extract::noisemodel::{noisy_execute, ScheduleConfig, Shots};
use qnn_extract::simcore::{Encoding, ParamCircuit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qnn_extract::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let circ = ParamCircuit::random(4, 4, Encoding::Amplitude, &mut rng)?;
    let x = vec![1.0; 16];
    let schedule = ScheduleConfig::reference(4, 0.3, 11, 30.0).build()?;

    for (round, hour) in [0.0, 4.8, 9.6, 14.4, 19.2].into_iter().enumerate() {
        let profile = schedule.profile_for_round(hour, round as u64);
        let exact = noisy_execute(&x, &circ, &profile, Shots::Analytic, &mut rng)?;
        let sampled = noisy_execute(&x, &circ, &profile, Shots::Finite(1024), &mut rng)?;
        println!(
            "{hour:>5.1}h  p1q={:.2e}  P(0) exact {:.4?}  sampled {:.4?}",
            profile.p1q, exact, sampled
        );
    }
    Ok(())
}
