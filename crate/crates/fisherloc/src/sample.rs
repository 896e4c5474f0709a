//! Photon sampling under the blinking and cofluorescent scenarios.

use fisherloc_core::fim::Scenario;
use fisherloc_core::model::{Detection, SourceModel, Window};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;

/// Generator for one trial: the master seed fixes the key and the trial
/// index selects the stream, so trials are independent of execution order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Detections for trial 0 of `seed`.
pub fn sample_photons(model: &SourceModel, scenario: &Scenario, seed: u64) -> Result<Vec<Detection>> {
    sample_with(model, scenario, &mut trial_rng(seed, 0))
}

pub fn sample_with<R: Rng + ?Sized>(model: &SourceModel, scenario: &Scenario, rng: &mut R) -> Result<Vec<Detection>> {
    scenario.validate(model)?;
    let mut out = Vec::with_capacity(model.photons() as usize);
    match scenario {
        Scenario::Blinking { counts } => {
            for (k, &n) in counts.iter().enumerate() {
                for _ in 0..n {
                    out.push(draw(model, k, Window::Source(k), rng));
                }
            }
        }
        Scenario::Cofluorescent => {
            let w = model.weights();
            let last = w.iter().rposition(|&x| x > 0.0).unwrap_or(0);
            for _ in 0..model.photons() {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = last;
                for (j, &wj) in w.iter().enumerate() {
                    acc += wj;
                    if u < acc && wj > 0.0 {
                        k = j;
                        break;
                    }
                }
                out.push(draw(model, k, Window::Mixed, rng));
            }
        }
    }
    Ok(out)
}

fn draw<R: Rng + ?Sized>(model: &SourceModel, k: usize, window: Window, rng: &mut R) -> Detection {
    let p = model.position(k);
    let mut coords = [0.0; 2];
    for (d, c) in coords.iter_mut().enumerate().take(model.dim()) {
        let z: f64 = rng.sample(StandardNormal);
        *c = p[d] + model.sigma() * z;
    }
    Detection { coords, window }
}
