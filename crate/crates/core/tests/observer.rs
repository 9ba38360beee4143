mod common;

use common::random_velocity;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rdcbf_core::observer::{dob_init, dob_update, error_bound, gamma_bound, DisturbanceBounds};
use rdcbf_core::robot::{RobotState, StateVector};

const DT: f64 = 1e-3;

/// Runs `ẋ = u + d` for `duration` seconds and returns the largest excess of
/// `‖d − d̂‖` over the envelope, and of `‖d̂‖` over `Γ`.
fn worst_excess(d: impl Fn(f64) -> StateVector, omega0: f64, omega1: f64, alpha: f64, mu: f64, duration: f64) -> (f64, f64) {
    let bounds = DisturbanceBounds::new(omega0, omega1, alpha, mu).unwrap();
    let gamma = gamma_bound(&bounds);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = StateVector::zeros();
    let mut obs = dob_init(&RobotState::from_vector(&x).unwrap(), alpha).unwrap();
    let e0 = d(0.0).norm();
    let (mut env, mut mag) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let steps = (duration / DT).round() as usize;
    for k in 0..steps {
        let t = k as f64 * DT;
        let u = random_velocity(&mut rng, 1.0);
        x += (u + d(t)) * DT;
        obs = dob_update(&obs, &RobotState::from_vector(&x).unwrap(), &u, DT).unwrap();
        let t1 = t + DT;
        env = env.max((d(t1) - obs.d_hat).norm() - error_bound(t1, e0, &bounds).unwrap());
        mag = mag.max(obs.d_hat.norm() - gamma);
    }
    (env, mag)
}

fn channels(f: impl Fn(usize) -> f64) -> StateVector {
    StateVector::from_fn(|i, _| f(i))
}

#[test]
fn constant_disturbance_stays_in_envelope() {
    let c = channels(|i| 0.1 * (i as f64 - 3.5));
    for (alpha, mu) in [(10.0, 10.0), (40.0, 40.0), (20.0, 5.0)] {
        let (env, mag) = worst_excess(|_| c, c.norm(), 0.0, alpha, mu, 10.0);
        assert!(env <= 1e-6, "alpha {alpha}: excess {env:e}");
        assert!(mag <= 1e-6);
    }
}

#[test]
fn sinusoidal_disturbance_stays_in_envelope() {
    let amp = StateVector::from_column_slice(&[0.15, 0.20, 0.5, 0.5, 0.15, 0.35, 0.25, 0.45]);
    let freq = channels(|i| 0.7 + 0.2 * i as f64);
    let phase = channels(|i| 0.4 * i as f64);
    let d = |t: f64| channels(|i| amp[i] * (freq[i] * t + phase[i]).sin());
    let omega1 = amp.component_mul(&freq).norm();
    for (alpha, mu) in [(10.0, 10.0), (40.0, 40.0), (25.0, 12.0)] {
        let (env, mag) = worst_excess(d, amp.norm(), omega1, alpha, mu, 10.0);
        assert!(env <= 1e-6, "alpha {alpha}: excess {env:e}");
        assert!(mag <= 1e-6);
    }
}

#[test]
fn ramp_disturbance_stays_in_envelope() {
    let slope = channels(|i| if i % 2 == 0 { 0.3 } else { -0.2 });
    let offset = channels(|i| 0.05 * i as f64);
    let d = |t: f64| offset + slope * t;
    let omega0 = (offset + slope * 10.0).norm().max(offset.norm());
    for (alpha, mu) in [(10.0, 10.0), (40.0, 40.0)] {
        let (env, _) = worst_excess(d, omega0, slope.norm(), alpha, mu, 10.0);
        assert!(env <= 1e-6, "alpha {alpha}: excess {env:e}");
    }
}

#[test]
fn joint_wrapping_does_not_leak_into_the_estimate() {
    let d = channels(|i| if i >= 2 { 2.0 } else { 0.0 });
    let (env, _) = worst_excess(|_| d, d.norm(), 0.0, 20.0, 20.0, 10.0);
    assert!(env <= 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_sinusoids_stay_in_envelope(
        amp in prop::array::uniform8(0.0..0.6f64),
        freq in prop::array::uniform8(0.0..3.0f64),
        phase in prop::array::uniform8(0.0..6.3f64),
        alpha in 5.0..60.0f64,
        ratio in 0.1..1.9f64,
    ) {
        let d = |t: f64| channels(|i| amp[i] * (freq[i] * t + phase[i]).sin());
        let omega0 = StateVector::from(amp).norm();
        let omega1 = channels(|i| amp[i] * freq[i]).norm();
        let (env, mag) = worst_excess(d, omega0, omega1, alpha, ratio * alpha, 3.0);
        prop_assert!(env <= 1e-6);
        prop_assert!(mag <= 1e-6);
    }
}
