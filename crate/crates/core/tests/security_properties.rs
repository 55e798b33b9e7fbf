mod common;

use common::{g_oracle, two_mode_spectrum};
use cvqkd::scanner::{linspace, scan_grid};
use cvqkd::security::{key_rate_with_mutual_info, MODE_EVE_CHANNEL, MODE_EVE_KEPT};
use cvqkd::{
    eve_spectrum_analytic, holevo, joint_state_after_channel, key_rate, mutual_information, partial_state,
    von_neumann_entropy, Direction, ProtocolParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params<R: Rng>(rng: &mut R) -> ProtocolParams {
    ProtocolParams::default()
        .with_modulation_variance(rng.random_range(0.0..=100.0))
        .with_preparation_noise(rng.random_range(0.0..=30.0))
        .with_transmission(rng.random_range(0.0..=1.0))
        .with_eve_variance(rng.random_range(1.0..=2.0))
}

#[test]
fn eve_spectrum_matches_closed_form_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let eve = partial_state(&joint_state_after_channel(&p).unwrap(), &[MODE_EVE_CHANNEL, MODE_EVE_KEPT]).unwrap();
        let (hi, lo) = two_mode_spectrum(eve.entries());
        let (a_hi, a_lo) = eve_spectrum_analytic(&p).unwrap();
        assert!((a_hi - hi).abs() < 1e-8 * hi.max(1.0), "{a_hi} vs {hi}");
        assert!((a_lo - lo).abs() < 1e-8 * hi.max(1.0), "{a_lo} vs {lo}");
    }
}

#[test]
fn holevo_is_non_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        for dir in [Direction::Direct, Direction::Reverse] {
            let chi = holevo(&p.with_direction(dir)).unwrap();
            assert!(chi >= -1e-9, "{chi} at {p:?}");
        }
    }
}

#[test]
fn eve_purifies_alice_and_bob_without_preparation_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let p = random_params(&mut rng).with_preparation_noise(0.0);
        let joint = joint_state_after_channel(&p).unwrap();
        let s_ab = von_neumann_entropy(&partial_state(&joint, &[0, 1]).unwrap()).unwrap();
        let s_e = von_neumann_entropy(&partial_state(&joint, &[2, 3]).unwrap()).unwrap();
        assert!((s_ab - s_e).abs() < 1e-7 * s_e.max(1.0), "{s_ab} vs {s_e}");
    }
}

#[test]
fn eve_entropy_from_closed_form() {
    let p = ProtocolParams::default().with_transmission(0.79);
    let (hi, lo) = eve_spectrum_analytic(&p).unwrap();
    let eve = partial_state(&joint_state_after_channel(&p).unwrap(), &[2, 3]).unwrap();
    let s = von_neumann_entropy(&eve).unwrap();
    assert!((s - g_oracle(hi) - g_oracle(lo)).abs() < 1e-10);
}

#[test]
fn rate_non_increasing_in_eve_variance_over_grid() {
    let kappa_axis = linspace(0.0, 30.0, 101);
    let t_axis = linspace(0.01, 1.0, 101);
    for dir in [Direction::Direct, Direction::Reverse] {
        let grids: Vec<_> = [1.0, 1.05, 1.11, 1.3]
            .iter()
            .map(|&w| {
                scan_grid(
                    &ProtocolParams::default().with_eve_variance(w).with_direction(dir),
                    &kappa_axis,
                    &t_axis,
                )
                .unwrap()
            })
            .collect();
        for pair in grids.windows(2) {
            for (lo_row, hi_row) in pair[0].rates.iter().zip(&pair[1].rates) {
                for (lo, hi) in lo_row.iter().zip(hi_row) {
                    assert!(hi <= &(lo + 1e-9), "{dir}: {hi} > {lo}");
                }
            }
        }
    }
}

#[test]
fn direct_beats_reverse_with_strong_preparation_noise() {
    for t in [0.85, 0.9, 0.95] {
        let p = ProtocolParams::default().with_preparation_noise(18.0).with_transmission(t);
        let dr = key_rate(&p).unwrap().key_rate;
        let rr = key_rate(&p.with_direction(Direction::Reverse)).unwrap().key_rate;
        assert!(dr > rr, "T={t}: {dr} <= {rr}");
    }
}

#[test]
fn reverse_beats_direct_at_high_loss_without_preparation_noise() {
    let p = ProtocolParams::default().with_transmission(0.6);
    let dr = key_rate(&p).unwrap().key_rate;
    let rr = key_rate(&p.with_direction(Direction::Reverse)).unwrap().key_rate;
    assert!(dr < 0.0 && rr > 0.0, "{dr} {rr}");
}

#[test]
fn mutual_information_independent_of_direction_and_efficiency() {
    let p = ProtocolParams::default().with_transmission(0.7).with_preparation_noise(2.0);
    let i = mutual_information(&p).unwrap();
    assert_eq!(i, mutual_information(&p.with_direction(Direction::Reverse)).unwrap());
    assert_eq!(i, mutual_information(&p.with_efficiency(0.5)).unwrap());
}

proptest! {
    #[test]
    fn rate_is_affine_in_efficiency(
        beta in 0.01f64..=1.0,
        t in 0.05f64..=1.0,
        kappa in 0.0f64..=30.0,
        reverse in any::<bool>(),
    ) {
        let dir = if reverse { Direction::Reverse } else { Direction::Direct };
        let p = ProtocolParams::default()
            .with_transmission(t)
            .with_preparation_noise(kappa)
            .with_direction(dir);
        let full = key_rate(&p.with_efficiency(1.0)).unwrap();
        let r = key_rate(&p.with_efficiency(beta)).unwrap();
        prop_assert!((r.key_rate - (beta * full.mutual_info - full.holevo)).abs() < 1e-10);
        let supplied = key_rate_with_mutual_info(&p.with_efficiency(beta), full.mutual_info).unwrap();
        prop_assert!((supplied.key_rate - r.key_rate).abs() < 1e-12);
    }

    #[test]
    fn holevo_at_most_eve_entropy(t in 0.0f64..=1.0, kappa in 0.0f64..=30.0, w in 1.0f64..=2.0) {
        let p = ProtocolParams::default().with_transmission(t).with_preparation_noise(kappa).with_eve_variance(w);
        let (hi, lo) = eve_spectrum_analytic(&p).unwrap();
        let s_e = g_oracle(hi) + g_oracle(lo);
        for dir in [Direction::Direct, Direction::Reverse] {
            prop_assert!(holevo(&p.with_direction(dir)).unwrap() <= s_e + 1e-9);
        }
    }
}
