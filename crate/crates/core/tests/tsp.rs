mod common;

use std::f64::consts::TAU;

use itertools::Itertools;
use num_complex::Complex64;
use proptest::prelude::*;
use qflow_core::circuit::Gate;
use qflow_core::sim::{outcome_probabilities, run_ideal, run_noisy, Histogram, NoiseModel, StateVector};
use qflow_core::tsp::{
    build_tour_unitary, build_tsp_circuits, classical_brute_force, decode_tsp, eigen_index, enumerate_tours,
    generate_instance, tour_eigenstate, tour_from_eigenstate, Convention, DecodeDocument, TspEncoding, TspError,
    TspInstance, TspTour,
};
use qflow_core::Seed;

fn square() -> TspInstance {
    TspInstance::from_coords(vec![(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)]).unwrap()
}

/// Length of the closed cycle through `order`, summed from coordinates.
fn cycle_length(inst: &TspInstance, order: &[usize]) -> f64 {
    let c = inst.coords();
    (0..order.len())
        .map(|k| {
            let (a, b) = (c[order[k]], c[order[(k + 1) % order.len()]]);
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
        })
        .sum()
}

fn histograms_ideal(inst: &TspInstance, enc: &TspEncoding, seed: u64) -> Vec<Histogram> {
    build_tsp_circuits(inst, enc)
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, c)| run_ideal(c, 4000, Seed(seed).derive(i as u64)).unwrap())
        .collect()
}

#[test]
fn eigenstates_are_eigenvectors_with_tour_phase() {
    for seed in 0..25 {
        let inst = generate_instance(Seed(seed), 4).unwrap();
        for conv in [Convention::Paper, Convention::Natural] {
            let enc = TspEncoding::auto(&inst, 6, conv);
            let gate = Gate::Diagonal(build_tour_unitary(&inst, &enc).unwrap());
            let s = if conv == Convention::Paper { -1.0 } else { 1.0 };
            for tour in enumerate_tours(4).unwrap() {
                let idx = eigen_index(&tour_eigenstate(&tour).unwrap());
                let mut state = StateVector::basis(8, idx).unwrap();
                state.apply(&gate).unwrap();
                let d = cycle_length(&inst, &tour.order().iter().map(|v| v - 1).collect::<Vec<_>>());
                let expected = Complex64::from_polar(1.0, s * enc.lambda * d);
                assert!((state.amplitudes()[idx] - expected).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn circuits_have_expected_shape() {
    let inst = generate_instance(Seed(3), 4).unwrap();
    let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
    let circuits = build_tsp_circuits(&inst, &enc).unwrap();
    assert_eq!(circuits.len(), 3);
    for (c, tour) in circuits.iter().zip(enumerate_tours(4).unwrap()) {
        assert_eq!(c.n_qubits(), 14);
        assert_eq!(c.n_clbits(), 6);
        assert_eq!(c.measurements().len(), 6);
        assert!(c.measurements().iter().all(|&(q, _)| q < 6));
        // X gates only at eigen-register positions of the '1' characters
        let bits = tour_eigenstate(&tour).unwrap();
        let mut xs: Vec<usize> = c
            .ops()
            .iter()
            .filter_map(|g| match g {
                Gate::PauliX(q) => Some(*q),
                _ => None,
            })
            .collect();
        xs.sort();
        let expected: Vec<usize> = bits
            .char_indices()
            .filter(|&(_, ch)| ch == '1')
            .map(|(i, _)| 6 + 7 - i)
            .sorted()
            .collect();
        assert_eq!(xs, expected);
    }
}

#[test]
fn perimeter_eigen_register_matches_printed_string() {
    // measuring the prepared eigen register would print the eigenstate string
    let inst = square();
    let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
    let c = &build_tsp_circuits(&inst, &enc).unwrap()[0];
    let mut prep_only = qflow_core::circuit::Circuit::new(14, 8);
    for g in c.ops().iter().filter(|g| matches!(g, Gate::PauliX(_))) {
        prep_only.push(g.clone());
    }
    prep_only.measure((6..14).collect(), (0..8).collect());
    let h = run_ideal(&prep_only, 10, Seed(0)).unwrap();
    assert_eq!(h.count("11000110"), 10);
}

#[test]
fn exact_mode_is_nearest_grid_point() {
    for seed in 0..15 {
        let inst = generate_instance(Seed(seed), 4).unwrap();
        let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
        let circuits = build_tsp_circuits(&inst, &enc).unwrap();
        for (c, tour) in circuits.iter().zip(enumerate_tours(4).unwrap()) {
            let probs = outcome_probabilities(c).unwrap();
            let mode = probs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0 as u64;
            let phi = (-enc.lambda * inst.tour_distance(&tour)).rem_euclid(TAU);
            let nearest = (64.0 * phi / TAU).round() as u64 % 64;
            assert_eq!(mode, nearest, "seed {seed} tour {tour}");
        }
    }
}

#[test]
fn square_decodes_to_perimeter() {
    let inst = square();
    for conv in [Convention::Paper, Convention::Natural] {
        let enc = TspEncoding::auto(&inst, 6, conv);
        let d = decode_tsp(&histograms_ideal(&inst, &enc, 1), &inst, &enc).unwrap();
        assert_eq!(d.best_tour().label(), "1-2-3-4-1");
        assert!(d.verified);
        assert_eq!(d.best, 0);
    }
}

#[test]
fn negative_phase_largest_reading_is_shortest() {
    for seed in 0..10 {
        let inst = generate_instance(Seed(seed), 4).unwrap();
        let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
        let d = decode_tsp(&histograms_ideal(&inst, &enc, seed), &inst, &enc).unwrap();
        let max_y = d.tours.iter().map(|t| t.y_mode).max().unwrap();
        assert_eq!(d.tours[d.best].y_mode, max_y);
    }
}

#[test]
fn hundred_instances_decode_correctly() {
    let mut good = 0;
    for seed in 0..100 {
        let inst = generate_instance(Seed(seed), 4).unwrap();
        let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
        let d = decode_tsp(&histograms_ideal(&inst, &enc, seed), &inst, &enc).unwrap();
        let brute = classical_brute_force(&inst);
        let exact_hit = brute.best.contains(&d.best);
        let flagged_tie = d.is_tie() && brute.best.iter().any(|b| d.near_ties.contains(b));
        if exact_hit || flagged_tie {
            good += 1;
        }
        assert!(d.verified || !exact_hit);
    }
    assert!(good >= 95, "{good}/100");
}

#[test]
fn conventions_agree_on_best_tour() {
    for seed in 0..30 {
        let inst = generate_instance(Seed(seed), 4).unwrap();
        let neg = TspEncoding::auto(&inst, 6, Convention::Paper);
        let natural = TspEncoding::auto(&inst, 6, Convention::Natural);
        let a = decode_tsp(&histograms_ideal(&inst, &neg, seed), &inst, &neg).unwrap();
        let b = decode_tsp(&histograms_ideal(&inst, &natural, seed), &inst, &natural).unwrap();
        let a_set: Vec<usize> = a.near_ties.clone();
        assert!(a.best == b.best || a_set.contains(&b.best), "seed {seed}");
    }
}

#[test]
fn scaling_by_powers_of_two_is_bit_identical() {
    for seed in 0..10 {
        let inst = generate_instance(Seed(seed), 4).unwrap();
        let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
        let base = build_tour_unitary(&inst, &enc).unwrap();
        for c in [0.25, 2.0, 8.0] {
            let scaled = inst.scaled(c).unwrap();
            let enc_s = TspEncoding::auto(&scaled, 6, Convention::Paper);
            assert_eq!(build_tour_unitary(&scaled, &enc_s).unwrap(), base);
        }
    }
}

#[test]
fn arbitrary_scaling_keeps_the_decision() {
    for seed in 0..10 {
        let inst = generate_instance(Seed(seed), 4).unwrap();
        let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
        let base = decode_tsp(&histograms_ideal(&inst, &enc, seed), &inst, &enc).unwrap();
        let scaled = inst.scaled(3.7).unwrap();
        let enc_s = TspEncoding::auto(&scaled, 6, Convention::Paper);
        let other = decode_tsp(&histograms_ideal(&scaled, &enc_s, seed), &scaled, &enc_s).unwrap();
        assert_eq!(base.best, other.best);
        let ys: Vec<u64> = base.tours.iter().map(|t| t.y_mode).collect();
        let ys_s: Vec<u64> = other.tours.iter().map(|t| t.y_mode).collect();
        assert_eq!(ys, ys_s);
    }
}

#[test]
fn brute_force_matches_full_permutation_search() {
    for seed in 0..40 {
        let n = 4 + seed as usize % 3;
        let inst = generate_instance(Seed(seed), n).unwrap();
        let brute = classical_brute_force(&inst);
        let full_min = (0..n)
            .permutations(n)
            .map(|p| cycle_length(&inst, &p))
            .fold(f64::INFINITY, f64::min);
        assert!((brute.best_distance - full_min).abs() < 1e-9);
        let expected_count = (1..n).product::<usize>() / 2;
        assert_eq!(brute.tours.len(), expected_count);
    }
}

#[test]
fn equal_readings_flag_a_full_tie() {
    let inst = square();
    let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
    let h = Histogram::from_values(6, [40, 40, 40]);
    let d = decode_tsp(&[h.clone(), h.clone(), h], &inst, &enc).unwrap();
    assert_eq!(d.near_ties, vec![0, 1, 2]);
    assert!(d.is_tie());
}

#[test]
fn decode_errors() {
    let inst = square();
    let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
    let h = Histogram::from_values(6, [1]);
    assert!(matches!(
        decode_tsp(&[h.clone(), h.clone()], &inst, &enc),
        Err(TspError::HistogramCount { expected: 3, found: 2 })
    ));
    let narrow = Histogram::from_values(5, [1]);
    assert!(matches!(
        decode_tsp(&[h.clone(), h, narrow], &inst, &enc),
        Err(TspError::HistogramWidth { index: 2, .. })
    ));
}

#[test]
fn decode_document_shape() {
    let inst = square();
    let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
    let d = decode_tsp(&histograms_ideal(&inst, &enc, 0), &inst, &enc).unwrap();
    let doc = serde_json::to_value(DecodeDocument::from(&d)).unwrap();
    assert_eq!(doc["best"], "1-2-3-4-1");
    assert_eq!(doc["tours"][0]["eigenstate"], "11000110");
    assert_eq!(doc["tours"].as_array().unwrap().len(), 3);
    assert_eq!(doc["verified"], true);
}

#[test]
fn gate_noise_blurs_the_reading() {
    let inst = generate_instance(Seed(5), 4).unwrap();
    let enc = TspEncoding::auto(&inst, 6, Convention::Paper);
    let c = &build_tsp_circuits(&inst, &enc).unwrap()[0];
    let ideal = run_ideal(c, 1000, Seed(1)).unwrap();
    let (peak, _) = ideal.mode().unwrap();
    let key = format!("{peak:06b}");
    let mut last = ideal.frequency(&key);
    for p in [0.02, 0.08] {
        let noisy = run_noisy(c, 1000, &NoiseModel::new(p, 0.0).unwrap(), Seed(1)).unwrap();
        let f = noisy.frequency(&key);
        assert!(f < last, "p={p}: {f} vs {last}");
        last = f;
    }
}

proptest! {
    #[test]
    fn eigenstate_encoding_round_trips_for_any_order(perm in Just((2..=4usize).collect::<Vec<_>>()).prop_shuffle()) {
        let mut order = vec![1];
        order.extend(perm);
        let tour = TspTour::new(order).unwrap();
        let back = tour_from_eigenstate(&tour_eigenstate(&tour).unwrap()).unwrap();
        prop_assert_eq!(back, tour);
    }

    #[test]
    fn generated_instances_are_valid(seed in any::<u64>(), n in 4usize..=8) {
        let inst = generate_instance(Seed(seed), n).unwrap();
        for i in 0..n {
            prop_assert_eq!(inst.dist()[i][i], 0.0);
            for j in 0..n {
                prop_assert_eq!(inst.dist()[i][j], inst.dist()[j][i]);
                if i != j {
                    prop_assert!(inst.dist()[i][j] > 0.0);
                }
            }
        }
        prop_assert!(TspEncoding::auto(&inst, 6, Convention::Paper).check(&inst).is_ok() || n != 4);
    }
}
