//! Property tests for the structural invariants of the crate: distance axioms,
//! serialisation roundtrips, repair feasibility, operator progress guarantees,
//! feature ranges and the exact signed-rank test against brute-force
//! enumeration.

use aosabc::bits::BinaryVector;
use aosabc::features::{
    assemble_state, population_features, IndividualContext, PopulationSnapshot, StateFeatures,
    FEATURE_DIM,
};
use aosabc::operators::{apply, BaseOp, OperatorContext, OperatorParams};
use aosabc::problems::{generate_sukp, parse_sukp, Problem};
use aosabc::selector::{subspace_index, CentreEntry, SelectorModel};
use aosabc::stats::wilcoxon_signed_rank;
use aosabc::transfer::{blend, ModelArchive, Provenance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bits_strategy(max_len: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 1..=max_len)
}

/// Three bit vectors of one shared length.
fn three_vectors() -> impl Strategy<Value = (Vec<bool>, Vec<bool>, Vec<bool>)> {
    (1usize..=192).prop_flat_map(|len| {
        (
            prop::collection::vec(any::<bool>(), len),
            prop::collection::vec(any::<bool>(), len),
            prop::collection::vec(any::<bool>(), len),
        )
    })
}

fn to_vector(bits: &[bool]) -> BinaryVector {
    BinaryVector::from_bits(&bits.iter().map(|&b| b as u8).collect::<Vec<_>>())
}

proptest! {
    #[test]
    fn hamming_satisfies_the_metric_axioms((a, b, c) in three_vectors()) {
        let (a, b, c) = (to_vector(&a), to_vector(&b), to_vector(&c));
        prop_assert_eq!(a.hamming(&a), 0);
        prop_assert_eq!(a.hamming(&b), b.hamming(&a));
        prop_assert!(a.hamming(&c) <= a.hamming(&b) + b.hamming(&c));
        // Distinct vectors are at positive distance.
        if a != b {
            prop_assert!(a.hamming(&b) > 0);
        }
    }

    #[test]
    fn bit_vector_serialisation_roundtrips(bits in bits_strategy(300)) {
        let v = to_vector(&bits);
        prop_assert_eq!(v.len(), bits.len());
        prop_assert_eq!(BinaryVector::from_bitstring(&v.to_bitstring()).unwrap(), v.clone());
        prop_assert_eq!(BinaryVector::from_bits(&v.to_bits()), v.clone());
        prop_assert_eq!(v.count_ones(), bits.iter().filter(|&&b| b).count());
        prop_assert_eq!(v.hamming(&BinaryVector::zeros(v.len())), v.count_ones());
    }

    #[test]
    fn iter_ones_agrees_with_indexed_access(bits in bits_strategy(300)) {
        let v = to_vector(&bits);
        let listed: Vec<usize> = v.iter_ones().collect();
        let expected: Vec<usize> = (0..v.len()).filter(|&i| v.get(i)).collect();
        prop_assert_eq!(listed, expected);
    }

    #[test]
    fn sukp_text_roundtrips_byte_for_byte(
        m in 3usize..=12,
        n in 3usize..=10,
        density in 0.05f64..=0.95,
        rate in 0.3f64..=0.9,
        seed in any::<u64>(),
    ) {
        let inst = generate_sukp(m, n, density, rate, seed).unwrap();
        let text = inst.to_text();
        let parsed = parse_sukp(&text).unwrap();
        prop_assert_eq!(parsed.m(), inst.m());
        prop_assert_eq!(parsed.n(), inst.n());
        prop_assert_eq!(parsed.capacity(), inst.capacity());
        prop_assert_eq!(parsed.profits(), inst.profits());
        prop_assert_eq!(parsed.weights(), inst.weights());
        for i in 0..m {
            prop_assert_eq!(parsed.covers(i), inst.covers(i));
        }
        prop_assert_eq!(parsed.id(), inst.id());
        prop_assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn sukp_repair_is_feasible_maximal_and_idempotent(
        m in 2usize..=12,
        n in 2usize..=10,
        density in 0.1f64..=0.9,
        rate in 0.3f64..=0.9,
        seed in any::<u64>(),
        candidate_seed in any::<u64>(),
    ) {
        let inst = generate_sukp(m, n, density, rate, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(candidate_seed);
        let raw = BinaryVector::random(m, &mut rng);
        let repaired = inst.repair(raw);
        // Feasible.
        let load = inst.union_weight(&repaired).unwrap();
        prop_assert!(load <= inst.capacity());
        // Maximal: no further item fits.
        for i in 0..m {
            if !repaired.get(i) {
                let mut grown = repaired.clone();
                grown.set(i, true);
                prop_assert!(inst.union_weight(&grown).unwrap() > inst.capacity());
            }
        }
        // Idempotent.
        prop_assert_eq!(inst.repair(repaired.clone()), repaired.clone());
        // Evaluation scores exactly the repaired candidate.
        let (scored, fitness) = inst.evaluate(repaired.clone());
        prop_assert_eq!(&scored, &repaired);
        prop_assert_eq!(fitness.value(), inst.profit(&repaired));
    }

    #[test]
    fn every_operator_always_takes_a_step(
        len in 1usize..=96,
        seed in any::<u64>(),
        iteration in 0usize..=10,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let current = BinaryVector::random(len, &mut rng);
        // Worst case for the copy operators: the neighbour equals the parent.
        for neighbor in [current.clone(), BinaryVector::random(len, &mut rng)] {
            for op in BaseOp::ALL {
                let ctx = OperatorContext {
                    current: &current,
                    neighbor: &neighbor,
                    global_best: &neighbor,
                    iteration,
                    max_iterations: 10,
                };
                let child = apply(op, &ctx, &OperatorParams::default(), &mut rng);
                prop_assert_eq!(child.len(), len);
                prop_assert!(child.hamming(&current) >= 1);
            }
        }
    }

    #[test]
    fn population_features_ignore_event_order(
        n in 2usize..=7,
        d in 2usize..=40,
        seed in any::<u64>(),
        rotation in 0usize..=6,
    ) {
        let mut snap = random_snapshot(n, d, seed);
        let base = population_features(&snap).unwrap();
        let k = rotation % n;
        snap.parents.rotate_left(k);
        snap.children.rotate_left(k);
        snap.parent_fitness.rotate_left(k);
        snap.child_fitness.rotate_left(k);
        snap.trials.rotate_left(k);
        let rotated = population_features(&snap).unwrap();
        for (a, b) in base.iter().zip(rotated) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn assembled_states_stay_in_their_boxes(
        n in 2usize..=7,
        d in 2usize..=40,
        seed in any::<u64>(),
        member in 0usize..=6,
    ) {
        let snap = random_snapshot(n, d, seed);
        let i = member % n;
        let ctx = IndividualContext {
            parent: &snap.parents[i],
            child: &snap.children[i],
            parent_fitness: snap.parent_fitness[i],
            child_fitness: snap.child_fitness[i],
            trial: snap.trials[i],
            op_successes: (seed % 5).min(seed % 7),
            op_uses: seed % 7,
        };
        let state = assemble_state(&snap, &ctx).unwrap();
        for c in 1..=FEATURE_DIM {
            let (lo, hi) = StateFeatures::range(c);
            let v = state.phi(c);
            prop_assert!(v.is_finite() && v >= lo && v <= hi, "component {c} = {v}");
        }
        prop_assert_eq!(state.phi(9), state.phi(4) * state.phi(8));
    }

    #[test]
    fn model_archives_roundtrip_exactly(
        sections in 1usize..=6,
        seed in any::<u64>(),
        episodes in 0u64..=100,
    ) {
        let model = random_model(sections, seed);
        let archive = ModelArchive::new(
            model,
            Provenance {
                instance_id: format!("instance_{seed}"),
                episodes,
                seeds: (0..(seed % 5)).collect(),
            },
        );
        let text = archive.to_text();
        let back = ModelArchive::from_text(&text).unwrap();
        prop_assert_eq!(&back.model, &archive.model);
        prop_assert_eq!(&back.provenance, &archive.provenance);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn blending_stays_between_its_inputs(
        sections in 1usize..=4,
        seed_a in any::<u64>(),
        seed_b in any::<u64>(),
        delta in 0.0f64..=1.0,
    ) {
        let a = random_model(sections, seed_a);
        let b = random_model(sections, seed_b);
        let mixed = blend(&a, &b, delta).unwrap();
        for ((ma, mb), mm) in a.entries().iter().zip(b.entries()).zip(mixed.entries()) {
            let (lo, hi) = (ma.q.min(mb.q), ma.q.max(mb.q));
            prop_assert!(mm.q >= lo - 1e-9 && mm.q <= hi + 1e-9);
            prop_assert!(mm.successes >= ma.successes.min(mb.successes));
            prop_assert!(mm.successes <= ma.successes.max(mb.successes));
            for ((ca, cb), cm) in ma.centre.iter().zip(&mb.centre).zip(&mm.centre) {
                let (lo, hi) = (ca.min(*cb), ca.max(*cb));
                prop_assert!(*cm >= lo - 1e-9 && *cm <= hi + 1e-9);
            }
        }
        // Self-blend reproduces the model bit for bit at any weight.
        prop_assert_eq!(blend(&a, &a, delta).unwrap(), a);
    }

    #[test]
    fn subspace_index_is_monotone_and_balanced(
        max_iterations in 1usize..=400,
        sections in 1usize..=8,
    ) {
        let mut previous = 0;
        for t in 0..max_iterations {
            let s = subspace_index(t, max_iterations, sections);
            prop_assert!(s < sections);
            prop_assert!(s >= previous, "section dropped from {previous} to {s} at {t}");
            previous = s;
        }
        prop_assert_eq!(subspace_index(0, max_iterations, sections), 0);
        // Equal-sized sections whenever the budget splits evenly.
        if max_iterations % sections == 0 {
            let width = max_iterations / sections;
            for t in 0..max_iterations {
                prop_assert_eq!(subspace_index(t, max_iterations, sections), t / width);
            }
        }
    }

    #[test]
    fn exact_wilcoxon_matches_sign_enumeration(
        pairs in prop::collection::vec((0u8..6, 0u8..6), 1..=10),
    ) {
        let a: Vec<f64> = pairs.iter().map(|(x, _)| *x as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|(_, y)| *y as f64).collect();
        let fast = wilcoxon_signed_rank(&a, &b).unwrap();
        let slow = enumerated_wilcoxon(&a, &b);
        prop_assert!((fast - slow).abs() < 1e-12, "fast {fast} slow {slow}");
    }
}

/// Builds an internally consistent snapshot from a seed: children share the
/// parents' dimension, bests come from the population itself.
fn random_snapshot(n: usize, d: usize, seed: u64) -> PopulationSnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vecs = |rng: &mut ChaCha8Rng| -> Vec<BinaryVector> {
        (0..n).map(|_| BinaryVector::random(d, rng)).collect()
    };
    let parents = vecs(&mut rng);
    let children = vecs(&mut rng);
    let fits = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rand::Rng::random_range(rng, 0.0..100.0)).collect()
    };
    let parent_fitness = fits(&mut rng);
    let child_fitness = fits(&mut rng);
    let best = parent_fitness
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let worst = parent_fitness
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    PopulationSnapshot {
        population_best: parents[best].clone(),
        population_worst: parents[worst].clone(),
        global_best: parents[best].clone(),
        global_best_fitness: parent_fitness[best],
        parents,
        children,
        parent_fitness,
        child_fitness,
        trials: (0..n).map(|i| (seed.wrapping_add(i as u64) % 13) as u32).collect(),
        trial_max: 12,
        dimension: d,
    }
}

/// A model with pseudo-random but finite entry values.
fn random_model(sections: usize, seed: u64) -> SelectorModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut value = move || rand::Rng::random_range(&mut rng, -1000.0..1000.0);
    let entries: Vec<CentreEntry> = (0..4 * sections)
        .map(|k| CentreEntry {
            centre: (0..FEATURE_DIM).map(|_| value()).collect(),
            successes: (seed % 50).wrapping_add(k as u64),
            usage: (seed % 90).wrapping_add(2 * k as u64),
            q: value(),
            credit: value(),
        })
        .collect();
    SelectorModel::from_entries(FEATURE_DIM, sections, entries).unwrap()
}

/// Brute-force two-sided signed-rank p-value: every one of the `2^n` sign
/// assignments of the ranked absolute differences is enumerated. Ranks are
/// computed by counting, independently of the implementation under test.
fn enumerated_wilcoxon(a: &[f64], b: &[f64]) -> f64 {
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return 1.0;
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|&x| {
            let below = abs.iter().filter(|&&y| y < x).count() as f64;
            let equal = abs.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let mut at_most = 0u64;
    let mut at_least = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        // Ranks are halves, so sums are exact dyadic rationals.
        if w <= observed {
            at_most += 1;
        }
        if w >= observed {
            at_least += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * at_most.min(at_least) as f64 / total).min(1.0)
}
