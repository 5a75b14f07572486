//! The pool of binary perturbation operators.
//!
//! Every operator derives a candidate from the bee's current solution and, for
//! the crossover-style operators, a randomly chosen neighbour (the global best
//! is available for context). If an operator happens to reproduce the current
//! solution exactly, one uniformly chosen bit is flipped so that a step is
//! always taken.

use crate::bits::BinaryVector;
use rand::Rng;

/// The four base operators, in pool order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseOp {
    /// Single uniformly chosen bit flip.
    Flip,
    /// Uniform crossover: copy each neighbour bit with a fixed probability.
    N,
    /// Uniform crossover whose copy probability decays over the run.
    Ibin,
    /// Complement a contiguous (wrapping) block of random length.
    Nb,
}

impl BaseOp {
    pub const ALL: [BaseOp; 4] = [BaseOp::Flip, BaseOp::N, BaseOp::Ibin, BaseOp::Nb];

    pub fn index(self) -> usize {
        match self {
            BaseOp::Flip => 0,
            BaseOp::N => 1,
            BaseOp::Ibin => 2,
            BaseOp::Nb => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<BaseOp> {
        BaseOp::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BaseOp::Flip => "flip",
            BaseOp::N => "n",
            BaseOp::Ibin => "ibin",
            BaseOp::Nb => "nb",
        }
    }

    pub fn from_name(name: &str) -> Option<BaseOp> {
        BaseOp::ALL.into_iter().find(|op| op.name() == name)
    }
}

impl std::fmt::Display for BaseOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tunable operator constants.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorParams {
    /// Per-bit copy probability of [`BaseOp::N`].
    pub p_copy: f64,
    /// Initial per-bit copy probability of [`BaseOp::Ibin`].
    pub mr_max: f64,
    /// Final per-bit copy probability of [`BaseOp::Ibin`].
    pub mr_min: f64,
    /// Smallest segment fraction of [`BaseOp::Nb`].
    pub seg_min: f64,
    /// Largest segment fraction of [`BaseOp::Nb`].
    pub seg_max: f64,
}

impl Default for OperatorParams {
    fn default() -> Self {
        OperatorParams {
            p_copy: 0.3,
            mr_max: 0.3,
            mr_min: 0.01,
            seg_min: 0.1,
            seg_max: 0.5,
        }
    }
}

/// Everything an operator may look at when building a candidate.
pub struct OperatorContext<'a> {
    pub current: &'a BinaryVector,
    pub neighbor: &'a BinaryVector,
    pub global_best: &'a BinaryVector,
    /// Current iteration, `0..max_iterations`.
    pub iteration: usize,
    pub max_iterations: usize,
}

/// Applies an operator. The result always differs from `ctx.current` in at
/// least one bit.
pub fn apply(
    op: BaseOp,
    ctx: &OperatorContext,
    params: &OperatorParams,
    rng: &mut impl Rng,
) -> BinaryVector {
    match op {
        BaseOp::Flip => flip_abc(ctx, rng),
        BaseOp::N => n_abc(ctx, params, rng),
        BaseOp::Ibin => ibin_abc(ctx, params, rng),
        BaseOp::Nb => nb_abc(ctx, params, rng),
    }
}

/// Flips one uniformly chosen bit of the current solution.
pub fn flip_abc(ctx: &OperatorContext, rng: &mut impl Rng) -> BinaryVector {
    let mut out = ctx.current.clone();
    out.flip(rng.random_range(0..out.len()));
    out
}

/// Copies each neighbour bit with probability `p_copy`.
pub fn n_abc(ctx: &OperatorContext, params: &OperatorParams, rng: &mut impl Rng) -> BinaryVector {
    let mut out = ctx.current.clone();
    for i in 0..out.len() {
        if rng.random::<f64>() < params.p_copy {
            out.set(i, ctx.neighbor.get(i));
        }
    }
    ensure_moved(&mut out, ctx.current, rng);
    out
}

/// Per-iteration copy probability of [`ibin_abc`]: decays linearly from
/// `mr_max` at the start of the run to `mr_min` at the end.
pub fn ibin_rate(params: &OperatorParams, iteration: usize, max_iterations: usize) -> f64 {
    let t = iteration as f64 / max_iterations.max(1) as f64;
    params.mr_max - (params.mr_max - params.mr_min) * t
}

/// Copies each neighbour bit with the decaying probability [`ibin_rate`].
pub fn ibin_abc(ctx: &OperatorContext, params: &OperatorParams, rng: &mut impl Rng) -> BinaryVector {
    let rate = ibin_rate(params, ctx.iteration, ctx.max_iterations);
    let mut out = ctx.current.clone();
    for i in 0..out.len() {
        if rng.random::<f64>() < rate {
            out.set(i, ctx.neighbor.get(i));
        }
    }
    ensure_moved(&mut out, ctx.current, rng);
    out
}

/// Complements a wrapping block of the current solution: the biggest mover of
/// the pool. The block fraction is drawn uniformly from `[seg_min, seg_max]`
/// and the start position uniformly from the whole vector. Unlike the
/// crossover operators this one injects fresh variation instead of pulling
/// bees together, so it keeps the population from collapsing early.
pub fn nb_abc(ctx: &OperatorContext, params: &OperatorParams, rng: &mut impl Rng) -> BinaryVector {
    let d = ctx.current.len();
    let fraction = rng.random_range(params.seg_min..=params.seg_max);
    let length = ((d as f64 * fraction).ceil() as usize).clamp(1, d);
    let start = rng.random_range(0..d);
    let mut out = ctx.current.clone();
    for off in 0..length {
        let i = (start + off) % d;
        out.set(i, !ctx.current.get(i));
    }
    out
}

fn ensure_moved(out: &mut BinaryVector, current: &BinaryVector, rng: &mut impl Rng) {
    if out == current {
        out.flip(rng.random_range(0..out.len()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx<'a>(
        current: &'a BinaryVector,
        neighbor: &'a BinaryVector,
        best: &'a BinaryVector,
        t: usize,
        max_t: usize,
    ) -> OperatorContext<'a> {
        OperatorContext {
            current,
            neighbor,
            global_best: best,
            iteration: t,
            max_iterations: max_t,
        }
    }

    #[test]
    fn flip_changes_exactly_one_bit() {
        let cur = BinaryVector::from_bitstring("000").unwrap();
        let nb = BinaryVector::from_bitstring("111").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let child = flip_abc(&ctx(&cur, &nb, &nb, 0, 10), &mut rng);
            assert_eq!(child.hamming(&cur), 1);
        }
    }

    #[test]
    fn every_operator_moves_at_least_one_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..200 {
            let cur = BinaryVector::random(40, &mut rng);
            // Copy operators reproduce the parent when the neighbour is equal
            // to it; the forced flip must still move.
            let nb = if trial % 3 == 0 {
                cur.clone()
            } else {
                BinaryVector::random(40, &mut rng)
            };
            for op in BaseOp::ALL {
                let child = apply(
                    op,
                    &ctx(&cur, &nb, &cur, trial % 10, 10),
                    &OperatorParams::default(),
                    &mut rng,
                );
                assert!(child.hamming(&cur) >= 1, "{op} returned the parent");
                assert_eq!(child.len(), cur.len());
            }
        }
    }

    #[test]
    fn n_abc_copy_fraction_matches_p_copy() {
        let cur = BinaryVector::zeros(2000);
        let nb = BinaryVector::ones(2000);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = OperatorParams::default();
        let mut copied = 0usize;
        let reps = 50;
        for _ in 0..reps {
            let child = n_abc(&ctx(&cur, &nb, &nb, 0, 10), &params, &mut rng);
            copied += child.count_ones();
        }
        let fraction = copied as f64 / (2000 * reps) as f64;
        // Binomial(100000, 0.3): three sigma is about 0.0044.
        assert!((fraction - params.p_copy).abs() < 0.01, "fraction {fraction}");
    }

    #[test]
    fn ibin_rate_decays_linearly() {
        let params = OperatorParams::default();
        assert_eq!(ibin_rate(&params, 0, 100), params.mr_max);
        assert!((ibin_rate(&params, 100, 100) - params.mr_min).abs() < 1e-12);
        let mid = ibin_rate(&params, 50, 100);
        assert!((mid - (params.mr_max + params.mr_min) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn ibin_abc_copies_fewer_bits_late_in_the_run() {
        let cur = BinaryVector::zeros(2000);
        let nb = BinaryVector::ones(2000);
        let params = OperatorParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut early = 0usize;
        let mut late = 0usize;
        for _ in 0..30 {
            early += ibin_abc(&ctx(&cur, &nb, &nb, 0, 100), &params, &mut rng).count_ones();
            late += ibin_abc(&ctx(&cur, &nb, &nb, 99, 100), &params, &mut rng).count_ones();
        }
        assert!(early > late, "early {early} late {late}");
        let late_rate = late as f64 / (30.0 * 2000.0);
        assert!(late_rate < 0.05, "late rate {late_rate} should approach mr_min");
    }

    #[test]
    fn nb_abc_complements_a_wrapping_block() {
        let cur = BinaryVector::zeros(60);
        let nb = BinaryVector::ones(60);
        let params = OperatorParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let child = nb_abc(&ctx(&cur, &nb, &nb, 0, 10), &params, &mut rng);
            // Complementing a block of an all-zero vector turns exactly the
            // block to ones.
            let ones = child.count_ones();
            let lo = (60.0 * params.seg_min).ceil() as usize;
            let hi = (60.0 * params.seg_max).ceil() as usize;
            assert!((lo..=hi).contains(&ones), "block of {ones} bits");
            // The block is contiguous on the cycle, so the number of 0->1
            // boundaries is exactly one.
            let mut boundaries = 0;
            for i in 0..60 {
                let next = (i + 1) % 60;
                if !child.get(i) && child.get(next) {
                    boundaries += 1;
                }
            }
            assert_eq!(boundaries, 1);
        }
    }

    #[test]
    fn full_block_complements_the_whole_vector() {
        let cur = BinaryVector::from_bitstring("0101").unwrap();
        let nb = BinaryVector::from_bitstring("1111").unwrap();
        let params = OperatorParams {
            seg_min: 1.0,
            seg_max: 1.0,
            ..OperatorParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let child = nb_abc(&ctx(&cur, &nb, &nb, 0, 10), &params, &mut rng);
        assert_eq!(child, BinaryVector::from_bitstring("1010").unwrap());
    }

    #[test]
    fn operators_are_seed_deterministic() {
        let mut r1 = ChaCha8Rng::seed_from_u64(77);
        let mut r2 = ChaCha8Rng::seed_from_u64(77);
        let cur = BinaryVector::random(128, &mut r1);
        let cur2 = BinaryVector::random(128, &mut r2);
        let nb = BinaryVector::random(128, &mut r1);
        let nb2 = BinaryVector::random(128, &mut r2);
        for op in BaseOp::ALL {
            let a = apply(op, &ctx(&cur, &nb, &nb, 3, 10), &OperatorParams::default(), &mut r1);
            let b = apply(op, &ctx(&cur2, &nb2, &nb2, 3, 10), &OperatorParams::default(), &mut r2);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn name_index_roundtrip() {
        for op in BaseOp::ALL {
            assert_eq!(BaseOp::from_index(op.index()), Some(op));
            assert_eq!(BaseOp::from_name(op.name()), Some(op));
        }
        assert_eq!(BaseOp::from_index(4), None);
        assert_eq!(BaseOp::from_name("bogus"), None);
    }
}
