//! Set Union Knapsack Problem.
//!
//! Items carry profits; each item covers a subset of weighted elements. The
//! weight of a selection is the weight of the *union* of covered elements, and
//! it must not exceed the capacity. Infeasible candidates are repaired with a
//! deterministic drop-then-fill greedy before scoring.
//!
//! Instance file format (tokens are whitespace-separated, `#` starts a
//! comment line):
//!
//! ```text
//! # id: sukp_100x85_d0.1_r0.75_s7
//! m n capacity
//! p_1 ... p_m
//! w_1 ... w_n
//! m incidence rows of n 0/1 entries
//! ```
//!
//! Comment lines of the form `# id:`, `# density:`, `# rate:` and
//! `# best_known:` are read back as instance metadata; all other comments are
//! ignored.

use super::{Fitness, Problem, ProblemError};
use crate::bits::BinaryVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SukpInstance {
    id: String,
    profits: Vec<f64>,
    weights: Vec<f64>,
    /// One n-bit row per item; bit `e` is set when the item covers element `e`.
    incidence: Vec<BinaryVector>,
    capacity: f64,
    density: Option<f64>,
    rate: Option<f64>,
    best_known: Option<f64>,
}

impl SukpInstance {
    pub fn new(
        id: impl Into<String>,
        profits: Vec<f64>,
        weights: Vec<f64>,
        incidence: Vec<BinaryVector>,
        capacity: f64,
    ) -> Result<Self, ProblemError> {
        let bad = |msg: String| Err(ProblemError::InvalidParameter(msg));
        if profits.is_empty() {
            return bad("instance needs at least one item".into());
        }
        if weights.is_empty() {
            return bad("instance needs at least one element".into());
        }
        if incidence.len() != profits.len() {
            return bad(format!(
                "expected {} incidence rows, got {}",
                profits.len(),
                incidence.len()
            ));
        }
        if let Some(p) = profits.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return bad(format!("profits must be strictly positive, got {p}"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return bad(format!("element weights must be non-negative, got {w}"));
        }
        if !(capacity.is_finite() && capacity >= 0.0) {
            return bad(format!("capacity must be non-negative, got {capacity}"));
        }
        for (j, row) in incidence.iter().enumerate() {
            if row.len() != weights.len() {
                return bad(format!(
                    "incidence row {j} has {} entries, expected {}",
                    row.len(),
                    weights.len()
                ));
            }
            if row.count_ones() == 0 {
                return bad(format!("item {j} covers no elements"));
            }
        }
        Ok(SukpInstance {
            id: id.into(),
            profits,
            weights,
            incidence,
            capacity,
            density: None,
            rate: None,
            best_known: None,
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_meta(mut self, density: Option<f64>, rate: Option<f64>, best_known: Option<f64>) -> Self {
        self.density = density;
        self.rate = rate;
        self.best_known = best_known;
        self
    }

    /// Number of items (decision bits).
    pub fn m(&self) -> usize {
        self.profits.len()
    }

    /// Number of elements.
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn profits(&self) -> &[f64] {
        &self.profits
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covers(&self, item: usize) -> &BinaryVector {
        &self.incidence[item]
    }

    pub fn density(&self) -> Option<f64> {
        self.density
    }

    pub fn rate(&self) -> Option<f64> {
        self.rate
    }

    pub fn best_known(&self) -> Option<f64> {
        self.best_known
    }

    /// Union of the elements covered by the selected items.
    pub fn union(&self, x: &BinaryVector) -> BinaryVector {
        let mut u = BinaryVector::zeros(self.n());
        for j in x.iter_ones() {
            u.union_with(&self.incidence[j]);
        }
        u
    }

    /// Total weight of the elements covered by the selected items.
    pub fn union_weight(&self, x: &BinaryVector) -> Result<f64, ProblemError> {
        self.check_dimension(x)?;
        Ok(self.weight_of(&self.union(x)))
    }

    pub fn profit(&self, x: &BinaryVector) -> f64 {
        x.iter_ones().map(|j| self.profits[j]).sum()
    }

    fn weight_of(&self, elements: &BinaryVector) -> f64 {
        elements.iter_ones().map(|e| self.weights[e]).sum()
    }

    fn check_dimension(&self, x: &BinaryVector) -> Result<(), ProblemError> {
        if x.len() != self.m() {
            return Err(ProblemError::DimensionMismatch {
                expected: self.m(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Deterministic drop-then-fill repair.
    ///
    /// While the selection is overweight, the selected item with the lowest
    /// `profit / (uniquely contributed weight + 1)` ratio is dropped. Then
    /// unselected items are added greedily by descending
    /// `profit / (marginal weight + 1)` as long as they fit. Ties pick the
    /// lowest item index. The result is always feasible.
    pub fn repair(&self, mut x: BinaryVector) -> BinaryVector {
        assert_eq!(x.len(), self.m(), "candidate dimension mismatch");
        // cover[e] = how many selected items cover element e
        let mut cover = vec![0u32; self.n()];
        for j in x.iter_ones() {
            for e in self.incidence[j].iter_ones() {
                cover[e] += 1;
            }
        }
        let mut load: f64 = cover
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(e, _)| self.weights[e])
            .sum();

        while load > self.capacity {
            let mut victim: Option<(usize, f64)> = None;
            for j in 0..self.m() {
                if !x.get(j) {
                    continue;
                }
                let unique: f64 = self.incidence[j]
                    .iter_ones()
                    .filter(|&e| cover[e] == 1)
                    .map(|e| self.weights[e])
                    .sum();
                let ratio = self.profits[j] / (unique + 1.0);
                if victim.is_none_or(|(_, best)| ratio < best) {
                    victim = Some((j, ratio));
                }
            }
            let (j, _) = victim.expect("an overweight selection has at least one item");
            x.set(j, false);
            for e in self.incidence[j].iter_ones() {
                cover[e] -= 1;
                if cover[e] == 0 {
                    load -= self.weights[e];
                }
            }
        }

        loop {
            let mut pick: Option<(usize, f64)> = None;
            for j in 0..self.m() {
                if x.get(j) {
                    continue;
                }
                let marginal: f64 = self.incidence[j]
                    .iter_ones()
                    .filter(|&e| cover[e] == 0)
                    .map(|e| self.weights[e])
                    .sum();
                if load + marginal > self.capacity {
                    continue;
                }
                let ratio = self.profits[j] / (marginal + 1.0);
                if pick.is_none_or(|(_, best)| ratio > best) {
                    pick = Some((j, ratio));
                }
            }
            match pick {
                Some((j, _)) => {
                    x.set(j, true);
                    for e in self.incidence[j].iter_ones() {
                        if cover[e] == 0 {
                            load += self.weights[e];
                        }
                        cover[e] += 1;
                    }
                }
                None => break,
            }
        }
        x
    }

    /// Exhaustive optimum; exponential in the number of items.
    pub fn enumerate_optimum(&self) -> (BinaryVector, f64) {
        let m = self.m();
        assert!(m <= 25, "exhaustive enumeration is only intended for tiny instances");
        let word_count = self.n().div_ceil(64);
        let mut union = vec![0u64; word_count];
        let mut best_mask = 0u64;
        let mut best_profit = 0.0;
        for mask in 0u64..(1u64 << m) {
            union.fill(0);
            let mut profit = 0.0;
            for j in 0..m {
                if (mask >> j) & 1 == 1 {
                    profit += self.profits[j];
                    for (u, w) in union.iter_mut().zip(self.incidence[j].words()) {
                        *u |= w;
                    }
                }
            }
            if profit <= best_profit {
                continue;
            }
            let mut load = 0.0;
            for (wi, &w) in union.iter().enumerate() {
                let mut bits = w;
                while bits != 0 {
                    load += self.weights[wi * 64 + bits.trailing_zeros() as usize];
                    bits &= bits - 1;
                }
            }
            if load <= self.capacity {
                best_profit = profit;
                best_mask = mask;
            }
        }
        let mut x = BinaryVector::zeros(m);
        for j in 0..m {
            if (best_mask >> j) & 1 == 1 {
                x.set(j, true);
            }
        }
        (x, best_profit)
    }

    /// Serialises the instance in the text format accepted by [`parse_sukp`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# id: {}\n", self.id));
        if let Some(d) = self.density {
            out.push_str(&format!("# density: {d}\n"));
        }
        if let Some(r) = self.rate {
            out.push_str(&format!("# rate: {r}\n"));
        }
        if let Some(b) = self.best_known {
            out.push_str(&format!("# best_known: {b}\n"));
        }
        out.push_str(&format!("{} {} {}\n", self.m(), self.n(), self.capacity));
        out.push_str(&join_numbers(&self.profits));
        out.push('\n');
        out.push_str(&join_numbers(&self.weights));
        out.push('\n');
        for row in &self.incidence {
            let mut line = String::with_capacity(2 * self.n());
            for e in 0..self.n() {
                if e > 0 {
                    line.push(' ');
                }
                line.push(if row.get(e) { '1' } else { '0' });
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

fn join_numbers(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

impl Problem for SukpInstance {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.m()
    }

    fn evaluate(&self, candidate: BinaryVector) -> (BinaryVector, Fitness) {
        let repaired = self.repair(candidate);
        let profit = self.profit(&repaired);
        (repaired, Fitness::new(profit))
    }

    fn reference_fitness(&self) -> Option<f64> {
        self.best_known
    }

    fn default_population(&self) -> usize {
        self.m().max(self.n())
    }
}

/// Parses an instance from its text format. Errors carry 1-based line numbers.
pub fn parse_sukp(text: &str) -> Result<SukpInstance, ProblemError> {
    let mut id: Option<String> = None;
    let mut density = None;
    let mut rate = None;
    let mut best_known = None;
    let mut data: Vec<(usize, &str)> = Vec::new();
    let mut total_lines = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        total_lines = line_no;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("id:") {
                id = Some(v.trim().to_string());
            } else if let Some(v) = comment.strip_prefix("density:") {
                density = Some(parse_number(v.trim(), line_no, "density")?);
            } else if let Some(v) = comment.strip_prefix("rate:") {
                rate = Some(parse_number(v.trim(), line_no, "rate")?);
            } else if let Some(v) = comment.strip_prefix("best_known:") {
                best_known = Some(parse_number(v.trim(), line_no, "best_known")?);
            }
            continue;
        }
        data.push((line_no, line));
    }

    let eof = |what: &str| ProblemError::Parse {
        line: total_lines + 1,
        message: format!("file ends before {what}"),
    };

    let (header_line, header) = *data.first().ok_or_else(|| eof("the `m n capacity` header"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 3 {
        return Err(ProblemError::Parse {
            line: header_line,
            message: format!("expected `m n capacity`, got {} tokens", tokens.len()),
        });
    }
    let m: usize = tokens[0].parse().map_err(|_| ProblemError::Parse {
        line: header_line,
        message: format!("invalid item count `{}`", tokens[0]),
    })?;
    let n: usize = tokens[1].parse().map_err(|_| ProblemError::Parse {
        line: header_line,
        message: format!("invalid element count `{}`", tokens[1]),
    })?;
    let capacity = parse_number(tokens[2], header_line, "capacity")?;
    if m == 0 || n == 0 {
        return Err(ProblemError::Parse {
            line: header_line,
            message: "item and element counts must be at least 1".into(),
        });
    }

    let (profits_line, profits_text) = *data.get(1).ok_or_else(|| eof("the profit line"))?;
    let profits = parse_number_row(profits_text, profits_line, m, "profit")?;
    let (weights_line, weights_text) = *data.get(2).ok_or_else(|| eof("the weight line"))?;
    let weights = parse_number_row(weights_text, weights_line, n, "weight")?;

    let mut incidence = Vec::with_capacity(m);
    for j in 0..m {
        let (row_line, row_text) = *data
            .get(3 + j)
            .ok_or_else(|| eof(&format!("incidence row {} of {m}", j + 1)))?;
        let mut row = BinaryVector::zeros(n);
        let mut count = 0;
        for (e, tok) in row_text.split_whitespace().enumerate() {
            if e >= n {
                count = e + 1;
                break;
            }
            match tok {
                "0" => {}
                "1" => row.set(e, true),
                _ => {
                    return Err(ProblemError::Parse {
                        line: row_line,
                        message: format!("incidence entries must be 0 or 1, got `{tok}`"),
                    })
                }
            }
            count = e + 1;
        }
        if count != n {
            return Err(ProblemError::Parse {
                line: row_line,
                message: format!("incidence row has {count} entries, expected {n}"),
            });
        }
        if row.count_ones() == 0 {
            return Err(ProblemError::Parse {
                line: row_line,
                message: format!("item {} covers no elements", j + 1),
            });
        }
        incidence.push(row);
    }

    if let Some(&(line, _)) = data.get(3 + m) {
        return Err(ProblemError::Parse {
            line,
            message: "unexpected content after the last incidence row".into(),
        });
    }

    let id = id.unwrap_or_else(|| format!("sukp_{m}x{n}"));
    let instance = SukpInstance::new(id, profits, weights, incidence, capacity).map_err(|e| {
        ProblemError::Parse {
            line: header_line,
            message: e.to_string(),
        }
    })?;
    Ok(instance.with_meta(density, rate, best_known))
}

fn parse_number(token: &str, line: usize, what: &str) -> Result<f64, ProblemError> {
    let v: f64 = token.parse().map_err(|_| ProblemError::Parse {
        line,
        message: format!("invalid {what} `{token}`"),
    })?;
    if !v.is_finite() {
        return Err(ProblemError::Parse {
            line,
            message: format!("{what} must be finite, got `{token}`"),
        });
    }
    Ok(v)
}

fn parse_number_row(text: &str, line: usize, expected: usize, what: &str) -> Result<Vec<f64>, ProblemError> {
    let mut out = Vec::with_capacity(expected);
    for tok in text.split_whitespace() {
        out.push(parse_number(tok, line, what)?);
    }
    if out.len() != expected {
        return Err(ProblemError::Parse {
            line,
            message: format!("expected {expected} {what} values, got {}", out.len()),
        });
    }
    Ok(out)
}

/// Generates a random instance.
///
/// Incidence bits are set with probability `density` (empty rows are redrawn),
/// element weights and item profits are uniform integers in `[1, 100]`, and the
/// capacity is `rate` times the total element weight.
pub fn generate_sukp(
    m: usize,
    n: usize,
    density: f64,
    rate: f64,
    seed: u64,
) -> Result<SukpInstance, ProblemError> {
    if m == 0 || n == 0 {
        return Err(ProblemError::InvalidParameter(
            "item and element counts must be at least 1".into(),
        ));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(ProblemError::InvalidParameter(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(ProblemError::InvalidParameter(format!(
            "capacity rate must lie in (0, 1], got {rate}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut incidence = Vec::with_capacity(m);
    for _ in 0..m {
        loop {
            let mut row = BinaryVector::zeros(n);
            for e in 0..n {
                if rng.random::<f64>() < density {
                    row.set(e, true);
                }
            }
            if row.count_ones() > 0 {
                incidence.push(row);
                break;
            }
        }
    }
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(1..=100) as f64).collect();
    let profits: Vec<f64> = (0..m).map(|_| rng.random_range(1..=100) as f64).collect();
    let capacity = rate * weights.iter().sum::<f64>();
    let id = format!("sukp_{m}x{n}_d{density}_r{rate}_s{seed}");
    let instance = SukpInstance::new(id, profits, weights, incidence, capacity)?;
    Ok(instance.with_meta(Some(density), Some(rate), None))
}
