//! Elementwise affine policies mapping a state matrix to 54 gait values.
//!
//! Both layouts store all weights first and all biases after them. The SCOPE
//! policy sees the 54 retained DCT coefficients; the baseline policy sees the
//! raw 6x450 history, one weight and one bias per input, and sums each
//! output's 50 per-frame terms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::sim::{HISTORY_LEN, LEGS, POSE_COLS};

/// Number of policy outputs: 18 motors times (phase, amplitude, offset).
pub const OUTPUTS: usize = 54;
/// Raw inputs in a full pose history (6 x 450).
pub const RAW_INPUTS: usize = LEGS * POSE_COLS * HISTORY_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Scope,
    Baseline,
}

impl Layout {
    /// Number of inputs (and therefore weights, and biases).
    pub fn inputs(self) -> usize {
        match self {
            Layout::Scope => OUTPUTS,
            Layout::Baseline => RAW_INPUTS,
        }
    }

    /// Chromosome length: weights plus biases.
    pub fn genes(self) -> usize {
        2 * self.inputs()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Layout::Scope => "scope",
            Layout::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scope" => Ok(Layout::Scope),
            "baseline" => Ok(Layout::Baseline),
            other => Err(Error::InvalidInput(format!("unknown layout '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChromosomeRepr", into = "ChromosomeRepr")]
pub struct Chromosome {
    layout: Layout,
    genes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ChromosomeRepr {
    layout: Layout,
    genes: Vec<f64>,
}

impl TryFrom<ChromosomeRepr> for Chromosome {
    type Error = Error;

    fn try_from(r: ChromosomeRepr) -> Result<Self> {
        Chromosome::new(r.layout, r.genes)
    }
}

impl From<Chromosome> for ChromosomeRepr {
    fn from(c: Chromosome) -> Self {
        ChromosomeRepr {
            layout: c.layout,
            genes: c.genes,
        }
    }
}

impl Chromosome {
    pub fn new(layout: Layout, genes: Vec<f64>) -> Result<Self> {
        if genes.len() != layout.genes() {
            return Err(Error::Contract(format!(
                "{layout} chromosome needs {} genes, got {}",
                layout.genes(),
                genes.len()
            )));
        }
        if genes.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidInput("non-finite gene".into()));
        }
        Ok(Self { layout, genes })
    }

    pub fn zeros(layout: Layout) -> Self {
        Self {
            layout,
            genes: vec![0.0; layout.genes()],
        }
    }

    /// Builds a chromosome from separate weight and bias vectors.
    pub fn from_parts(layout: Layout, weights: &[f64], biases: &[f64]) -> Result<Self> {
        Self::new(layout, [weights, biases].concat())
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub fn weights(&self) -> &[f64] {
        &self.genes[..self.layout.inputs()]
    }

    pub fn biases(&self) -> &[f64] {
        &self.genes[self.layout.inputs()..]
    }

    fn expect(&self, layout: Layout) -> Result<()> {
        if self.layout != layout {
            return Err(Error::Contract(format!(
                "expected a {layout} chromosome, got {}",
                self.layout
            )));
        }
        Ok(())
    }
}

/// The 54 raw gait values, motor-major `(phase, amplitude, offset)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput(Vec<f64>);

impl PolicyOutput {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != OUTPUTS {
            return Err(Error::Contract(format!(
                "policy output must have {OUTPUTS} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite policy output".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// SCOPE policy: `o_j = w_j * x_j + b_j` with `x` the column-wise
/// vectorization of the coefficient block.
///
/// Any block holding exactly 54 coefficients is accepted; the default
/// pipeline passes the 6x9 low-frequency block.
pub fn evaluate_scope(chrom: &Chromosome, block: &RealMatrix) -> Result<PolicyOutput> {
    chrom.expect(Layout::Scope)?;
    if block.len() != OUTPUTS {
        return Err(Error::Contract(format!(
            "SCOPE policy needs {OUTPUTS} coefficients, got a {}x{} block",
            block.rows(),
            block.cols()
        )));
    }
    let x = block.vec_columnwise();
    let out = chrom
        .weights()
        .iter()
        .zip(chrom.biases())
        .zip(&x)
        .map(|((w, b), x)| w * x + b)
        .collect();
    PolicyOutput::new(out)
}

/// Baseline policy on the raw 6x450 history.
///
/// Input `(j, t)` is cell `j` (column-wise index inside the 6x9 frame) of
/// frame block `t`, which is entry `54 t + j` of the column-wise
/// vectorization of the history; weights and biases use the same index.
/// Output `j` sums `w * x + b` over the 50 frames.
pub fn evaluate_baseline(chrom: &Chromosome, history: &RealMatrix) -> Result<PolicyOutput> {
    chrom.expect(Layout::Baseline)?;
    if history.shape() != (LEGS, POSE_COLS * HISTORY_LEN) {
        return Err(Error::Contract(format!(
            "baseline policy needs a {LEGS}x{} history, got {}x{}",
            POSE_COLS * HISTORY_LEN,
            history.rows(),
            history.cols()
        )));
    }
    let x = history.vec_columnwise();
    let mut out = vec![0.0; OUTPUTS];
    for ((chunk_w, chunk_b), chunk_x) in chrom
        .weights()
        .chunks_exact(OUTPUTS)
        .zip(chrom.biases().chunks_exact(OUTPUTS))
        .zip(x.chunks_exact(OUTPUTS))
    {
        for (j, o) in out.iter_mut().enumerate() {
            *o += chunk_w[j] * chunk_x[j] + chunk_b[j];
        }
    }
    PolicyOutput::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RealMatrix {
        RealMatrix::from_vec(rows, cols, random_vec(rng, rows * cols)).unwrap()
    }

    #[test]
    fn layout_lengths() {
        assert_eq!(Layout::Scope.genes(), 108);
        assert_eq!(Layout::Baseline.genes(), 5400);
        assert!(matches!(
            Chromosome::new(Layout::Scope, vec![0.0; 107]),
            Err(Error::Contract(_))
        ));
        assert!(Chromosome::new(Layout::Scope, vec![f64::NAN; 108]).is_err());
    }

    #[test]
    fn scope_zero_weights_give_biases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_vec(&mut rng, 54);
        let chrom = Chromosome::from_parts(Layout::Scope, &[0.0; 54], &b).unwrap();
        let block = random_matrix(&mut rng, 6, 9);
        assert_eq!(evaluate_scope(&chrom, &block).unwrap().values(), &b[..]);
    }

    #[test]
    fn scope_unit_weights_vectorize_columnwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let chrom = Chromosome::from_parts(Layout::Scope, &[1.0; 54], &[0.0; 54]).unwrap();
        let block = random_matrix(&mut rng, 6, 9);
        let out = evaluate_scope(&chrom, &block).unwrap();
        assert_eq!(out.values(), &block.vec_columnwise()[..]);
        // column-wise: entry 1 is row 1 of column 0
        assert_eq!(out.values()[1], block.get(1, 0));
    }

    #[test]
    fn scope_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_vec(&mut rng, 54);
        let b = random_vec(&mut rng, 54);
        let block = random_matrix(&mut rng, 6, 9);
        let chrom = Chromosome::from_parts(Layout::Scope, &w, &b).unwrap();
        let out = evaluate_scope(&chrom, &block).unwrap();
        for col in 0..9 {
            for row in 0..6 {
                let j = col * 6 + row;
                assert_eq!(out.values()[j], w[j] * block.get(row, col) + b[j]);
            }
        }
    }

    #[test]
    fn baseline_zero_weights_sum_biases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random_vec(&mut rng, 2700);
        let chrom = Chromosome::from_parts(Layout::Baseline, &[0.0; 2700], &b).unwrap();
        let out = evaluate_baseline(&chrom, &random_matrix(&mut rng, 6, 450)).unwrap();
        for j in 0..54 {
            let expected: f64 = (0..50).map(|t| b[54 * t + j]).sum();
            assert!((out.values()[j] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn baseline_averages_identical_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frame = random_matrix(&mut rng, 6, 9);
        let history = RealMatrix::from_fn(6, 450, |r, c| frame.get(r, c % 9));
        let chrom =
            Chromosome::from_parts(Layout::Baseline, &[1.0 / 50.0; 2700], &[0.0; 2700]).unwrap();
        let out = evaluate_baseline(&chrom, &history).unwrap();
        for (a, b) in out.values().iter().zip(frame.vec_columnwise()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn baseline_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = random_vec(&mut rng, 2700);
        let b = random_vec(&mut rng, 2700);
        let history = random_matrix(&mut rng, 6, 450);
        let chrom = Chromosome::from_parts(Layout::Baseline, &w, &b).unwrap();
        let out = evaluate_baseline(&chrom, &history).unwrap();
        for col in 0..9 {
            for row in 0..6 {
                let j = col * 6 + row;
                let mut acc = 0.0;
                for t in 0..50 {
                    let idx = 54 * t + j;
                    acc += w[idx] * history.get(row, 9 * t + col) + b[idx];
                }
                assert_eq!(out.values()[j], acc);
            }
        }
    }

    #[test]
    fn layouts_are_not_interchangeable() {
        let scope = Chromosome::zeros(Layout::Scope);
        let base = Chromosome::zeros(Layout::Baseline);
        assert!(matches!(
            evaluate_baseline(&scope, &RealMatrix::zeros(6, 450)),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            evaluate_scope(&base, &RealMatrix::zeros(6, 9)),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            evaluate_scope(&scope, &RealMatrix::zeros(6, 10)),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            evaluate_baseline(&base, &RealMatrix::zeros(6, 9)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn chromosome_json_round_trip_validates() {
        let c = Chromosome::from_parts(Layout::Scope, &[0.5; 54], &[-0.25; 54]).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Chromosome>(&text).unwrap(), c);
        let bad = r#"{"layout":"baseline","genes":[1.0,2.0]}"#;
        assert!(serde_json::from_str::<Chromosome>(bad).is_err());
    }

    proptest! {
        #[test]
        fn superposition(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, baseline in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (layout, rows, cols) = if baseline { (Layout::Baseline, 6, 450) } else { (Layout::Scope, 6, 9) };
            let chrom = Chromosome::new(layout, random_vec(&mut rng, layout.genes())).unwrap();
            let eval = |m: &RealMatrix| -> Vec<f64> {
                match layout {
                    Layout::Scope => evaluate_scope(&chrom, m),
                    Layout::Baseline => evaluate_baseline(&chrom, m),
                }.unwrap().values().to_vec()
            };
            let x = random_matrix(&mut rng, rows, cols);
            let y = random_matrix(&mut rng, rows, cols);
            let o0 = eval(&RealMatrix::zeros(rows, cols));
            let ox = eval(&x);
            let oy = eval(&y);
            let oxy = eval(&x.scale(a).add(&y.scale(b)).unwrap());
            for j in 0..54 {
                let lhs = oxy[j] - o0[j];
                let rhs = a * (ox[j] - o0[j]) + b * (oy[j] - o0[j]);
                prop_assert!((lhs - rhs).abs() < 1e-10);
            }
            // determinism
            prop_assert_eq!(eval(&x), ox);
        }
    }
}
