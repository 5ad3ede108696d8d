//! Dense state vectors over qutrit registers.
//!
//! Amplitudes are stored as a flat vector of length `3^n`, with qutrit 0 as
//! the most significant trit: basis index `k = Σ_q t_q · 3^(n-1-q)`.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex amplitude of a basis state.
pub type Amplitude = Complex64;

/// Tolerance for algebraic identities (unitarity, completeness, orthonormality).
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for validating user-supplied inputs.
pub const INPUT_TOL: f64 = 1e-9;

const ZERO_NORM: f64 = 1e-12;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `3^n`.
pub fn dim(n_qutrits: usize) -> usize {
    3usize.pow(n_qutrits as u32)
}

/// Trits of basis index `k`, qutrit 0 first.
pub fn trits(mut k: usize, n_qutrits: usize) -> Vec<u8> {
    let mut out = vec![0u8; n_qutrits];
    for t in out.iter_mut().rev() {
        *t = (k % 3) as u8;
        k /= 3;
    }
    out
}

/// State vector of an `n`-qutrit register.
///
/// States built by [`make_state`], [`tensor`] and [`haar_random_state`] are
/// normalized. Results of [`apply_operator`] are not: applying a Kraus
/// operator leaves the vector sub-normalized so the branch weight can be read
/// off its norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    n_qutrits: usize,
    amps: Vec<Amplitude>,
}

impl PureState {
    /// Wraps raw amplitudes without normalizing.
    pub fn from_amplitudes(n_qutrits: usize, amps: Vec<Amplitude>) -> Result<Self> {
        let expected = dim(n_qutrits);
        if amps.len() != expected {
            return Err(Error::DimensionMismatch {
                left: amps.len(),
                right: expected,
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { n_qutrits, amps })
    }

    /// Computational basis state `|t_0 t_1 ... t_{n-1}⟩`.
    pub fn basis(trits: &[u8]) -> Self {
        let n = trits.len();
        let idx = trits.iter().fold(0usize, |acc, &t| acc * 3 + t as usize);
        let mut amps = vec![ZERO; dim(n)];
        amps[idx] = ONE;
        Self { n_qutrits: n, amps }
    }

    pub fn n_qutrits(&self) -> usize {
        self.n_qutrits
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Amplitude> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm < ZERO_NORM {
            return Err(Error::ZeroVector);
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, factor: Amplitude) -> Self {
        Self {
            n_qutrits: self.n_qutrits,
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Amplitude> {
        if self.n_qutrits != other.n_qutrits {
            return Err(Error::DimensionMismatch {
                left: self.n_qutrits,
                right: other.n_qutrits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Largest componentwise distance to `other`.
    pub fn max_abs_diff(&self, other: &PureState) -> f64 {
        if self.amps.len() != other.amps.len() {
            return f64::INFINITY;
        }
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies by the phase that makes the first significant amplitude real and positive.
    pub fn phase_fixed(&self) -> Self {
        match self.amps.iter().find(|a| a.norm() > 1e-9) {
            Some(a) => self.scaled(a.conj() / a.norm()),
            None => self.clone(),
        }
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, a) in self.amps.iter().enumerate() {
            if a.norm() < 1e-15 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let label: String = trits(k, self.n_qutrits)
                .into_iter()
                .map(|t| char::from(b'0' + t))
                .collect();
            write!(f, "({:.6}{:+.6}i)|{}⟩", a.re, a.im, label)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Schmidt coefficients of the shared resource `a0|00⟩ + a1|11⟩ + a2|22⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelCoeffs {
    a0: f64,
    a1: f64,
    a2: f64,
}

impl ChannelCoeffs {
    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a0, self.a1, self.a2]
    }

    /// `a_{k mod 3}`.
    pub fn coeff(&self, k: usize) -> f64 {
        self.as_array()[k % 3]
    }

    /// `(1/√3, 1/√3, 1/√3)`.
    pub fn maximally_entangled() -> Self {
        let a = 1.0 / 3f64.sqrt();
        Self {
            a0: a,
            a1: a,
            a2: a,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.a0 == 0.0
    }

    /// Two-qutrit state of the channel.
    pub fn state(&self) -> PureState {
        let mut amps = vec![ZERO; 9];
        for (j, a) in self.as_array().into_iter().enumerate() {
            amps[j * 3 + j] = Complex64::new(a, 0.0);
        }
        PureState { n_qutrits: 2, amps }
    }
}

/// Validates channel coefficients without sorting or renormalizing them.
pub fn make_channel(a0: f64, a1: f64, a2: f64) -> Result<ChannelCoeffs> {
    for value in [a0, a1, a2] {
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        if value < 0.0 {
            return Err(Error::Negative { value });
        }
    }
    let sum = a0 * a0 + a1 * a1 + a2 * a2;
    if (sum - 1.0).abs() > INPUT_TOL {
        return Err(Error::NotNormalized { sum });
    }
    if a0 > a1 || a1 > a2 {
        return Err(Error::NotOrdered { a0, a1, a2 });
    }
    Ok(ChannelCoeffs { a0, a1, a2 })
}

/// Normalized one-qutrit state `α|0⟩ + β|1⟩ + γ|2⟩`.
pub fn make_state(alpha: Amplitude, beta: Amplitude, gamma: Amplitude) -> Result<PureState> {
    PureState::from_amplitudes(1, vec![alpha, beta, gamma])?.normalized()
}

/// Kronecker product; `s1` occupies the leading qutrits.
pub fn tensor(s1: &PureState, s2: &PureState) -> PureState {
    let amps = s1
        .amps
        .iter()
        .flat_map(|a| s2.amps.iter().map(move |b| a * b))
        .collect();
    PureState {
        n_qutrits: s1.n_qutrits + s2.n_qutrits,
        amps,
    }
}

/// `|⟨s1|s2⟩|²`.
pub fn fidelity(s1: &PureState, s2: &PureState) -> Result<f64> {
    Ok(s1.inner(s2)?.norm_sqr())
}

/// Haar-random single qutrit from three complex standard normals.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R) -> PureState {
    loop {
        let amps: Vec<Amplitude> = (0..3)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let state = PureState { n_qutrits: 1, amps };
        if let Ok(s) = state.normalized() {
            return s;
        }
    }
}

/// Random valid channel: three folded normals, normalized, sorted ascending.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R) -> ChannelCoeffs {
    loop {
        let mut a: [f64; 3] = [0; 3].map(|_| rng.sample::<f64, _>(StandardNormal).abs());
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        a.iter_mut().for_each(|x| *x /= norm);
        a.sort_by(f64::total_cmp);
        if let Ok(ch) = make_channel(a[0], a[1], a[2]) {
            return ch;
        }
    }
}

/// Deterministic Haar-random single qutrit.
pub fn haar_random_state(seed: u64) -> PureState {
    random_state(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// 3×3 complex matrix acting on one qutrit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QutritOperator {
    entries: [[Amplitude; 3]; 3],
}

impl QutritOperator {
    pub fn new(entries: [[Amplitude; 3]; 3]) -> Result<Self> {
        if entries
            .iter()
            .flatten()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self { entries })
    }

    pub fn identity() -> Self {
        Self::diagonal([1.0, 1.0, 1.0])
    }

    pub fn zero() -> Self {
        Self {
            entries: [[ZERO; 3]; 3],
        }
    }

    pub fn diagonal(d: [f64; 3]) -> Self {
        Self::diagonal_complex(d.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn diagonal_complex(d: [Amplitude; 3]) -> Self {
        let mut entries = [[ZERO; 3]; 3];
        for (i, v) in d.into_iter().enumerate() {
            entries[i][i] = v;
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[[Amplitude; 3]; 3] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let mut entries = [[ZERO; 3]; 3];
        for (r, row) in entries.iter_mut().enumerate() {
            for (c, e) in row.iter_mut().enumerate() {
                *e = self.entries[c][r].conj();
            }
        }
        Self { entries }
    }

    pub fn scaled(&self, factor: Amplitude) -> Self {
        Self {
            entries: self.entries.map(|row| row.map(|e| e * factor)),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut entries = self.entries;
        for (r, row) in entries.iter_mut().enumerate() {
            for (c, e) in row.iter_mut().enumerate() {
                *e += other.entries[r][c];
            }
        }
        Self { entries }
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..3 {
            for c in 0..3 {
                worst = worst.max((self.entries[r][c] - other.entries[r][c]).norm());
            }
        }
        worst
    }

    /// `max |U†U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn apply_vec(&self, v: &[Amplitude; 3]) -> [Amplitude; 3] {
        let mut out = [ZERO; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|c| self.entries[r][c] * v[c]).sum();
        }
        out
    }
}

impl Mul for QutritOperator {
    type Output = QutritOperator;

    fn mul(self, rhs: QutritOperator) -> QutritOperator {
        let mut entries = [[ZERO; 3]; 3];
        for (r, row) in entries.iter_mut().enumerate() {
            for (c, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.entries[r][k] * rhs.entries[k][c]).sum();
            }
        }
        QutritOperator { entries }
    }
}

/// Applies `op` to qutrit `target`, identity elsewhere. No renormalization.
pub fn apply_operator(op: &QutritOperator, s: &PureState, target: usize) -> Result<PureState> {
    let n = s.n_qutrits;
    if target >= n {
        return Err(Error::IndexOutOfRange {
            index: target,
            n_qutrits: n,
        });
    }
    let stride = dim(n - 1 - target);
    let block = stride * 3;
    let mut amps = vec![ZERO; s.amps.len()];
    for base in (0..s.amps.len()).step_by(block) {
        for off in 0..stride {
            let idx = [base + off, base + off + stride, base + off + 2 * stride];
            let out = op.apply_vec(&idx.map(|i| s.amps[i]));
            for (i, v) in idx.into_iter().zip(out) {
                amps[i] = v;
            }
        }
    }
    Ok(PureState { n_qutrits: n, amps })
}
