//! Seeded instance generators.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventPartition;
use crate::linalg::{commutator, hermitian_eig, operator_norm, CMatrix, Hermitian, C64};
use crate::spectral::DensityMatrix;

/// Ratio of the default geometric density spectrum.
pub const GEOMETRIC_RATIO: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    PerturbedCommuting,
    ClusteredSpectrum,
    RandomEvent,
    AdversarialGap,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 4] = [
        InstanceKind::PerturbedCommuting,
        InstanceKind::ClusteredSpectrum,
        InstanceKind::RandomEvent,
        InstanceKind::AdversarialGap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InstanceKind::PerturbedCommuting => "perturbed_commuting",
            InstanceKind::ClusteredSpectrum => "clustered_spectrum",
            InstanceKind::RandomEvent => "random_event",
            InstanceKind::AdversarialGap => "adversarial_gap",
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "unknown instance kind '{s}', expected one of perturbed_commuting, clustered_spectrum, random_event, adversarial_gap"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecipe {
    pub dim: usize,
    pub kind: InstanceKind,
    pub eps_target: f64,
    pub seed: u64,
    /// Explicit density spectrum; must have `dim` non-negative entries summing to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
}

impl InstanceRecipe {
    pub fn new(kind: InstanceKind, dim: usize, eps_target: f64, seed: u64) -> Self {
        Self {
            dim,
            kind,
            eps_target,
            seed,
            spectrum: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InfeasibleRecipe(format!(
                "dimension must be at least 2, got {}",
                self.dim
            )));
        }
        if !(self.eps_target >= 0.0 && self.eps_target < 1.0) {
            return Err(Error::InfeasibleRecipe(format!(
                "target commutator norm must lie in [0, 1), got {}",
                self.eps_target
            )));
        }
        if let Some(s) = &self.spectrum {
            if s.len() != self.dim {
                return Err(Error::InfeasibleRecipe(format!(
                    "spectrum has {} entries for dimension {}",
                    s.len(),
                    self.dim
                )));
            }
            if let Some(v) = s.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(Error::InfeasibleRecipe(format!(
                    "spectrum entry {v} is not a finite non-negative number"
                )));
            }
            let total: f64 = s.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InfeasibleRecipe(format!(
                    "spectrum sums to {total}, not 1"
                )));
            }
        }
        Ok(())
    }
}

/// A projective observable, a state and an event sharing a rotated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EventInstance {
    /// Columns: eigenvectors of the observable.
    pub observable_basis: CMatrix,
    /// Columns: the event cells, one per column.
    pub event_basis: CMatrix,
    /// Observable eigenvalue on each column of `observable_basis`.
    pub labels: Vec<f64>,
    pub theta: f64,
}

impl EventInstance {
    pub fn event(&self) -> Result<EventPartition> {
        let cells: Vec<Vec<usize>> = (0..self.event_basis.dim()).map(|i| vec![i]).collect();
        EventPartition::from_basis(&self.event_basis, &cells)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub recipe: InstanceRecipe,
    pub omega: DensityMatrix,
    pub x: Hermitian,
    /// `||[Omega, X]||_op`, measured on the returned matrices.
    pub eps_measured: f64,
    pub event: Option<EventInstance>,
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-like unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|_| (0..dim).map(|_| complex_gaussian(rng)).collect())
        .collect();
    for j in 0..dim {
        // two passes keep the columns orthonormal to machine precision
        for _ in 0..2 {
            for i in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[i];
                let dot: C64 = q.iter().zip(&rest[0]).map(|(a, b)| a.conj() * b).sum();
                for (v, a) in rest[0].iter_mut().zip(q) {
                    *v -= dot * a;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for v in &mut cols[j] {
            *v /= norm;
        }
    }
    CMatrix::from_columns(&cols)
}

/// GUE sample normalized to operator norm 1.
pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> Hermitian {
    let a = CMatrix::from_fn(dim, |_, _| complex_gaussian(rng));
    let h = Hermitian::symmetrized(&a + &a.adjoint());
    let n = operator_norm(&h);
    h.scale(1.0 / n)
}

/// `r^j` normalized, descending.
pub fn geometric_spectrum(dim: usize, r: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|j| r.powi(j as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// `K = ceil(M/3)` clusters of at most three eigenvalues around geometric
/// centres, each of width below `eps^(3/4)`.
pub fn clustered_spectrum(dim: usize, eps: f64) -> Vec<f64> {
    let k = dim.div_ceil(3);
    let sizes: Vec<usize> = (0..k).map(|c| (dim - 3 * c).min(3)).collect();
    let centres = geometric_spectrum(k, GEOMETRIC_RATIO);
    let mass: f64 = centres.iter().zip(&sizes).map(|(c, &s)| c * s as f64).sum();
    let mut out = Vec::with_capacity(dim);
    for (c, &s) in centres.iter().zip(&sizes) {
        let centre = c / mass;
        let width = (0.5 * eps.powf(0.75)).min(centre);
        for m in 0..s {
            // offsets sum to zero inside each cluster
            let offset = if s == 1 {
                0.0
            } else {
                width * (m as f64 / (s - 1) as f64 - 0.5)
            };
            out.push(centre + offset);
        }
    }
    out
}

/// Rungs in the ladder of [`ladder_spectrum`].
pub const LADDER_RUNGS: usize = 4;

/// The top `min(M, 4)` eigenvalues form a ladder whose gaps alternate
/// between `0.9` and `1.1` times `eps^(3/4)`; the rest follow the geometric
/// profile. Descending.
pub fn ladder_spectrum(dim: usize, eps: f64) -> Vec<f64> {
    let step = eps.powf(0.75);
    let rungs = dim.min(LADDER_RUNGS);
    let geometric = geometric_spectrum(dim, GEOMETRIC_RATIO);
    let rest: f64 = geometric[rungs..].iter().sum();
    // offsets above the lowest rung, ascending
    let mut offsets = vec![0.0; rungs];
    for j in 1..rungs {
        offsets[j] = offsets[j - 1] + if j % 2 == 1 { 0.9 * step } else { 1.1 * step };
    }
    let base = (1.0 - rest - offsets.iter().sum::<f64>()) / rungs as f64;
    let mut out: Vec<f64> = offsets.iter().rev().map(|o| base + o).collect();
    out.extend_from_slice(&geometric[rungs..]);
    out
}

fn density_spectrum(recipe: &InstanceRecipe) -> Vec<f64> {
    if let Some(s) = &recipe.spectrum {
        return s.clone();
    }
    match recipe.kind {
        InstanceKind::ClusteredSpectrum => clustered_spectrum(recipe.dim, recipe.eps_target),
        InstanceKind::AdversarialGap => ladder_spectrum(recipe.dim, recipe.eps_target),
        _ => geometric_spectrum(recipe.dim, GEOMETRIC_RATIO),
    }
}

fn uniform_diag(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Tridiagonal coupling with unit off-diagonal entries, normalized.
fn tridiagonal(dim: usize) -> Hermitian {
    let h = Hermitian::symmetrized(CMatrix::from_fn(dim, |i, j| {
        if i.abs_diff(j) == 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }));
    let n = operator_norm(&h);
    h.scale(1.0 / n)
}

/// `X = (X0 + eta H) / max(1, ||X0 + eta H||)` with `eta` tuned so that
/// `||[Omega0, X]|| = eps` in the diagonal frame.
fn perturb(omega0: &Hermitian, x0: &Hermitian, h: &Hermitian, eps: f64) -> Hermitian {
    if eps == 0.0 {
        return x0.clone();
    }
    let base = operator_norm(&commutator(omega0, h).expect("same dimension"));
    let mut eta = eps / base;
    let build = |eta: f64| {
        let y = Hermitian::symmetrized(x0.matrix() + &h.matrix().scale(eta));
        let n = operator_norm(&y).max(1.0);
        y.scale(1.0 / n)
    };
    let mut x = build(eta);
    for _ in 0..4 {
        let measured = operator_norm(&commutator(omega0, &x).expect("same dimension"));
        eta *= eps / measured;
        x = build(eta);
    }
    x
}

fn rotate(a: &Hermitian, u: &CMatrix) -> Hermitian {
    Hermitian::symmetrized(a.from_basis(u))
}

/// Observable in a random basis `V` and a random generator `G`; the event
/// at angle `theta` has rank-one cells along the columns of `V exp(i theta G)`.
pub struct RotationFamily {
    v: CMatrix,
    g: crate::linalg::Eigen,
    labels: Vec<f64>,
}

impl RotationFamily {
    /// The observable has `max(2, ceil(M/3))` levels of near-equal multiplicity.
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_for(seed);
        let v = random_unitary(dim, &mut rng);
        let g = hermitian_eig(&random_hermitian(dim, &mut rng), crate::linalg::DEFAULT_EIG_TOL)?;
        let levels = observable_levels(dim.div_ceil(3).max(2));
        let labels = (0..dim).map(|i| levels[i * levels.len() / dim]).collect();
        Ok(Self { v, g, labels })
    }

    /// At `theta = 0` the event basis is exactly the observable basis.
    pub fn at(&self, theta: f64) -> EventInstance {
        let n = self.v.dim();
        if theta == 0.0 {
            return EventInstance {
                observable_basis: self.v.clone(),
                event_basis: self.v.clone(),
                labels: self.labels.clone(),
                theta,
            };
        }
        let vecs = &self.g.vectors;
        let phases: Vec<C64> = self
            .g
            .values
            .iter()
            .map(|&l| C64::from_polar(1.0, theta * l))
            .collect();
        let rotation = CMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| vecs[(i, k)] * phases[k] * vecs[(j, k)].conj()).sum()
        });
        EventInstance {
            observable_basis: self.v.clone(),
            event_basis: self.v.matmul(&rotation),
            labels: self.labels.clone(),
            theta,
        }
    }
}

/// Observable values `1 - (2k + 1/2)/K`: distinct, inside `(-1, 1]`, never zero.
pub fn observable_levels(k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| 1.0 - (2.0 * i as f64 + 0.5) / k as f64)
        .collect()
}

pub fn rotated_event(dim: usize, theta: f64, seed: u64) -> Result<EventInstance> {
    Ok(RotationFamily::new(dim, seed)?.at(theta))
}

impl EventInstance {
    pub fn observable(&self) -> Hermitian {
        Hermitian::from_spectrum(&self.labels, &self.observable_basis)
    }

    pub fn state(&self, weights: &[f64]) -> Result<DensityMatrix> {
        DensityMatrix::from_spectrum(weights, &self.event_basis)
    }
}

fn event_commutator(ev: &EventInstance, weights: &[f64]) -> Result<f64> {
    let omega = ev.state(weights)?;
    Ok(operator_norm(&commutator(omega.matrix(), &ev.observable())?))
}

/// Finds `theta` with `||[Omega, X]|| = eps` to relative accuracy `1e-4`,
/// by bracketing followed by the Illinois variant of regula falsi.
fn solve_rotation(dim: usize, seed: u64, weights: &[f64], eps: f64) -> Result<EventInstance> {
    let family = RotationFamily::new(dim, seed)?;
    let f = |theta: f64| -> Result<(f64, EventInstance)> {
        let ev = family.at(theta);
        Ok((event_commutator(&ev, weights)? - eps, ev))
    };
    let (mut lo, mut f_lo) = (0.0, -eps);
    let mut hi = eps;
    let (mut f_hi, mut ev_hi) = f(hi)?;
    while f_hi < 0.0 {
        (lo, f_lo) = (hi, f_hi);
        hi *= 2.0;
        if hi > std::f64::consts::PI {
            return Err(Error::InfeasibleRecipe(format!(
                "no rotation reaches commutator norm {eps}"
            )));
        }
        (f_hi, ev_hi) = f(hi)?;
    }
    if f_hi.abs() <= 1e-4 * eps {
        return Ok(ev_hi);
    }
    let mut side = 0i8;
    for _ in 0..100 {
        let mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let (fm, ev) = f(mid)?;
        if fm.abs() <= 1e-4 * eps {
            return Ok(ev);
        }
        if fm < 0.0 {
            (lo, f_lo) = (mid, fm);
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            (hi, f_hi) = (mid, fm);
            ev_hi = ev;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(ev_hi)
}

/// Deterministic in the recipe: identical recipes give bit-identical matrices.
pub fn gen_instance(recipe: &InstanceRecipe) -> Result<Instance> {
    recipe.validate()?;
    let dim = recipe.dim;
    let eps = recipe.eps_target;
    let weights = density_spectrum(recipe);

    let (omega, x, event) = match recipe.kind {
        InstanceKind::RandomEvent => {
            let ev = if eps == 0.0 {
                rotated_event(dim, 0.0, recipe.seed)?
            } else {
                solve_rotation(dim, recipe.seed, &weights, eps)?
            };
            (ev.state(&weights)?, ev.observable(), Some(ev))
        }
        kind => {
            let mut rng = rng_for(recipe.seed);
            let u = random_unitary(dim, &mut rng);
            let x0 = Hermitian::from_diag(&uniform_diag(dim, &mut rng));
            let h = match kind {
                InstanceKind::AdversarialGap => tridiagonal(dim),
                _ => random_hermitian(dim, &mut rng),
            };
            let omega0 = Hermitian::from_diag(&weights);
            let x = perturb(&omega0, &x0, &h, eps);
            (
                DensityMatrix::from_spectrum(&weights, &u)?,
                rotate(&x, &u),
                None,
            )
        }
    };
    let eps_measured = operator_norm(&commutator(omega.matrix(), &x)?);
    Ok(Instance {
        recipe: recipe.clone(),
        omega,
        x,
        eps_measured,
        event,
    })
}
