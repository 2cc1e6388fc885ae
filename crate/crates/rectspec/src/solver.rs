//! Fixed-point solvers for weak and strong (p,q)-eigenvalue triples.
//!
//! A weak triple (lambda, x, y) has unit p/q-norm nonnegative vectors with
//!
//! ```text
//! (A x^{r-1} y^s) o x = lambda * x^[p]      (o = entrywise product)
//! (A x^r y^{s-1}) o y = lambda * y^[q]
//! ```
//!
//! and a strong triple satisfies the unmultiplied equations
//! `A x^{r-1} y^s = lambda * x^[p-1]`, `A x^r y^{s-1} = lambda * y^[q-1]`.
//!
//! Everything is driven by the contraction factor `xi = r/p + s/q`:
//!
//! * `xi < 1` (contractive): the psi map is a contraction in the projective
//!   log-ratio distance, so [`strong_solve`] converges geometrically to the
//!   unique positive strong triple.
//! * `xi = 1` (boundary): psi is non-expansive; [`boundary_solve`] runs the
//!   same normalized iteration under the partial-symmetry and
//!   weak-irreducibility hypotheses that guarantee a unique positive triple,
//!   declaring convergence on the residual alone.
//! * `xi > 1` (supercritical): only weak triples are guaranteed;
//!   [`weak_solve`] iterates the sphere-preserving phi map from random
//!   restarts, after a short search for zero-form supports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::structure::is_weakly_irreducible;
use crate::tensor::{norm_p, normalize_p, RectTensor, VectorPair, SYMMETRY_TOL};

/// Classification of xi = r/p + s/q against 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Contractive,
    Boundary,
    Supercritical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Contractive => write!(f, "contractive"),
            Regime::Boundary => write!(f, "boundary"),
            Regime::Supercritical => write!(f, "supercritical"),
        }
    }
}

/// The norm exponents p, q >= 1 defining the eigen-equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PQNorms {
    pub p: f64,
    pub q: f64,
}

impl PQNorms {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if p.is_nan() || q.is_nan() || p < 1.0 || q < 1.0 {
            return Err(Error::domain(format!(
                "norm exponents must satisfy p, q >= 1, got p = {p}, q = {q}"
            )));
        }
        Ok(PQNorms { p, q })
    }

    /// The contraction factor xi = r/p + s/q for a tensor of orders (r, s).
    pub fn xi(&self, r: usize, s: usize) -> f64 {
        r as f64 / self.p + s as f64 / self.q
    }

    /// Regime of xi against 1. When p and q are integers the comparison
    /// `r*q + s*p` vs `p*q` is exact; otherwise a 1e-12 band around 1
    /// routes to the boundary.
    pub fn classify(&self, r: usize, s: usize) -> Regime {
        let integral = self.p.fract() == 0.0
            && self.q.fract() == 0.0
            && self.p <= 2f64.powi(40)
            && self.q <= 2f64.powi(40);
        if integral {
            let (pi, qi) = (self.p as u128, self.q as u128);
            let lhs = r as u128 * qi + s as u128 * pi;
            let rhs = pi * qi;
            return match lhs.cmp(&rhs) {
                std::cmp::Ordering::Less => Regime::Contractive,
                std::cmp::Ordering::Equal => Regime::Boundary,
                std::cmp::Ordering::Greater => Regime::Supercritical,
            };
        }
        let xi = self.xi(r, s);
        if (xi - 1.0).abs() <= 1e-12 {
            Regime::Boundary
        } else if xi < 1.0 {
            Regime::Contractive
        } else {
            Regime::Supercritical
        }
    }
}

/// Classify the regime of orders (r, s) under norms (p, q).
pub fn classify_regime(r: usize, s: usize, p: f64, q: f64) -> Result<(Regime, f64)> {
    let pq = PQNorms::new(p, q)?;
    Ok((pq.classify(r, s), pq.xi(r, s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleKind {
    Weak,
    Strong,
}

/// An eigenvalue with its unit (p,q)-normalized eigenvector pair and the
/// sup-norm residuals of the corresponding eigen-equations.
#[derive(Debug, Clone, Serialize)]
pub struct EigenTriple {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub p: f64,
    pub q: f64,
    pub kind: TripleKind,
    pub residual_x: f64,
    pub residual_y: f64,
}

/// Iteration controls shared by the solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Convergence threshold on the projective step distance and residuals.
    pub tol: f64,
    pub max_iter: usize,
    /// Lower clamp for the psi-iteration domain. `None` derives
    /// `delta^{1/(1-xi)} * 1e-6` (clamped to >= 1e-300) from the minimum
    /// positive entry delta when xi < 1, and 1e-300 at the boundary.
    pub epsilon_floor: Option<f64>,
    /// Seed for the random restart starting points.
    pub seed: u64,
    /// Number of restarts; 0 behaves like 1.
    pub restarts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 10_000,
            epsilon_floor: None,
            seed: 42,
            restarts: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    MaxIter,
    BoundaryCollapse,
    ZeroForm,
}

/// Outcome of one restart, including its full step-distance trace.
#[derive(Debug, Clone, Serialize)]
pub struct RestartRecord {
    pub index: usize,
    pub converged: bool,
    pub iterations: usize,
    pub lambda: f64,
    pub residual_x: f64,
    pub residual_y: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub distance_trace: Vec<f64>,
    pub failure_reason: Option<FailureReason>,
}

/// Convergence evidence for a solve: the selected restart's trace plus a
/// record per restart.
#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    pub converged: bool,
    pub iterations: usize,
    pub distance_trace: Vec<f64>,
    pub final_residuals: (f64, f64),
    pub regime: Regime,
    pub xi: f64,
    pub failure_reason: Option<FailureReason>,
    pub restarts: Vec<RestartRecord>,
}

/// Projective log-ratio distance between strictly positive pairs:
/// `log(max_k z_k/z'_k / min_k z_k/z'_k)` over all n + m coordinates.
///
/// Scale-invariant: d(c z, c' z') = d(z, z') for any c, c' > 0.
pub fn log_distance(z: &VectorPair, z2: &VectorPair) -> Result<f64> {
    if z.x.len() != z2.x.len() || z.y.len() != z2.y.len() {
        return Err(Error::domain("vector pairs have different shapes"));
    }
    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_ratio = f64::INFINITY;
    for (a, b) in z.iter_all().zip(z2.iter_all()) {
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::domain(
                "log-ratio distance needs strictly positive coordinates",
            ));
        }
        let ratio = a / b;
        max_ratio = max_ratio.max(ratio);
        min_ratio = min_ratio.min(ratio);
    }
    Ok((max_ratio / min_ratio).ln())
}

/// One unnormalized psi step:
/// `(A(x^[1/p])^{r-1}(y^[1/q])^s o x^[1/p], A(x^[1/p])^r(y^[1/q])^{s-1} o y^[1/q])`.
///
/// Homogeneous of degree xi in the pair; monotone on the cone, which is what
/// makes it a contraction in the projective distance when xi < 1.
pub fn psi_step(a: &RectTensor, z: &VectorPair, pq: &PQNorms) -> Result<VectorPair> {
    if !a.is_nonnegative() {
        return Err(Error::domain("psi step requires a nonnegative tensor"));
    }
    if !z.is_strictly_positive() {
        return Err(Error::domain("psi step requires a strictly positive pair"));
    }
    let u: Vec<f64> = z.x.iter().map(|v| v.powf(1.0 / pq.p)).collect();
    let v: Vec<f64> = z.y.iter().map(|v| v.powf(1.0 / pq.q)).collect();
    let uv = VectorPair::new(u, v);
    let cx = a.contract_x(&uv)?;
    let cy = a.contract_y(&uv)?;
    Ok(VectorPair::new(
        cx.iter().zip(&uv.x).map(|(c, u)| c * u).collect(),
        cy.iter().zip(&uv.y).map(|(c, v)| c * v).collect(),
    ))
}

/// Result of one phi step on the product unit sphere.
#[derive(Debug, Clone)]
pub enum PhiStep {
    /// The next sphere point.
    Next(VectorPair),
    /// The form vanished at z, so (0, x, y) is already a weak triple.
    ZeroForm,
}

/// One phi step `(((A x^{r-1} y^s o x) / f)^[1/p], ((A x^r y^{s-1} o y) / f)^[1/q])`
/// with `f = A x^r y^s`; maps the nonnegative product sphere to itself, and
/// its fixed points are exactly the weak triples with `lambda = f`.
pub fn phi_step(a: &RectTensor, z: &VectorPair, pq: &PQNorms) -> Result<PhiStep> {
    if !a.is_nonnegative() {
        return Err(Error::domain("phi step requires a nonnegative tensor"));
    }
    if !z.is_nonnegative() {
        return Err(Error::domain("phi step requires a cone pair"));
    }
    let (nx, ny) = (norm_p(&z.x, pq.p), norm_p(&z.y, pq.q));
    if (nx - 1.0).abs() > 1e-8 || (ny - 1.0).abs() > 1e-8 {
        return Err(Error::domain(format!(
            "phi step requires unit-norm blocks, got |x|_p = {nx}, |y|_q = {ny}"
        )));
    }
    let cx = a.contract_x(z)?;
    let cy = a.contract_y(z)?;
    let f: f64 = z.x.iter().zip(&cx).map(|(v, c)| v * c).sum();
    if f == 0.0 {
        return Ok(PhiStep::ZeroForm);
    }
    // the p-th powers of the new x sum to f/f = 1 by duality, so the output
    // stays on the sphere without renormalization
    let x: Vec<f64> = cx
        .iter()
        .zip(&z.x)
        .map(|(c, v)| (c * v / f).powf(1.0 / pq.p))
        .collect();
    let y: Vec<f64> = cy
        .iter()
        .zip(&z.y)
        .map(|(c, v)| (c * v / f).powf(1.0 / pq.q))
        .collect();
    Ok(PhiStep::Next(VectorPair::new(x, y)))
}

/// Sup-norm defects of the weak eigen-equations
/// `(A x^{r-1} y^s) o x = lambda x^[p]` and its y-analogue.
pub fn residual_weak(a: &RectTensor, triple: &EigenTriple) -> (f64, f64) {
    let z = VectorPair::new(triple.x.clone(), triple.y.clone());
    let cx = a.contract_x(&z).expect("triple dimensions match the tensor");
    let cy = a.contract_y(&z).expect("triple dimensions match the tensor");
    weak_defects(&cx, &cy, &z, triple.lambda, triple.p, triple.q)
}

/// Sup-norm defects of the strong eigen-equations
/// `A x^{r-1} y^s = lambda x^[p-1]` and its y-analogue.
pub fn residual_strong(a: &RectTensor, triple: &EigenTriple) -> (f64, f64) {
    let z = VectorPair::new(triple.x.clone(), triple.y.clone());
    let cx = a.contract_x(&z).expect("triple dimensions match the tensor");
    let cy = a.contract_y(&z).expect("triple dimensions match the tensor");
    strong_defects(&cx, &cy, &z, triple.lambda, triple.p, triple.q)
}

fn weak_defects(cx: &[f64], cy: &[f64], z: &VectorPair, lambda: f64, p: f64, q: f64) -> (f64, f64) {
    let rx = cx
        .iter()
        .zip(&z.x)
        .map(|(c, v)| (c * v - lambda * v.powf(p)).abs())
        .fold(0.0, f64::max);
    let ry = cy
        .iter()
        .zip(&z.y)
        .map(|(c, v)| (c * v - lambda * v.powf(q)).abs())
        .fold(0.0, f64::max);
    (rx, ry)
}

fn strong_defects(
    cx: &[f64],
    cy: &[f64],
    z: &VectorPair,
    lambda: f64,
    p: f64,
    q: f64,
) -> (f64, f64) {
    let rx = cx
        .iter()
        .zip(&z.x)
        .map(|(c, v)| (c - lambda * v.powf(p - 1.0)).abs())
        .fold(0.0, f64::max);
    let ry = cy
        .iter()
        .zip(&z.y)
        .map(|(c, v)| (c - lambda * v.powf(q - 1.0)).abs())
        .fold(0.0, f64::max);
    (rx, ry)
}

// Floor for the psi-iteration domain, from the minimum positive entry.
fn resolve_floor(a: &RectTensor, xi: f64, cfg: &SolverConfig) -> f64 {
    if let Some(floor) = cfg.epsilon_floor {
        return floor.max(1e-300);
    }
    if xi < 1.0 {
        if let Some(delta) = a.min_positive_entry() {
            return (delta.powf(1.0 / (1.0 - xi)) * 1e-6).max(1e-300);
        }
    }
    1e-300
}

// Random interior start on the 1-norm simplex of each block.
fn random_simplex_start(rng: &mut ChaCha8Rng, n: usize, m: usize) -> VectorPair {
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let mut y: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    x.iter_mut().for_each(|v| *v /= sx);
    y.iter_mut().for_each(|v| *v /= sy);
    VectorPair::new(x, y)
}

fn rng_for_restart(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

struct RunOutcome {
    record: RestartRecord,
}

// (lambda, x, y, residual_x, residual_y) of one iterate
type Candidate = (f64, Vec<f64>, Vec<f64>, f64, f64);

// The normalized psi iteration. Iterates on pairs whose blocks each sum to
// one; the scale factor t of one step is the eigenvalue at a fixed point.
// `residual_only` drops the step-distance part of the convergence test
// (used at xi = 1 where the map is merely non-expansive).
fn psi_iterate(
    a: &RectTensor,
    pq: &PQNorms,
    cfg: &SolverConfig,
    floor: f64,
    index: usize,
    residual_only: bool,
) -> RunOutcome {
    let (r, s) = (a.r() as i32, a.s() as i32);
    let mut rng = rng_for_restart(cfg.seed, index);
    let mut z = random_simplex_start(&mut rng, a.n(), a.m());
    let mut trace: Vec<f64> = Vec::new();
    let mut last_d = f64::INFINITY;
    let mut clamp_streak = 0usize;
    let mut last_candidate: Option<Candidate> = None;

    let fail = |reason: FailureReason,
                trace: Vec<f64>,
                candidate: Option<Candidate>,
                z: &VectorPair| {
        let (lambda, x, y, rx, ry) = candidate.unwrap_or_else(|| {
            let mut x = z.x.clone();
            let mut y = z.y.clone();
            normalize_p(&mut x, pq.p);
            normalize_p(&mut y, pq.q);
            (0.0, x, y, f64::INFINITY, f64::INFINITY)
        });
        RunOutcome {
            record: RestartRecord {
                index,
                converged: false,
                iterations: trace.len(),
                lambda,
                residual_x: rx,
                residual_y: ry,
                x,
                y,
                distance_trace: trace,
                failure_reason: Some(reason),
            },
        }
    };

    for _ in 0..cfg.max_iter {
        let u: Vec<f64> = z.x.iter().map(|v| v.powf(1.0 / pq.p)).collect();
        let v: Vec<f64> = z.y.iter().map(|v| v.powf(1.0 / pq.q)).collect();
        let uv = VectorPair::new(u, v);
        let cx = a.contract_x(&uv).expect("dimensions fixed by the tensor");
        let cy = a.contract_y(&uv).expect("dimensions fixed by the tensor");
        let t: f64 = uv.x.iter().zip(&cx).map(|(u, c)| u * c).sum();
        if t == 0.0 {
            return fail(FailureReason::ZeroForm, trace, last_candidate, &z);
        }
        if !t.is_finite() {
            return fail(FailureReason::BoundaryCollapse, trace, last_candidate, &z);
        }

        // candidate triple from the current iterate
        let a_norm = norm_p(&uv.x, pq.p);
        let b_norm = norm_p(&uv.y, pq.q);
        let lambda = t / (a_norm.powi(r) * b_norm.powi(s));
        let x_hat: Vec<f64> = uv.x.iter().map(|v| v / a_norm).collect();
        let y_hat: Vec<f64> = uv.y.iter().map(|v| v / b_norm).collect();
        let scale_x = a_norm.powi(r - 1) * b_norm.powi(s);
        let scale_y = a_norm.powi(r) * b_norm.powi(s - 1);
        let cx_hat: Vec<f64> = cx.iter().map(|c| c / scale_x).collect();
        let cy_hat: Vec<f64> = cy.iter().map(|c| c / scale_y).collect();
        let (rx, ry) = strong_defects(
            &cx_hat,
            &cy_hat,
            &VectorPair::new(x_hat.clone(), y_hat.clone()),
            lambda,
            pq.p,
            pq.q,
        );
        let residual_ok = rx <= cfg.tol && ry <= cfg.tol;
        if residual_ok && (residual_only || last_d <= cfg.tol) {
            return RunOutcome {
                record: RestartRecord {
                    index,
                    converged: true,
                    iterations: trace.len(),
                    lambda,
                    residual_x: rx,
                    residual_y: ry,
                    x: x_hat,
                    y: y_hat,
                    distance_trace: trace,
                    failure_reason: None,
                },
            };
        }
        last_candidate = Some((lambda, x_hat, y_hat, rx, ry));

        // normalized step: both blocks of (cx o u, cy o v) / t sum to one
        let mut xn: Vec<f64> = cx.iter().zip(&uv.x).map(|(c, u)| c * u / t).collect();
        let mut yn: Vec<f64> = cy.iter().zip(&uv.y).map(|(c, v)| c * v / t).collect();
        let sx: f64 = xn.iter().sum();
        let sy: f64 = yn.iter().sum();
        if sx <= 0.0 || sy <= 0.0 || !sx.is_finite() || !sy.is_finite() {
            return fail(FailureReason::BoundaryCollapse, trace, last_candidate, &z);
        }
        xn.iter_mut().for_each(|v| *v /= sx);
        yn.iter_mut().for_each(|v| *v /= sy);
        let mut clamped = false;
        for v in xn.iter_mut().chain(yn.iter_mut()) {
            if *v < floor {
                *v = floor;
                clamped = true;
            }
        }
        clamp_streak = if clamped { clamp_streak + 1 } else { 0 };
        let next = VectorPair::new(xn, yn);
        if clamp_streak >= 10 {
            return fail(FailureReason::BoundaryCollapse, trace, last_candidate, &next);
        }
        let d = log_distance(&next, &z).expect("clamped iterates stay positive");
        trace.push(d);
        last_d = d;
        z = next;
    }
    fail(FailureReason::MaxIter, trace, last_candidate, &z)
}

fn merge_runs(
    pq: &PQNorms,
    kind: TripleKind,
    regime: Regime,
    xi: f64,
    runs: Vec<RunOutcome>,
) -> (EigenTriple, SolverReport) {
    let records: Vec<RestartRecord> = runs.into_iter().map(|r| r.record).collect();
    // converged restarts ranked by lambda descending then index; otherwise
    // the smallest worst-residual run
    let best = records
        .iter()
        .filter(|r| r.converged)
        .max_by(|a, b| {
            a.lambda
                .partial_cmp(&b.lambda)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.index.cmp(&a.index))
        })
        .or_else(|| {
            records.iter().min_by(|a, b| {
                let wa = a.residual_x.max(a.residual_y);
                let wb = b.residual_x.max(b.residual_y);
                wa.partial_cmp(&wb)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.index.cmp(&b.index))
            })
        })
        .expect("at least one restart runs");

    let triple = EigenTriple {
        lambda: best.lambda,
        x: best.x.clone(),
        y: best.y.clone(),
        p: pq.p,
        q: pq.q,
        kind,
        residual_x: best.residual_x,
        residual_y: best.residual_y,
    };
    let report = SolverReport {
        converged: best.converged,
        iterations: best.iterations,
        distance_trace: best.distance_trace.clone(),
        final_residuals: (best.residual_x, best.residual_y),
        regime,
        xi,
        failure_reason: best.failure_reason,
        restarts: records,
    };
    (triple, report)
}

/// Unique positive strong triple in the contractive regime `xi < 1`, by the
/// normalized psi iteration from `max(1, restarts)` seeded random starts.
///
/// The scale factor `t = A u^r v^s` of a normalized step is the eigenvalue
/// at the fixed point; convergence requires both the projective step
/// distance and the strong residuals to drop below `cfg.tol`.
pub fn strong_solve(
    a: &RectTensor,
    pq: &PQNorms,
    cfg: &SolverConfig,
) -> Result<(EigenTriple, SolverReport)> {
    if !a.is_nonnegative() {
        return Err(Error::domain("strong_solve requires a nonnegative tensor"));
    }
    let regime = pq.classify(a.r(), a.s());
    let xi = pq.xi(a.r(), a.s());
    if regime != Regime::Contractive {
        return Err(Error::Regime {
            xi,
            required: "strong_solve requires r/p + s/q < 1 (route xi = 1 to boundary_solve)",
        });
    }
    let floor = resolve_floor(a, xi, cfg);
    let runs: Vec<RunOutcome> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|k| psi_iterate(a, pq, cfg, floor, k, false))
        .collect();
    Ok(merge_runs(pq, TripleKind::Strong, regime, xi, runs))
}

/// Strong triple at the boundary `xi = 1` for a partially symmetric, weakly
/// irreducible nonnegative tensor.
///
/// Runs the same normalized psi iteration, which is merely non-expansive
/// here, so convergence is declared on the residual alone and is reported,
/// not guaranteed. Restart agreement doubles as a uniqueness check.
pub fn boundary_solve(
    a: &RectTensor,
    pq: &PQNorms,
    cfg: &SolverConfig,
) -> Result<(EigenTriple, SolverReport)> {
    if !a.is_partially_symmetric(SYMMETRY_TOL) {
        return Err(Error::Structure {
            hypothesis: "partial symmetry",
        });
    }
    if !is_weakly_irreducible(a) {
        return Err(Error::Structure {
            hypothesis: "weak irreducibility",
        });
    }
    boundary_solve_unchecked(a, pq, cfg)
}

/// The boundary iteration without the structure hypotheses, for probing
/// tensors that violate them.
pub(crate) fn boundary_solve_unchecked(
    a: &RectTensor,
    pq: &PQNorms,
    cfg: &SolverConfig,
) -> Result<(EigenTriple, SolverReport)> {
    if !a.is_nonnegative() {
        return Err(Error::domain("boundary_solve requires a nonnegative tensor"));
    }
    let regime = pq.classify(a.r(), a.s());
    let xi = pq.xi(a.r(), a.s());
    if regime != Regime::Boundary {
        return Err(Error::Regime {
            xi,
            required: "boundary_solve requires r/p + s/q = 1",
        });
    }
    let floor = resolve_floor(a, xi, cfg);
    let runs: Vec<RunOutcome> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|k| psi_iterate(a, pq, cfg, floor, k, true))
        .collect();
    Ok(merge_runs(pq, TripleKind::Strong, regime, xi, runs))
}

// Ascending-cardinality support pairs, each as (x-mask, y-mask), when the
// full search space 2^(n+m) stays within the budget.
fn support_pairs(n: usize, m: usize) -> Option<Vec<(u32, u32)>> {
    if n + m > 12 {
        return None;
    }
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for sx in 1u32..(1 << n) {
        for sy in 1u32..(1 << m) {
            pairs.push((sx, sy));
        }
    }
    pairs.sort_by_key(|&(sx, sy)| (sx.count_ones() + sy.count_ones(), sx, sy));
    Some(pairs)
}

// First support pair whose restricted form vanishes, if any.
fn find_zero_form_support(a: &RectTensor) -> Option<(u32, u32)> {
    let pairs = support_pairs(a.n(), a.m())?;
    pairs.into_iter().find(|&(sx, sy)| {
        let mut vanishes = true;
        a.for_each_entry(|lower, upper, v| {
            if !vanishes || v <= 0.0 {
                return;
            }
            let inside = lower.iter().all(|&i| sx >> i & 1 == 1)
                && upper.iter().all(|&j| sy >> j & 1 == 1);
            if inside {
                vanishes = false;
            }
        });
        vanishes
    })
}

// The phi iteration from one random start on the product sphere.
fn phi_iterate(a: &RectTensor, pq: &PQNorms, cfg: &SolverConfig, index: usize) -> RunOutcome {
    let mut rng = rng_for_restart(cfg.seed, index);
    let mut z = {
        let mut z = random_simplex_start(&mut rng, a.n(), a.m());
        normalize_p(&mut z.x, pq.p);
        normalize_p(&mut z.y, pq.q);
        z
    };
    let mut trace: Vec<f64> = Vec::new();
    let mut best: Option<Candidate> = None;

    for _ in 0..cfg.max_iter {
        let cx = a.contract_x(&z).expect("dimensions fixed by the tensor");
        let cy = a.contract_y(&z).expect("dimensions fixed by the tensor");
        let f = a.evaluate_form(&z).expect("dimensions fixed by the tensor");
        let (rx, ry) = weak_defects(&cx, &cy, &z, f, pq.p, pq.q);
        if best
            .as_ref()
            .map(|(_, _, _, bx, by)| rx.max(ry) < bx.max(*by))
            .unwrap_or(true)
        {
            best = Some((f, z.x.clone(), z.y.clone(), rx, ry));
        }
        if (rx <= cfg.tol && ry <= cfg.tol) || f == 0.0 {
            return RunOutcome {
                record: RestartRecord {
                    index,
                    converged: true,
                    iterations: trace.len(),
                    lambda: f,
                    residual_x: rx,
                    residual_y: ry,
                    x: z.x,
                    y: z.y,
                    distance_trace: trace,
                    failure_reason: None,
                },
            };
        }
        let mut x: Vec<f64> = cx
            .iter()
            .zip(&z.x)
            .map(|(c, v)| (c * v / f).powf(1.0 / pq.p))
            .collect();
        let mut y: Vec<f64> = cy
            .iter()
            .zip(&z.y)
            .map(|(c, v)| (c * v / f).powf(1.0 / pq.q))
            .collect();
        normalize_p(&mut x, pq.p);
        normalize_p(&mut y, pq.q);
        let next = VectorPair::new(x, y);
        // phi can park coordinates on the sphere boundary, where the
        // log-ratio distance is undefined; fall back to the sup-norm step
        let d = log_distance(&next, &z).unwrap_or_else(|_| {
            next.iter_all()
                .zip(z.iter_all())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        });
        trace.push(d);
        z = next;
    }
    let (lambda, x, y, rx, ry) = best.expect("at least one iteration ran");
    RunOutcome {
        record: RestartRecord {
            index,
            converged: false,
            iterations: trace.len(),
            lambda,
            residual_x: rx,
            residual_y: ry,
            x,
            y,
            distance_trace: trace,
            failure_reason: Some(FailureReason::MaxIter),
        },
    }
}

/// A weak triple for any nonnegative tensor and any p, q >= 1.
///
/// First searches small supports for a vanishing form, which yields an
/// exact (0, x, y) triple; otherwise runs the phi iteration from seeded
/// random starts and keeps the converged fixed point with the largest
/// eigenvalue. Existence is guaranteed, convergence of the iteration is
/// not; a non-convergent solve reports `max_iter` with the best iterate.
pub fn weak_solve(
    a: &RectTensor,
    pq: &PQNorms,
    cfg: &SolverConfig,
) -> Result<(EigenTriple, SolverReport)> {
    if !a.is_nonnegative() {
        return Err(Error::domain("weak_solve requires a nonnegative tensor"));
    }
    let regime = pq.classify(a.r(), a.s());
    let xi = pq.xi(a.r(), a.s());

    if let Some((sx, sy)) = find_zero_form_support(a) {
        let mut x: Vec<f64> = (0..a.n()).map(|i| f64::from(sx >> i & 1)).collect();
        let mut y: Vec<f64> = (0..a.m()).map(|j| f64::from(sy >> j & 1)).collect();
        normalize_p(&mut x, pq.p);
        normalize_p(&mut y, pq.q);
        let mut triple = EigenTriple {
            lambda: 0.0,
            x,
            y,
            p: pq.p,
            q: pq.q,
            kind: TripleKind::Weak,
            residual_x: 0.0,
            residual_y: 0.0,
        };
        let (rx, ry) = residual_weak(a, &triple);
        triple.residual_x = rx;
        triple.residual_y = ry;
        let report = SolverReport {
            converged: true,
            iterations: 0,
            distance_trace: Vec::new(),
            final_residuals: (rx, ry),
            regime,
            xi,
            failure_reason: None,
            restarts: Vec::new(),
        };
        return Ok((triple, report));
    }

    let runs: Vec<RunOutcome> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|k| phi_iterate(a, pq, cfg, k))
        .collect();
    Ok(merge_runs(pq, TripleKind::Weak, regime, xi, runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::example21_tensor;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_positive_tensor(seed: u64, r: usize, s: usize, n: usize, m: usize) -> RectTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = RectTensor::zeros(r, s, n, m);
        let mut stack = vec![(vec![0usize; r], vec![0usize; s])];
        // walk the full index range
        while let Some((lower, upper)) = stack.pop() {
            t.set(&lower, &upper, rng.gen_range(0.05..1.0)).unwrap();
            let mut next = (lower, upper);
            let mut carry = true;
            for d in (0..s).rev() {
                if carry {
                    next.1[d] += 1;
                    if next.1[d] < m {
                        carry = false;
                    } else {
                        next.1[d] = 0;
                    }
                }
            }
            for d in (0..r).rev() {
                if carry {
                    next.0[d] += 1;
                    if next.0[d] < n {
                        carry = false;
                    } else {
                        next.0[d] = 0;
                    }
                }
            }
            if !carry {
                stack.push(next);
            }
        }
        t
    }

    fn random_positive_pair(seed: u64, n: usize, m: usize) -> VectorPair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        VectorPair::new(
            (0..n).map(|_| rng.gen_range(0.1..1.0)).collect(),
            (0..m).map(|_| rng.gen_range(0.1..1.0)).collect(),
        )
    }

    #[test]
    fn regime_classification_examples() {
        assert_eq!(
            classify_regime(2, 2, 5.0, 5.0).unwrap(),
            (Regime::Contractive, 0.8)
        );
        assert_eq!(
            classify_regime(2, 2, 4.0, 4.0).unwrap(),
            (Regime::Boundary, 1.0)
        );
        let (regime, xi) = classify_regime(2, 2, 3.0, 3.0).unwrap();
        assert_eq!(regime, Regime::Supercritical);
        assert!((xi - 4.0 / 3.0).abs() < 1e-15);
        assert!(classify_regime(2, 2, 0.5, 4.0).is_err());
    }

    #[test]
    fn regime_handles_non_integer_exponents() {
        let (regime, _) = classify_regime(1, 1, 2.5, 2.5).unwrap();
        assert_eq!(regime, Regime::Contractive);
        // off the exact boundary by more than the 1e-12 band
        let (regime, _) = classify_regime(1, 1, 2.0, 1.999).unwrap();
        assert_eq!(regime, Regime::Supercritical);
    }

    #[test]
    fn log_distance_basics() {
        let z = random_positive_pair(1, 3, 2);
        assert_eq!(log_distance(&z, &z).unwrap(), 0.0);
        let d = log_distance(&z.scaled(3.0), &z.scaled(5.0)).unwrap();
        assert!(d.abs() <= 1e-13);

        let a = VectorPair::new(vec![1.0], vec![2.0]);
        let b = VectorPair::new(vec![2.0], vec![1.0]);
        assert!((log_distance(&a, &b).unwrap() - 4f64.ln()).abs() <= 1e-15);

        let zero = VectorPair::new(vec![0.0], vec![1.0]);
        assert!(log_distance(&zero, &b).is_err());
    }

    #[test]
    fn psi_step_on_all_ones() {
        let a = RectTensor::ones(2, 2, 2, 2);
        let pq = PQNorms::new(5.0, 5.0).unwrap();
        let out = psi_step(&a, &VectorPair::ones(2, 2), &pq).unwrap();
        assert_eq!(out.x, vec![8.0, 8.0]);
        assert_eq!(out.y, vec![8.0, 8.0]);
    }

    #[test]
    fn psi_step_is_degree_xi_homogeneous() {
        let a = RectTensor::ones(2, 2, 2, 2);
        let pq = PQNorms::new(5.0, 5.0).unwrap();
        let z = random_positive_pair(3, 2, 2);
        let lhs = psi_step(&a, &z.scaled(2.0), &pq).unwrap();
        let rhs = psi_step(&a, &z, &pq).unwrap();
        let factor = 2f64.powf(0.8);
        for (l, r) in lhs.iter_all().zip(rhs.iter_all()) {
            assert!((l - factor * r).abs() <= 1e-12 * l.abs());
        }
    }

    #[test]
    fn psi_step_rejects_boundary_pairs() {
        let a = RectTensor::ones(2, 2, 2, 2);
        let pq = PQNorms::new(5.0, 5.0).unwrap();
        let z = VectorPair::new(vec![1.0, 0.0], vec![1.0, 1.0]);
        assert!(psi_step(&a, &z, &pq).is_err());
    }

    #[test]
    fn strong_solve_all_ones_closed_form() {
        let a = RectTensor::ones(2, 2, 2, 2);
        let pq = PQNorms::new(5.0, 5.0).unwrap();
        let (triple, report) = strong_solve(&a, &pq, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        let expected = 2f64.powf(16.0 / 5.0);
        assert!((triple.lambda - expected).abs() <= 1e-10 * expected);
        let coord = 2f64.powf(-0.2);
        for v in triple.x.iter().chain(&triple.y) {
            assert!((v - coord).abs() <= 1e-10);
        }
        assert_eq!(report.distance_trace.len(), report.iterations);
    }

    #[test]
    fn strong_solve_restarts_agree() {
        let a = random_positive_tensor(17, 2, 2, 3, 4);
        let pq = PQNorms::new(5.0, 5.0).unwrap();
        let cfg = SolverConfig {
            restarts: 20,
            ..Default::default()
        };
        let (_, report) = strong_solve(&a, &pq, &cfg).unwrap();
        assert!(report.restarts.iter().all(|r| r.converged));
        let lambdas: Vec<f64> = report.restarts.iter().map(|r| r.lambda).collect();
        let spread = lambdas.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - lambdas.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(spread <= 1e-8, "lambda spread {spread}");
        for pair in report.restarts.windows(2) {
            let dx = pair[0]
                .x
                .iter()
                .zip(&pair[1].x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(dx <= 1e-7);
        }
    }

    #[test]
    fn strong_solve_trace_decays_geometrically() {
        let a = random_positive_tensor(23, 2, 2, 3, 3);
        let pq = PQNorms::new(6.0, 8.0).unwrap();
        let xi = pq.xi(2, 2);
        let (_, report) = strong_solve(&a, &pq, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        for w in report.distance_trace.windows(2) {
            assert!(w[1] <= xi * w[0] + 1e-10, "decay violated: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn strong_solve_rejects_boundary_regime() {
        let mut a = RectTensor::zeros(1, 1, 2, 2);
        a.set(&[0], &[0], 3.0).unwrap();
        a.set(&[1], &[0], 4.0).unwrap();
        a.set(&[1], &[1], 5.0).unwrap();
        let pq = PQNorms::new(2.0, 2.0).unwrap();
        match strong_solve(&a, &pq, &SolverConfig::default()) {
            Err(Error::Regime { xi, .. }) => assert_eq!(xi, 1.0),
            other => panic!("expected regime error, got {other:?}"),
        }
        // the boundary route handles it: largest singular value of A
        let (triple, report) = boundary_solve(&a, &pq, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        assert!((triple.lambda - 45f64.sqrt()).abs() <= 1e-9);
    }

    #[test]
    fn strong_solve_reports_zero_form_on_zero_tensor() {
        let a = RectTensor::zeros(2, 2, 2, 2);
        let pq = PQNorms::new(5.0, 5.0).unwrap();
        let (_, report) = strong_solve(&a, &pq, &SolverConfig::default()).unwrap();
        assert!(!report.converged);
        assert_eq!(report.failure_reason, Some(FailureReason::ZeroForm));
    }

    #[test]
    fn strong_solve_detects_boundary_collapse() {
        // no entry has 2 as its first lower index, so that component dies
        let mut a = RectTensor::zeros(2, 1, 2, 2);
        a.set(&[0, 0], &[0], 1.0).unwrap();
        a.set(&[0, 1], &[1], 1.0).unwrap();
        a.set(&[0, 1], &[0], 0.5).unwrap();
        let pq = PQNorms::new(8.0, 8.0).unwrap();
        let (_, report) = strong_solve(&a, &pq, &SolverConfig::default()).unwrap();
        assert!(!report.converged);
        assert_eq!(report.failure_reason, Some(FailureReason::BoundaryCollapse));
    }

    #[test]
    fn boundary_solve_all_ones() {
        let a = RectTensor::ones(2, 2, 2, 2);
        let pq = PQNorms::new(4.0, 4.0).unwrap();
        let (triple, report) = boundary_solve(&a, &pq, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        assert!((triple.lambda - 8.0).abs() <= 1e-9);
        for v in triple.x.iter().chain(&triple.y) {
            assert!((v - 2f64.powf(-0.25)).abs() <= 1e-10);
        }
    }

    #[test]
    fn boundary_solve_names_the_failed_hypothesis() {
        let a = example21_tensor();
        let pq = PQNorms::new(4.0, 4.0).unwrap();
        match boundary_solve(&a, &pq, &SolverConfig::default()) {
            Err(Error::Structure { hypothesis }) => assert_eq!(hypothesis, "partial symmetry"),
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn phi_fixes_the_uniform_point_of_all_ones() {
        let a = RectTensor::ones(2, 2, 2, 2);
        let pq = PQNorms::new(4.0, 4.0).unwrap();
        let c = 2f64.powf(-0.25);
        let z = VectorPair::new(vec![c, c], vec![c, c]);
        match phi_step(&a, &z, &pq).unwrap() {
            PhiStep::Next(next) => {
                for (a, b) in next.iter_all().zip(z.iter_all()) {
                    assert!((a - b).abs() <= 1e-14);
                }
            }
            PhiStep::ZeroForm => panic!("form is positive here"),
        }
    }

    #[test]
    fn phi_signals_zero_form_on_example21() {
        let a = example21_tensor();
        let pq = PQNorms::new(4.0, 4.0).unwrap();
        let z = VectorPair::new(vec![1.0, 0.0], vec![0.0, 1.0]);
        assert!(matches!(phi_step(&a, &z, &pq).unwrap(), PhiStep::ZeroForm));
    }

    #[test]
    fn weak_solve_short_circuits_on_example21() {
        let a = example21_tensor();
        let pq = PQNorms::new(4.0, 4.0).unwrap();
        let (triple, report) = weak_solve(&a, &pq, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        assert_eq!(triple.lambda, 0.0);
        assert_eq!(triple.x, vec![1.0, 0.0]);
        assert_eq!(triple.y, vec![0.0, 1.0]);
        assert_eq!(triple.residual_x, 0.0);
        assert_eq!(triple.residual_y, 0.0);
    }

    #[test]
    fn solvers_reject_signed_tensors() {
        let mut a = RectTensor::zeros(2, 2, 2, 2);
        a.set(&[0, 0], &[0, 0], -1.0).unwrap();
        let pq = PQNorms::new(5.0, 5.0).unwrap();
        assert!(matches!(
            weak_solve(&a, &pq, &SolverConfig::default()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            strong_solve(&a, &pq, &SolverConfig::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn weak_solve_all_ones_is_symmetric() {
        let a = RectTensor::ones(2, 2, 2, 2);
        let pq = PQNorms::new(4.0, 4.0).unwrap();
        let (triple, report) = weak_solve(&a, &pq, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        assert!((triple.lambda - 8.0).abs() <= 1e-9);
        for v in triple.x.iter().chain(&triple.y) {
            assert!((v - 2f64.powf(-0.25)).abs() <= 1e-9);
        }
    }

    #[test]
    fn weak_lambda_matches_the_form() {
        let a = random_positive_tensor(31, 2, 2, 3, 2);
        let pq = PQNorms::new(4.0, 4.0).unwrap();
        let (triple, report) = weak_solve(&a, &pq, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        let z = VectorPair::new(triple.x.clone(), triple.y.clone());
        let f = a.evaluate_form(&z).unwrap();
        assert!((triple.lambda - f).abs() <= 1e-12 * f.max(1.0));
    }

    #[test]
    fn residuals_separate_weak_from_strong() {
        let a = example21_tensor();
        let triple = EigenTriple {
            lambda: 0.0,
            x: vec![1.0, 0.0],
            y: vec![0.0, 1.0],
            p: 4.0,
            q: 4.0,
            kind: TripleKind::Weak,
            residual_x: 0.0,
            residual_y: 0.0,
        };
        assert_eq!(residual_weak(&a, &triple), (0.0, 0.0));
        // the strong y-equation fails at j = 1: (A x^2 y)_1 = 1 != 0
        assert_eq!(residual_strong(&a, &triple), (0.0, 1.0));
    }

    #[test]
    fn residual_grows_linearly_in_lambda_perturbation() {
        let a = RectTensor::ones(2, 2, 2, 2);
        let pq = PQNorms::new(5.0, 5.0).unwrap();
        let (mut triple, _) = strong_solve(&a, &pq, &SolverConfig::default()).unwrap();
        triple.lambda += 0.1;
        let (rx, ry) = residual_strong(&a, &triple);
        let min_pow = triple
            .x
            .iter()
            .map(|v| v.powf(pq.p - 1.0))
            .fold(f64::INFINITY, f64::min);
        assert!(rx >= 0.1 * min_pow - 1e-12);
        assert!(ry > 0.0);
    }

    #[test]
    fn strong_triples_satisfy_the_weak_equations() {
        let a = random_positive_tensor(37, 2, 3, 3, 2);
        let pq = PQNorms::new(8.0, 10.0).unwrap();
        let cfg = SolverConfig::default();
        let (triple, report) = strong_solve(&a, &pq, &cfg).unwrap();
        assert!(report.converged);
        let sup = triple
            .x
            .iter()
            .chain(&triple.y)
            .fold(0.0f64, |acc, &v| acc.max(v));
        let (wx, wy) = residual_weak(&a, &triple);
        assert!(wx <= cfg.tol * sup.max(1.0));
        assert!(wy <= cfg.tol * sup.max(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn psi_contracts_by_xi(seed in 0u64..200) {
            let a = random_positive_tensor(seed, 2, 2, 3, 2);
            let pq = PQNorms::new(5.0, 5.0).unwrap();
            let xi = pq.xi(2, 2);
            let z = random_positive_pair(seed ^ 0x1111, 3, 2);
            let z2 = random_positive_pair(seed ^ 0x2222, 3, 2);
            let d_before = log_distance(&z, &z2).unwrap();
            let d_after = log_distance(
                &psi_step(&a, &z, &pq).unwrap(),
                &psi_step(&a, &z2, &pq).unwrap(),
            ).unwrap();
            prop_assert!(d_after <= xi * d_before + 1e-12);
        }

        #[test]
        fn log_distance_is_scale_invariant(seed in 0u64..200, c in 0.01f64..100.0, c2 in 0.01f64..100.0) {
            let z = random_positive_pair(seed, 3, 3);
            let z2 = random_positive_pair(seed ^ 0x3333, 3, 3);
            let d = log_distance(&z, &z2).unwrap();
            let ds = log_distance(&z.scaled(c), &z2.scaled(c2)).unwrap();
            prop_assert!((d - ds).abs() <= 1e-13 * d.max(1.0));
        }

        #[test]
        fn phi_preserves_the_product_sphere(seed in 0u64..200) {
            let a = random_positive_tensor(seed, 2, 2, 2, 3);
            let pq = PQNorms::new(4.0, 6.0).unwrap();
            let mut z = random_positive_pair(seed ^ 0x4444, 2, 3);
            normalize_p(&mut z.x, pq.p);
            normalize_p(&mut z.y, pq.q);
            match phi_step(&a, &z, &pq).unwrap() {
                PhiStep::Next(next) => {
                    prop_assert!((norm_p(&next.x, pq.p) - 1.0).abs() <= 1e-13);
                    prop_assert!((norm_p(&next.y, pq.q) - 1.0).abs() <= 1e-13);
                }
                PhiStep::ZeroForm => prop_assert!(false, "positive tensors have positive forms"),
            }
        }
    }
}
