//! Multiscale reconstruction Λ_{N,L} of finite-rank local families.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{Box3, DiscreteKernel, GridGeometry, MollifierKernel, SemigroupLadder, UField};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::scalar::Real;
use crate::stats::loglog_slope;
use crate::torus::{GridNode, SpaceTimeSeries};

/// Evaluator taking an absolute grid node and its offset from the base point
/// of the current computation; offsets serve as unwrapped local coordinates.
pub type NodeFn<T> = Arc<dyn Fn(GridNode, [isize; 3]) -> T + Send + Sync>;

/// One rank-one piece c(z̄)·F of G_{z̄}.
#[derive(Clone)]
pub struct Term<T: Real> {
    pub basis: NodeFn<T>,
    pub coeff: NodeFn<T>,
}

/// Hölder-type continuity exponent triple (θ, γ_θ, C_θ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ContinuityTriple<T: Real> {
    pub theta: T,
    pub gamma: T,
    pub constant: T,
}

/// G_{z̄} = Σ_m c_m(z̄)F_m.
#[derive(Clone)]
pub struct LocalFamily<T: Real> {
    pub name: String,
    pub terms: Vec<Term<T>>,
    pub certificate: Vec<ContinuityTriple<T>>,
}

impl<T: Real> std::fmt::Debug for LocalFamily<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalFamily")
            .field("name", &self.name)
            .field("rank", &self.terms.len())
            .field("certificate", &self.certificate)
            .finish()
    }
}

fn at<T: Real>(series: &SpaceTimeSeries<T>, w: GridNode) -> T {
    series.value(w.s as usize, w.i, w.j)
}

impl<T: Real> LocalFamily<T> {
    /// G_z = f for every z.
    pub fn constant(f: SpaceTimeSeries<T>) -> Self {
        let f = Arc::new(f);
        Self {
            name: "constant".into(),
            terms: vec![Term {
                basis: Arc::new(move |w, _| at(&f, w)),
                coeff: Arc::new(|_, _| T::one()),
            }],
            certificate: Vec::new(),
        }
    }

    /// G_z(w) = u(z).
    pub fn frozen_value(u: SpaceTimeSeries<T>) -> Self {
        let u = Arc::new(u);
        Self {
            name: "frozen value".into(),
            terms: vec![Term {
                basis: Arc::new(|_, _| T::one()),
                coeff: Arc::new(move |z, _| at(&u, z)),
            }],
            certificate: Vec::new(),
        }
    }

    /// G_z = σ(u(z))Π_z\<0> + σ′σ(u(z))Π_z\<11> + σ′(u(z))u_X(z)·Π_zX\<0>
    /// for the first noise of `model`.
    pub fn product(model: &Model<T>, uf: &UField<T>) -> Self {
        let xi = Arc::new(model.noises[0].clone());
        let lolli = Arc::new(model.lollis[0].clone());
        let c = model.renorm[0][0];
        let kappa = model.kappa;
        let h = model.geometry().h();
        let uf = Arc::new(uf.clone());
        let x = move |rel: [isize; 3], a: usize| T::lit(rel[a + 1] as f64) * h;
        let (u0, u1, u2, u3, u4) = (uf.clone(), uf.clone(), uf.clone(), uf.clone(), uf);
        let (l0, l1) = (lolli.clone(), lolli);
        let (x0, x1, x2, x3) = (xi.clone(), xi.clone(), xi.clone(), xi);
        let gamma = T::lit(2.0) - T::lit(2.0) * kappa;
        let terms = vec![
            Term {
                basis: Arc::new(move |w, _| at(&x0, w)),
                coeff: Arc::new(move |z, rel| {
                    let ux = u0.generalized_gradient(z);
                    u0.sigma_at(z) - u0.sigma_d1_sigma_at(z) * at(&l0, z) - u0.sigma_d1_at(z) * (ux[0] * x(rel, 0) + ux[1] * x(rel, 1))
                }),
            },
            Term {
                basis: Arc::new(move |w, _| at(&l1, w) * at(&x1, w)),
                coeff: Arc::new(move |z, _| u1.sigma_d1_sigma_at(z)),
            },
            Term {
                basis: Arc::new(|_, _| T::one()),
                coeff: Arc::new(move |z, _| -u2.sigma_d1_sigma_at(z) * c),
            },
            Term {
                basis: Arc::new(move |w, rel| x(rel, 0) * at(&x2, w)),
                coeff: Arc::new(move |z, _| u3.sigma_d1_at(z) * u3.generalized_gradient(z)[0]),
            },
            Term {
                basis: Arc::new(move |w, rel| x(rel, 1) * at(&x3, w)),
                coeff: Arc::new(move |z, _| u4.sigma_d1_at(z) * u4.generalized_gradient(z)[1]),
            },
        ];
        Self {
            name: "local product".into(),
            terms,
            certificate: vec![
                ContinuityTriple { theta: T::one() - kappa, gamma, constant: T::nan() },
                ContinuityTriple { theta: T::one() - T::lit(2.0) * kappa, gamma, constant: T::nan() },
                ContinuityTriple { theta: T::one(), gamma, constant: T::nan() },
            ],
        }
    }

    /// a·F + b·G.
    pub fn combine(a: T, f: &Self, b: T, g: &Self) -> Self {
        let scaled = |s: T, fam: &Self| {
            fam.terms
                .iter()
                .map(move |t| {
                    let c = t.coeff.clone();
                    Term {
                        basis: t.basis.clone(),
                        coeff: Arc::new(move |z, rel| s * c(z, rel)) as NodeFn<T>,
                    }
                })
                .collect::<Vec<_>>()
        };
        let mut terms = scaled(a, f);
        terms.extend(scaled(b, g));
        Self {
            name: format!("{} + {}", f.name, g.name),
            terms,
            certificate: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// G_z(w).
    pub fn evaluate(&self, z: GridNode, w: GridNode) -> T {
        let rel = [w.s - z.s, w.i - z.i, w.j - z.j];
        self.terms.iter().map(|t| t.coeff(z, [0, 0, 0]) * (t.basis)(w, rel)).sum()
    }
}

impl<T: Real> Term<T> {
    fn coeff(&self, z: GridNode, rel: [isize; 3]) -> T {
        (self.coeff)(z, rel)
    }
}

/// Λ_{N,L}[G](z) by levels and by telescoping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ReconstructionReport<T: Real> {
    pub scale: f64,
    pub depth: usize,
    /// Σ of `levels`.
    pub value: T,
    /// Contribution of level n = 0..N−1.
    pub levels: Vec<T>,
    /// ⟨⟨G_·, φ^{L/2^N}_·⟩, φ^{L,N}_z⟩ − ⟨G_z, φ^L_z⟩.
    pub telescoping: T,
    /// ⟨G_z, φ^L_z⟩.
    pub diagonal: T,
    /// Levels whose factor ψ^{L/2^{n+1}} spans fewer than two grid cells.
    pub sub_grid_levels: Vec<usize>,
}

impl<T: Real> ReconstructionReport<T> {
    /// ⟨RG, φ^L_z⟩ = Λ_{N,L}[G](z) + ⟨G_z, φ^L_z⟩.
    pub fn reconstruction(&self) -> T {
        self.value + self.diagonal
    }

    pub fn telescoping_defect(&self) -> T {
        (self.value - self.telescoping).abs()
    }
}

fn total_extent<T: Real>(ladder: &SemigroupLadder<T>) -> (isize, [isize; 2]) {
    let mut s = 0isize;
    let mut r = [0isize; 2];
    for f in &ladder.factors {
        s += f.time_len() as isize - 1;
        r[0] += f.radius(0) as isize;
        r[1] += f.radius(1) as isize;
    }
    (s, r)
}

/// Computes Λ_{N,L}[G](z) for the ladder at scale L; N ≤ ladder depth.
pub fn lambda_nl<T: Real>(family: &LocalFamily<T>, geo: &GridGeometry<T>, z: GridNode, ladder: &SemigroupLadder<T>, depth: usize) -> Result<ReconstructionReport<T>> {
    if depth > ladder.depth() {
        return Err(Error::DepthCap {
            depth,
            cap: ladder.depth(),
        });
    }
    let l = T::lit(ladder.scale);
    if geo.time(z.s) < T::lit(4.0) * l * l - geo.dt * T::lit(1e-9) {
        return Err(Error::TimeRange(format!("base point time {} below 4L^2", geo.time(z.s))));
    }
    let (ds, r) = total_extent(ladder);
    if z.s - ds < 0 || z.s >= geo.n_slices as isize {
        return Err(Error::KernelOutsideDomain {
            t: geo.time(z.s - ds).as_f64(),
        });
    }
    let lo = [-ds, -r[0], -r[1]];
    let hi = [0, r[0], r[1]];
    let at_node = |f: &NodeFn<T>| Box3::from_fn(lo, hi, |s, i, j| f(z.offset(s, i, j), [s, i, j]));
    let basis: Vec<Box3<T>> = family.terms.iter().map(|t| at_node(&t.basis)).collect();
    let coeff: Vec<Box3<T>> = family.terms.iter().map(|t| at_node(&t.coeff)).collect();
    let origin = |b: &Box3<T>| b.get(0, 0, 0);

    let mut levels = Vec::with_capacity(depth);
    for n in 0..depth {
        let tail = ladder.tail(n + 1);
        let psi = ladder.factor(n + 1);
        let head = ladder.head(n);
        let mut acc: Option<Box3<T>> = None;
        for (f, c) in basis.iter().zip(&coeff) {
            let p = f.correlate(&tail);
            let moved = c.zip(&p, |a, b| a * b).correlate(psi);
            let frozen = c.zip(&p.correlate(psi), |a, b| a * b);
            let diff = moved.zip(&frozen, |a, b| a - b);
            acc = Some(match acc {
                None => diff,
                Some(a) => a.zip(&diff, |x, y| x + y),
            });
        }
        let level = acc.map(|a| origin(&a.correlate(&head))).unwrap_or_else(T::zero);
        levels.push(level);
    }
    let telescope = |n: usize| -> T {
        let tail = ladder.tail(n);
        let mut acc: Option<Box3<T>> = None;
        for (f, c) in basis.iter().zip(&coeff) {
            let term = c.zip(&f.correlate(&tail), |a, b| a * b);
            acc = Some(match acc {
                None => term,
                Some(a) => a.zip(&term, |x, y| x + y),
            });
        }
        acc.map(|a| origin(&a.correlate(&ladder.head(n)))).unwrap_or_else(T::zero)
    };
    let diagonal = telescope(0);
    let telescoping = telescope(depth) - diagonal;
    let resolved = ladder.resolved_depth();
    Ok(ReconstructionReport {
        scale: ladder.scale,
        depth,
        value: levels.iter().copied().sum(),
        levels,
        telescoping,
        diagonal,
        sub_grid_levels: (0..depth).filter(|&n| n + 1 > resolved).collect(),
    })
}

/// ⟨RG, φ^L_z⟩ for the local product family of `model` and `uf`.
pub fn reconstruct_product<T: Real>(model: &Model<T>, uf: &UField<T>, z: GridNode, ladder: &SemigroupLadder<T>, depth: usize) -> Result<ReconstructionReport<T>> {
    let family = LocalFamily::product(model, uf);
    lambda_nl(&family, &model.geometry(), z, ladder, depth)
}

/// One row of the reconstruction error table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ErrorRow<T: Real> {
    pub scale: T,
    pub abs_error: T,
    pub basepoint_index: usize,
}

/// Error table with the fitted exponent of the mean error against L.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ErrorScalingReport<T: Real> {
    pub rows: Vec<ErrorRow<T>>,
    /// +∞ when every error vanishes.
    pub exponent: T,
    /// γ − 1 − κ with γ = 2 − 2κ.
    pub target: T,
}

/// |⟨σ(u)\<0b> − σ′σ(u)C − G_z, φ_z^L⟩| over scales and base points, fitted
/// log-log in L.
pub fn error_scaling_study<T: Real>(model: &Model<T>, uf: &UField<T>, psi: &MollifierKernel, scales: &[T], basepoints: &[GridNode]) -> Result<ErrorScalingReport<T>> {
    let family = LocalFamily::product(model, uf);
    let geo = model.geometry();
    let c = model.renorm[0][0];
    let xi = &model.noises[0];
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for &l in scales {
        let kernel = DiscreteKernel::from_mollifier(psi, l.as_f64(), geo.dt, geo.h());
        let mut acc = T::zero();
        let mut count = 0usize;
        for (idx, &z) in basepoints.iter().enumerate() {
            if geo.time(z.s) < T::lit(4.0) * l * l || kernel.check_support(xi, z).is_err() {
                continue;
            }
            let v = kernel.apply(z, |s, i, j| {
                let w = GridNode::new(s, i, j);
                uf.sigma_at(w) * at(xi, w) - uf.sigma_d1_sigma_at(w) * c - family.evaluate(z, w)
            });
            rows.push(ErrorRow {
                scale: l,
                abs_error: v.abs(),
                basepoint_index: idx,
            });
            acc += v.abs();
            count += 1;
        }
        if count == 0 {
            return Err(Error::TimeRange(format!("no basepoint admits scale {l}")));
        }
        means.push(acc / T::from_usize_lossy(count));
    }
    let exponent = if means.iter().all(|&m| m == T::zero()) {
        T::infinity()
    } else {
        loglog_slope(scales, &means).unwrap_or(T::nan())
    };
    Ok(ErrorScalingReport {
        rows,
        exponent,
        target: T::one() - T::lit(3.0) * model.kappa,
    })
}
