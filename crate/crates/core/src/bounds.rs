//! Exponent algebra and the recursive bounds behind the a priori estimates.
//!
//! Every "≲" prefactor is 1; results are shapes, not certified constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default spatial-regularity excess δ.
pub const DEFAULT_DELTA: f64 = 0.01;
/// Default regularity loss κ.
pub const DEFAULT_KAPPA: f64 = 0.1;

/// 2κ³ + 3κ² − 8κ + 1.
pub fn kappa_cubic<T: Real>(k: T) -> T {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let eight = T::lit(8.0);
    ((two * k + three) * k - eight) * k + T::one()
}

/// (1+κ)(2+κ−2κ²) − (3−2κ)(1−κ), the unexpanded defining equation.
pub fn kappa_equation<T: Real>(k: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    (one + k) * (two + k - two * k * k) - (T::lit(3.0) - two * k) * (one - k)
}

/// Root of 2κ³ + 3κ² − 8κ + 1 in (0, 1/3), by bisection.
pub fn kappa_bar<T: Real>() -> T {
    let mut lo = T::zero();
    let mut hi = T::one() / T::lit(3.0);
    let tol = T::lit(1e-12).max(T::tolerance_scale() * T::lit(4.0));
    // the cubic is positive at 0 and negative at 1/3
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if kappa_cubic(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < tol {
            break;
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Exponents governing the growth bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExponentSet<T: Real> {
    pub kappa: T,
    pub delta: T,
    pub kappa_bar: T,
    pub beta1: T,
    pub beta2: T,
    pub nu: T,
    pub valid: bool,
}

impl<T: Real> ExponentSet<T> {
    /// e(γ) = 2(γ−1)/(1−κ).
    pub fn e_gamma(&self, gamma: T) -> T {
        T::lit(2.0) * (gamma - T::one()) / (T::one() - self.kappa)
    }
}

/// β₂ = 2(1+κ)/(3−2κ).
pub fn beta2<T: Real>(kappa: T) -> T {
    T::lit(2.0) * (T::one() + kappa) / (T::lit(3.0) - T::lit(2.0) * kappa)
}

/// β₁ = β₂ + (1+κ)(κ+δ)/(1−κ).
pub fn beta1<T: Real>(kappa: T, delta: T) -> T {
    beta2(kappa) + (T::one() + kappa) * (kappa + delta) / (T::one() - kappa)
}

/// All exponents; an invalid regime is flagged rather than rejected.
pub fn exponents<T: Real>(kappa: T, delta: T) -> Result<ExponentSet<T>> {
    if !(kappa > T::zero() && kappa < T::one() / T::lit(3.0)) || !(delta > T::zero()) {
        return Err(Error::OutOfRange(format!(
            "need 0 < kappa < 1/3 and delta > 0, got kappa = {kappa}, delta = {delta}"
        )));
    }
    let b2 = beta2(kappa);
    let b1 = beta1(kappa, delta);
    let valid = b2 < b1 && b1 < T::one();
    let nu = T::one() / ((T::one() - kappa) * (T::one() - b1).powi(2));
    Ok(ExponentSet {
        kappa,
        delta,
        kappa_bar: kappa_bar(),
        beta1: b1,
        beta2: b2,
        nu,
        valid,
    })
}

/// T(γ) = min(m^{−1/(1−κ)} if m > 0, C₂^{−1/(1−κ)}, C₁^{−2/(1−κ)}C⋆^{−e(γ)}).
pub fn t_window<T: Real>(gamma: T, kappa: T, c1: T, c2: T, c_star: T, mass: T) -> T {
    let one = T::one();
    let e = T::lit(2.0) * (gamma - one) / (one - kappa);
    let first = c2.powf(-one / (one - kappa));
    let second = c1.powf(-T::lit(2.0) / (one - kappa)) * c_star.powf(-e);
    let mut t = first.min(second);
    if mass > T::zero() {
        t = t.min(mass.powf(-one / (one - kappa)));
    }
    t
}

/// L̃ together with the window it is paired with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LTilde<T: Real> {
    pub value: T,
    /// T₁ = T(γ₁) with γ₁ = 1 + κ + δ.
    pub t1: T,
    /// L̃ ≤ √T₁/2.
    pub fits_window: bool,
}

/// L̃ = C⋆^{−2/(3−2κ)}·(C₂ ∨ C₁²C⋆^{2κ+2δ} [∨ m²])^{−1/(2(1−κ))}.
pub fn l_tilde<T: Real>(c_star: T, c1: T, c2: T, kappa: T, delta: T, mass: T) -> LTilde<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let mut base = c2.max(c1 * c1 * c_star.powf(two * kappa + two * delta));
    if mass > T::zero() {
        base = base.max(mass * mass);
    }
    let value = c_star.powf(-two / (T::lit(3.0) - two * kappa)) * base.powf(-one / (two * (one - kappa)));
    let t1 = t_window(one + kappa + delta, kappa, c1, c2, c_star, mass);
    LTilde {
        value,
        t1,
        fits_window: value <= t1.sqrt() / two,
    }
}

/// max{‖u₀‖, C₁^{2/((1−κ)(1−β₁))}, C₂^{1/((1−κ)(1−β₂))}}.
pub fn apriori_bound<T: Real>(u0_norm: T, c1: T, c2: T, kappa: T, delta: T) -> Result<T> {
    let ex = exponents(kappa, delta)?;
    if !ex.valid {
        return Err(Error::InvalidRegime(format!(
            "beta2 = {}, beta1 = {} (need beta2 < beta1 < 1)",
            ex.beta2, ex.beta1
        )));
    }
    let one = T::one();
    let p1 = T::lit(2.0) / ((one - kappa) * (one - ex.beta1));
    let p2 = one / ((one - kappa) * (one - ex.beta2));
    Ok(u0_norm.max(c1.powf(p1)).max(c2.powf(p2)))
}

/// Running sum with a compensation term (Neumaier).
#[derive(Debug, Clone, Copy)]
struct Compensated<T: Real> {
    sum: T,
    comp: T,
}

impl<T: Real> Compensated<T> {
    fn new(v: T) -> Self {
        Self { sum: v, comp: T::zero() }
    }

    fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Iteration and closed-form envelope, index 0 holding n = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RecursionTable<T: Real> {
    pub iteration: Vec<T>,
    pub envelope: Vec<T>,
}

impl<T: Real> RecursionTable<T> {
    /// True when iteration ≤ envelope·(1 + rel) at every n.
    pub fn dominated(&self, rel: T) -> bool {
        self.iteration
            .iter()
            .zip(&self.envelope)
            .all(|(&y, &e)| y <= e * (T::one() + rel))
    }
}

/// Y_{n+1} = Y_n + q_nY_n^β against (Y₁^{1−β} + (1−β)Q_{n−1}(n−1))^{1/(1−β)},
/// with Q_n = max_{i≤n} q_i. Returns len(q) + 1 entries.
pub fn growth_envelope<T: Real>(y1: T, q: &[T], beta: T) -> Result<RecursionTable<T>> {
    if !(y1 > T::zero()) || !(beta >= T::zero() && beta < T::one()) || q.iter().any(|&v| v < T::zero()) {
        return Err(Error::OutOfRange("need Y1 > 0, beta in [0,1), q_n >= 0".into()));
    }
    let one = T::one();
    let mut iteration = Vec::with_capacity(q.len() + 1);
    let mut envelope = Vec::with_capacity(q.len() + 1);
    let mut y = Compensated::new(y1);
    iteration.push(y1);
    envelope.push(y1);
    let mut q_max = T::zero();
    for (n, &qn) in q.iter().enumerate() {
        let current = y.value();
        y.add(qn * current.powf(beta));
        iteration.push(y.value());
        q_max = q_max.max(qn);
        // envelope at index n+2 uses Q_{n+1}·(n+1)
        let steps = T::from_usize_lossy(n + 1);
        let inner = y1.powf(one - beta) + (one - beta) * q_max * steps;
        envelope.push(inner.powf(one / (one - beta)));
    }
    Ok(RecursionTable { iteration, envelope })
}

/// Y_{n+1} = aY_n + r_nY_n^β against max{Y₁, (R_n/(1−a))^{1/(1−β)}}.
pub fn massive_recursion<T: Real>(y1: T, a: T, r: &[T], beta: T) -> Result<RecursionTable<T>> {
    if !(a > T::zero() && a < T::one()) || !(beta >= T::zero() && beta < T::one()) || r.iter().any(|&v| v < T::zero()) {
        return Err(Error::OutOfRange("need a in (0,1), beta in [0,1), r_n >= 0".into()));
    }
    let one = T::one();
    let mut iteration = vec![y1];
    let mut envelope = vec![y1];
    let mut y = y1;
    let mut r_max = T::zero();
    for &rn in r {
        y = a * y + rn * y.powf(beta);
        r_max = r_max.max(rn);
        iteration.push(y);
        envelope.push(y1.max((r_max / (one - a)).powf(one / (one - beta))));
    }
    Ok(RecursionTable { iteration, envelope })
}

/// Positive fixed point of y = ay + ry^β, (r/(1−a))^{1/(1−β)}.
pub fn massive_fixed_point<T: Real>(a: T, r: T, beta: T) -> T {
    (r / (T::one() - a)).powf(T::one() / (T::one() - beta))
}

/// Fixed point Z̄ of the moment recursion with its monotonicity certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MomentFixedPoint<T: Real> {
    pub z_bar: T,
    pub iterates: Vec<T>,
    /// Non-decreasing from below Z̄, non-increasing from above.
    pub monotone: bool,
}

/// Z̄ = (M_p/(1−a))^{1/(1−β)}, certified by iterating Z_{n+1} = aZ_n + M_pZ_n^β.
pub fn moment_recursion<T: Real>(z1: T, a: T, m_p: T, beta: T, steps: usize) -> Result<MomentFixedPoint<T>> {
    if !(a > T::zero() && a < T::one()) || !(beta >= T::zero() && beta < T::one()) || m_p < T::zero() || z1 < T::zero() {
        return Err(Error::OutOfRange("need a in (0,1), beta in [0,1), M_p >= 0, Z1 >= 0".into()));
    }
    let z_bar = massive_fixed_point(a, m_p, beta);
    let mut iterates = vec![z1];
    let mut z = z1;
    for _ in 0..steps {
        z = a * z + m_p * z.powf(beta);
        iterates.push(z);
    }
    let rising = z1 <= z_bar;
    let monotone = iterates.windows(2).all(|w| if rising { w[1] >= w[0] } else { w[1] <= w[0] });
    Ok(MomentFixedPoint {
        z_bar,
        iterates,
        monotone,
    })
}

/// C̃_{n+1} = C_n ∨ C_{n+1}, with C̃_1 = C_1.
pub fn tilde_constants<T: Real>(c: &[T]) -> Vec<T> {
    c.iter()
        .enumerate()
        .map(|(n, &v)| if n == 0 { v } else { v.max(c[n - 1]) })
        .collect()
}

/// Per-interval constants from order-bound estimates, index 0 is [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct IntervalConstants<T: Real> {
    pub c1: Vec<T>,
    pub c2: Vec<T>,
}

impl<T: Real> IntervalConstants<T> {
    pub fn c1_tilde(&self) -> Vec<T> {
        tilde_constants(&self.c1)
    }

    pub fn c2_tilde(&self) -> Vec<T> {
        tilde_constants(&self.c2)
    }
}

/// One row of the growth audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AuditRow<T: Real> {
    pub n: usize,
    pub y: T,
    pub envelope: T,
    pub pass: bool,
}

/// Measured Y_n against A·M_n·n^{1/(1−β₁)} where
/// M_n = max_{i≤n}{C₁ᵢ^{2/(1−κ)}, C₂ᵢ^{1/(1−κ)}}^{1/(1−β₁)²} and A is fitted so
/// the envelope equals Y₁ at n = 1.
pub fn growth_audit<T: Real>(y: &[T], constants: &IntervalConstants<T>, ex: &ExponentSet<T>) -> Result<Vec<AuditRow<T>>> {
    if y.len() < 2 || constants.c1.len() < y.len() || constants.c2.len() < y.len() {
        return Err(Error::OutOfRange("audit needs at least two intervals with constants".into()));
    }
    let one = T::one();
    let p = one / (one - ex.beta1);
    let mut m_run = T::zero();
    let mut m_first = T::zero();
    let mut shape = Vec::with_capacity(y.len());
    for n in 0..y.len() {
        let term = constants.c1[n]
            .powf(T::lit(2.0) / (one - ex.kappa))
            .max(constants.c2[n].powf(one / (one - ex.kappa)));
        m_run = m_run.max(term);
        let m = m_run.powf(p * p);
        if n == 0 {
            m_first = m;
        }
        // M_n/M_1, with 0/0 read as 1 (no noise on any interval so far)
        let ratio = if m == m_first { one } else { m / m_first };
        shape.push(ratio * T::from_usize_lossy(n + 1).powf(p));
    }
    let prefactor = y[0];
    Ok(y
        .iter()
        .zip(&shape)
        .enumerate()
        .map(|(n, (&yn, &s))| {
            let envelope = prefactor * s;
            AuditRow {
                n: n + 1,
                y: yn,
                envelope,
                pass: yn <= envelope * (one + T::lit(1e-12)),
            }
        })
        .collect())
}

/// Ratio of the mean of `y` over the late window to the early window.
pub fn windowed_mean_ratio<T: Real>(y: &[T], early: std::ops::RangeInclusive<usize>, late: std::ops::RangeInclusive<usize>) -> Option<T> {
    let mean = |r: std::ops::RangeInclusive<usize>| -> Option<T> {
        let vals: Vec<T> = r.filter_map(|n| y.get(n.checked_sub(1)?).copied()).collect();
        (!vals.is_empty()).then(|| vals.iter().copied().sum::<T>() / T::from_usize_lossy(vals.len()))
    };
    Some(mean(late)? / mean(early)?)
}
