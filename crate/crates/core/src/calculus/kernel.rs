//! Smooth compactly supported test functions on space-time.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// exp(−1/(1−s²)) on (−1, 1), zero outside.
#[inline]
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Derivative of [`bump`].
#[inline]
pub fn bump_derivative(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        bump(s) * (-2.0 * s / (q * q))
    }
}

/// Trapezoid rule on [a, b] with `m` panels. For integrands whose derivatives
/// all vanish at the ends the error decays faster than any power of 1/m.
pub fn trapezoid(a: f64, b: f64, m: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / m as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for j in 1..m {
        acc += f(a + h * j as f64);
    }
    acc * h
}

const FINE_PANELS: usize = 4096;

/// ∫ bump over (−1, 1) ≈ 0.443993816.
pub fn bump_mass() -> f64 {
    static MASS: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *MASS.get_or_init(|| trapezoid(-1.0, 1.0, FINE_PANELS, bump))
}

/// Separable bump ψ(t, x) = c·b(2t/w + 1)·b(x₁/r₁)·b(x₂/r₂), supported in
/// −w < t < 0 and |xᵢ| < rᵢ, spatially even, unit mass.
///
/// With w ≤ 1 and r₁² + r₂² ≤ 1 the support lies in the closed past
/// parabolic unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierKernel {
    pub id: usize,
    pub width: f64,
    pub radii: [f64; 2],
}

impl MollifierKernel {
    pub fn new(id: usize, width: f64, radii: [f64; 2]) -> Self {
        assert!(width > 0.0 && width <= 1.0, "time width in (0, 1]");
        assert!(radii[0] > 0.0 && radii[1] > 0.0, "positive radii");
        assert!(radii[0] * radii[0] + radii[1] * radii[1] <= 1.0 + 1e-12, "support inside the unit ball");
        Self { id, width, radii }
    }

    /// The default bump, w = 1, r = (1/√2, 1/√2).
    pub fn canonical() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(0, 1.0, [r, r])
    }

    /// Normalizing constant c.
    pub fn normalization(&self) -> f64 {
        let m = bump_mass();
        1.0 / (0.5 * self.width * m * self.radii[0] * m * self.radii[1] * m)
    }

    /// ψ(t, x).
    pub fn value(&self, t: f64, x: [f64; 2]) -> f64 {
        if t >= 0.0 || t <= -self.width {
            return 0.0;
        }
        self.normalization()
            * bump(2.0 * t / self.width + 1.0)
            * bump(x[0] / self.radii[0])
            * bump(x[1] / self.radii[1])
    }

    /// ∂ψ/∂xᵢ.
    pub fn spatial_derivative(&self, axis: usize, t: f64, x: [f64; 2]) -> f64 {
        if t >= 0.0 || t <= -self.width {
            return 0.0;
        }
        let other = 1 - axis;
        self.normalization()
            * bump(2.0 * t / self.width + 1.0)
            * bump_derivative(x[axis] / self.radii[axis])
            / self.radii[axis]
            * bump(x[other] / self.radii[other])
    }

    /// max ψ = c·e^{−3}.
    pub fn sup(&self) -> f64 {
        self.normalization() * (-3.0f64).exp()
    }

    /// Normalized time profile of the scaled kernel as a density in the
    /// offset τ = t̄ − t ∈ (−wL², 0).
    pub fn time_density(&self, scale: f64, tau: f64) -> f64 {
        let w = self.width * scale * scale;
        if tau >= 0.0 || tau <= -w {
            return 0.0;
        }
        2.0 / (w * bump_mass()) * bump(2.0 * tau / w + 1.0)
    }

    /// Normalized spatial profile along `axis` of the scaled kernel.
    pub fn space_density(&self, axis: usize, scale: f64, y: f64) -> f64 {
        let r = self.radii[axis] * scale;
        bump(y / r) / (r * bump_mass())
    }
}

/// The canonical bump and three anisotropic perturbations over which
/// kernel-dependent suprema are taken.
pub fn kernel_set() -> Vec<MollifierKernel> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        MollifierKernel::canonical(),
        MollifierKernel::new(1, 1.0, [r, 0.4]),
        MollifierKernel::new(2, 1.0, [0.4, r]),
        MollifierKernel::new(3, 0.5, [r, r]),
    ]
}

/// φ_z^L(z̄) = L^{−4}ψ((t̄ − t)/L², (x̄ − x)/L), evaluated analytically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledKernel {
    pub base: MollifierKernel,
    pub scale: f64,
    pub center_t: f64,
    pub center_x: [f64; 2],
}

/// Parabolic rescaling of `psi` to scale `scale` centered at (t, x).
pub fn scale_kernel<T: Real>(psi: &MollifierKernel, z: &crate::torus::ParabolicPoint<T>, scale: T) -> ScaledKernel {
    assert!(scale > T::zero(), "positive scale");
    ScaledKernel {
        base: *psi,
        scale: scale.as_f64(),
        center_t: z.t.as_f64(),
        center_x: [z.x[0].as_f64(), z.x[1].as_f64()],
    }
}

impl ScaledKernel {
    /// φ_z^L at (t̄, x̄); spatial offsets use the torus-minimal representative.
    pub fn value(&self, t: f64, x: [f64; 2]) -> f64 {
        let l = self.scale;
        let dx = [
            crate::torus::wrap(x[0] - self.center_x[0]),
            crate::torus::wrap(x[1] - self.center_x[1]),
        ];
        self.base.value((t - self.center_t) / (l * l), [dx[0] / l, dx[1] / l]) / l.powi(4)
    }

    /// ‖φ_z^L‖∞ = L^{−4}‖ψ‖∞.
    pub fn sup(&self) -> f64 {
        self.base.sup() / self.scale.powi(4)
    }

    /// ∫ φ_z^L by separable trapezoid quadrature.
    pub fn mass(&self) -> f64 {
        let l = self.scale;
        let t = trapezoid(-self.base.width * l * l, 0.0, FINE_PANELS, |tau| self.base.time_density(l, tau));
        let x = trapezoid(-self.base.radii[0] * l, self.base.radii[0] * l, FINE_PANELS, |y| self.base.space_density(0, l, y));
        let y = trapezoid(-self.base.radii[1] * l, self.base.radii[1] * l, FINE_PANELS, |y| self.base.space_density(1, l, y));
        t * x * y
    }
}

/// ∫ −∂ᵢψ^L(y)·y_j dy for all (i, j), which equals the identity matrix, and
/// ∫ ∂ᵢψ^L, which vanishes for spatially even kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbpIdentity {
    pub moment: [[f64; 2]; 2],
    pub mean_gradient: [f64; 2],
}

impl IbpIdentity {
    /// max |moment − I|.
    pub fn moment_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                d = d.max((self.moment[i][j] - target).abs());
            }
        }
        d
    }

    pub fn gradient_defect(&self) -> f64 {
        self.mean_gradient[0].abs().max(self.mean_gradient[1].abs())
    }
}

/// Evaluates the integration-by-parts identity for ψ^L by separable
/// quadrature of the analytic derivative.
pub fn ibp_identity(psi: &MollifierKernel, scale: f64) -> IbpIdentity {
    let l = scale;
    let n = FINE_PANELS;
    // the time factor integrates to 1 and separates out
    let time = trapezoid(-psi.width * l * l, 0.0, n, |tau| psi.time_density(l, tau));
    let mut moment = [[0.0; 2]; 2];
    let mut mean_gradient = [0.0; 2];
    for i in 0..2 {
        let r = psi.radii[i] * l;
        let m = bump_mass();
        // derivative of the normalized profile along axis i
        let d = |y: f64| bump_derivative(y / r) / (r * r * m);
        let d_int = trapezoid(-r, r, n, d);
        let d_first = trapezoid(-r, r, n, |y| d(y) * y);
        let other = 1 - i;
        let ro = psi.radii[other] * l;
        let p_other = |y: f64| psi.space_density(other, l, y);
        let o_int = trapezoid(-ro, ro, n, p_other);
        let o_first = trapezoid(-ro, ro, n, |y| p_other(y) * y);
        mean_gradient[i] = time * d_int * o_int;
        moment[i][i] = -time * d_first * o_int;
        moment[i][other] = -time * d_int * o_first;
    }
    IbpIdentity { moment, mean_gradient }
}
