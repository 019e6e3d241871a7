//! φ-functions of exponential integrators, evaluated without cancellation.

/// Σ_j z^j/(j+k)! for |z| < 1; 24 terms leave a tail below 1/24!.
fn phi_series(k: usize, z: f64) -> f64 {
    let mut term = 1.0;
    for j in 1..=k {
        term /= j as f64;
    }
    let mut acc = term;
    for j in 1..24 {
        term *= z / (j + k) as f64;
        acc += term;
    }
    acc
}

/// (e^z − 1)/z.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1.0 {
        phi_series(1, z)
    } else {
        z.exp_m1() / z
    }
}

/// (e^z − 1 − z)/z².
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 1.0 {
        phi_series(2, z)
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// (e^z − 1 − z − z²/2)/z³.
pub fn phi3(z: f64) -> f64 {
    if z.abs() < 1.0 {
        phi_series(3, z)
    } else {
        (z.exp_m1() - z - 0.5 * z * z) / (z * z * z)
    }
}

/// Cox–Matthews fourth-order weights (f1, f2, f3) divided by the step, for
/// z = step·(−λ).
pub fn etdrk4_weights(z: f64) -> (f64, f64, f64) {
    let (p1, p2, p3) = (phi1(z), phi2(z), phi3(z));
    (p1 - 3.0 * p2 + 4.0 * p3, p2 - 2.0 * p3, -p2 + 4.0 * p3)
}
