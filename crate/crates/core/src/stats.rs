//! Small summary statistics used by the studies.

use crate::scalar::Real;

pub fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len().max(1))
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let ss = xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>();
    (ss / T::from_usize_lossy(xs.len() - 1)).sqrt()
}

/// Median; NaNs sort last.
pub fn median<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::nan();
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

/// (25th, 75th) percentiles by linear interpolation.
pub fn iqr<T: Real>(xs: &[T]) -> (T, T) {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
    let q = |p: f64| {
        if v.is_empty() {
            return T::nan();
        }
        let r = p * (v.len() - 1) as f64;
        let lo = r.floor() as usize;
        let hi = r.ceil() as usize;
        let f = T::lit(r - lo as f64);
        v[lo] + f * (v[hi] - v[lo])
    };
    (q(0.25), q(0.75))
}

/// Least-squares slope of log y against log x; pairs with y ≤ 0 are skipped.
/// Returns `None` with fewer than two usable pairs.
pub fn loglog_slope<T: Real>(xs: &[T], ys: &[T]) -> Option<T> {
    let pts: Vec<(T, T)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > T::zero() && y > T::zero())
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    (sxx > T::zero()).then(|| sxy / sxx)
}
