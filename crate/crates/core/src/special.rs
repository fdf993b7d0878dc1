//! Special functions and quadrature rules.

use crate::scalar::Real;

/// Γ(m/2) for a positive integer m, by the half-integer recursion.
pub fn gamma_half<T: Real>(m: usize) -> T {
    assert!(m > 0, "gamma_half needs m >= 1");
    let (mut value, mut x) = if m.is_multiple_of(2) {
        (T::one(), T::one())
    } else {
        (T::PI().sqrt(), T::of(0.5))
    };
    let target = T::of_usize(m) / T::of(2.0);
    while x < target - T::of(0.25) {
        value = value * x;
        x = x + T::one();
    }
    value
}

/// Surface area of the unit sphere S^{dim−1} ⊂ ℝ^dim.
pub fn sphere_area<T: Real>(dim: usize) -> T {
    let two = T::of(2.0);
    two * T::PI().powf(T::of_usize(dim) / two) / gamma_half::<T>(dim)
}

pub fn binomial(n: i64, k: i64) -> u64 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Dimension of the space of degree-k spherical harmonics on S^{dim−1}.
pub fn harmonic_dim(dim: usize, k: usize) -> u64 {
    let (n, k) = (dim as i64, k as i64);
    binomial(n + k - 1, k) - binomial(n + k - 3, k - 2)
}

/// ln cosh x without overflow.
#[inline]
pub fn ln_cosh<T: Real>(x: T) -> T {
    let a = x.abs();
    a + (-(a + a)).exp().ln_1p() - T::LN_2()
}

/// sech(x)^p for p > 0, accurate deep into the tails.
#[inline]
pub fn sech_pow<T: Real>(x: T, p: T) -> T {
    (-p * ln_cosh(x)).exp()
}

/// ∫_ℝ sech^p t dt by the trapezoid rule, which converges geometrically for this integrand.
pub fn sech_power_integral<T: Real>(p: T) -> T {
    let tmax = (T::of(92.0) + p * T::LN_2()) / p;
    let h = T::of(0.05);
    let m = (tmax / h).ceil().to_usize().unwrap_or(1);
    let mut acc = T::zero();
    for i in 1..=m {
        acc = acc + sech_pow(T::of_usize(i) * h, p);
    }
    h * (T::one() + acc + acc)
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (
        x.into_iter().map(T::of).collect(),
        w.into_iter().map(T::of).collect(),
    )
}

/// Zonal spherical harmonic of degree k on S^{dim−1}, normalized to 1 at the pole.
pub fn zonal<T: Real>(dim: usize, k: usize, x: T) -> T {
    let lambda = T::of_usize(dim - 2) / T::of(2.0);
    gegenbauer(lambda, k, x) / gegenbauer(lambda, k, T::one())
}

fn gegenbauer<T: Real>(lambda: T, k: usize, x: T) -> T {
    let two = T::of(2.0);
    let (mut c0, mut c1) = (T::one(), two * lambda * x);
    if k == 0 {
        return c0;
    }
    if lambda == T::zero() {
        // dim = 2 limit is not used, Chebyshev fallback keeps the recursion finite
        c1 = x;
    }
    for j in 1..k {
        let jf = T::of_usize(j);
        let c2 = (two * x * (jf + lambda) * c1 - (jf + two * lambda - T::one()) * c0)
            / (jf + T::one());
        c0 = c1;
        c1 = c2;
    }
    c1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_gamma() {
        assert!((gamma_half::<f64>(1) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half::<f64>(2), 1.0);
        assert!((gamma_half::<f64>(7) - 3.323_350_970_447_842_6).abs() < 1e-13);
        assert_eq!(gamma_half::<f64>(10), 24.0);
    }

    #[test]
    fn sphere_areas() {
        let pi = std::f64::consts::PI;
        assert!((sphere_area::<f64>(2) - 2.0 * pi).abs() < 1e-14);
        assert!((sphere_area::<f64>(3) - 4.0 * pi).abs() < 1e-13);
        assert!((sphere_area::<f64>(4) - 2.0 * pi * pi).abs() < 1e-13);
    }

    #[test]
    fn harmonic_dimensions() {
        assert_eq!(harmonic_dim(3, 0), 1);
        assert_eq!(harmonic_dim(3, 1), 3);
        assert_eq!(harmonic_dim(3, 2), 5);
        assert_eq!(harmonic_dim(4, 2), 9);
        assert_eq!(harmonic_dim(5, 1), 5);
        for dim in 3..9 {
            for k in 0..6 {
                let expected = if k == 0 { 1 } else { harmonic_dim(dim, k) };
                assert!(expected > 0);
            }
        }
    }

    #[test]
    fn sech_integrals() {
        assert!((sech_power_integral::<f64>(4.0) - 4.0 / 3.0).abs() < 1e-14);
        assert!((sech_power_integral::<f64>(2.0) - 2.0).abs() < 1e-14);
        assert!((sech_power_integral::<f64>(1.0) - std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre::<f64>(8);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let m14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((m14 - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn zonal_orthogonality_and_norm() {
        // ∫_{S^{N−1}} P_j P_k = δ_jk |S^{N−1}|/D(k), checked with polar angle quadrature
        for dim in [3usize, 4, 5] {
            let (x, w) = gauss_legendre::<f64>(64);
            let pi = std::f64::consts::PI;
            let sub = sphere_area::<f64>(dim - 1);
            for j in 0..4 {
                for k in 0..4 {
                    let mut acc = 0.0;
                    for (xi, wi) in x.iter().zip(&w) {
                        let phi = 0.5 * pi * (xi + 1.0);
                        let c = phi.cos();
                        acc += 0.5 * pi * wi * phi.sin().powi(dim as i32 - 2)
                            * zonal(dim, j, c) * zonal(dim, k, c);
                    }
                    let value = sub * acc;
                    let expected = if j == k {
                        sphere_area::<f64>(dim) / harmonic_dim(dim, k) as f64
                    } else {
                        0.0
                    };
                    assert!((value - expected).abs() < 1e-10, "dim {dim} j {j} k {k}");
                }
            }
        }
    }
}
