//! Special functions and quadrature rules shared across modules.

use std::f64::consts::PI;

/// `J_0(x), …, J_{m_max}(x)` by Miller's downward recurrence, normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_all(m_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; m_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let top = (m_max as f64).max(x);
    let mut start = (top + 20.0 + 2.0 * (40.0 * top).sqrt()) as usize;
    start += start % 2;
    let (mut jp, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        // k-1 is the order of the new value j
        if k - 1 <= m_max {
            out[k - 1] = j;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += out[0];
    for (m, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if m % 2 == 1 {
            *v *= sign;
        }
    }
    out
}

/// `J_m(x)`.
pub fn bessel_j(m: usize, x: f64) -> f64 {
    bessel_j_all(m, x)[m]
}

/// `J_m(x)` for a single low order: Miller below `x = 25`, the Hankel
/// asymptotic expansion above (truncated at its smallest term).
pub fn bessel_j_single(m: usize, x: f64) -> f64 {
    let ax = x.abs();
    if ax < 25.0 || (m as f64) > 0.5 * ax {
        return bessel_j(m, x);
    }
    let mu = 4.0 * (m * m) as f64;
    let (mut p, mut q) = (0.0, 0.0);
    let mut a: f64 = 1.0; // a_k / x^k
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        if a.abs() > prev {
            break;
        }
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        prev = a.abs();
        let odd = (2 * k + 1) as f64;
        a *= (mu - odd * odd) / ((k + 1) as f64 * 8.0 * ax);
    }
    let omega = ax - (m as f64) * PI / 2.0 - PI / 4.0;
    let v = (2.0 / (PI * ax)).sqrt() * (p * omega.cos() - q * omega.sin());
    if x < 0.0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Legendre polynomial `P_n(t)` by the three-term recurrence.
pub fn legendre_p(n: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * t * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `(P_n(t), P_n'(t))`.
pub fn legendre_p_with_derivative(n: usize, t: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let p = legendre_p(n, t);
    let q = legendre_p(n - 1, t);
    if (1.0 - t * t).abs() < 1e-300 {
        let s = if t > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        return (p, s * (n * (n + 1)) as f64 / 2.0);
    }
    (p, n as f64 * (q - t * p) / (1.0 - t * t))
}

/// Riemann zeta for real `s > 1` by Euler–Maclaurin summation.
pub fn riemann_zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1");
    const N: usize = 20;
    // B_2, B_4, ..., B_16
    const B: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let n = N as f64;
    let mut sum: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let mut rising = s; // s(s+1)...(s+2k-2)
    let mut fact = 2.0; // (2k)!
    for (k, b) in B.iter().enumerate() {
        let k = k + 1;
        sum += b / fact * rising * n.powf(-s - 2.0 * k as f64 + 1.0);
        rising *= (s + 2.0 * k as f64 - 1.0) * (s + 2.0 * k as f64);
        fact *= (2.0 * k as f64 + 1.0) * (2.0 * k as f64 + 2.0);
    }
    sum
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 1..n {
                let k = k as f64;
                let p2 = ((2.0 * k + 1.0) * z * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule for `∫_a^b f` with `panels` panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * f(mid + 0.5 * h * xi)).sum();
        total += 0.5 * h * s;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
        assert!((bessel_j(0, 2.0) - 0.223_890_779_141_235_67).abs() < 1e-15);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(5, 10.0) - (-0.234_061_528_186_793_6)).abs() < 1e-14);
        assert!(bessel_j(0, 2.404_825_557_695_773).abs() < 1e-15);
        assert!((bessel_j(0, 100.0) - 0.019_985_850_304_223_12).abs() < 1e-14);
        assert!((bessel_j(1, -1.0) + 0.440_050_585_744_933_5).abs() < 1e-15);
    }

    #[test]
    fn bessel_square_sum_identity() {
        for x in [0.5, 7.0, 60.0, 150.0] {
            let j = bessel_j_all(400, x);
            let s = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-12, "x = {x}: {s}");
        }
    }

    #[test]
    fn bessel_matches_series_for_high_order() {
        // J_m(x) = (x/2)^m/m! Σ (−x²/4)^k /(k!(m+k)!/m!)
        let (m, x) = (40usize, 12.0f64);
        let mut term = (1..=m).fold(1.0, |acc, k| acc * x / 2.0 / k as f64);
        let mut sum = 0.0;
        for k in 0..60 {
            sum += term;
            term *= -x * x / 4.0 / ((k + 1) as f64 * (m + k + 1) as f64);
        }
        assert!((bessel_j(m, x) - sum).abs() < 1e-12 * sum.abs());
    }

    #[test]
    fn asymptotic_branch_matches_miller() {
        for m in [0usize, 1, 4] {
            for x in [25.0, 40.0, 97.3, 300.0] {
                let a = bessel_j_single(m, x);
                let b = bessel_j(m, x);
                assert!((a - b).abs() < 1e-14, "m={m} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn legendre_values() {
        for n in [0, 5, 40, 200] {
            assert!((legendre_p(n, 1.0) - 1.0).abs() < 1e-12);
        }
        assert!((legendre_p(1, 0.3) - 0.3).abs() < 1e-16);
        // Rodrigues-form oracle: P_10 by explicit coefficients
        let t: f64 = 0.7;
        let p10 = (46189.0 * t.powi(10) - 109395.0 * t.powi(8) + 90090.0 * t.powi(6)
            - 30030.0 * t.powi(4)
            + 3465.0 * t.powi(2)
            - 63.0)
            / 256.0;
        assert!((legendre_p(10, t) - p10).abs() < 1e-14);
        let (p, dp) = legendre_p_with_derivative(7, 0.4);
        let h = 1e-6;
        let fd = (legendre_p(7, 0.4 + h) - legendre_p(7, 0.4 - h)) / (2.0 * h);
        assert!((p - legendre_p(7, 0.4)).abs() < 1e-16 && (dp - fd).abs() < 1e-8);
        assert_eq!(legendre_p_with_derivative(4, 1.0).1, 10.0);
    }

    #[test]
    fn zeta_values() {
        assert!((riemann_zeta(2.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((riemann_zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((riemann_zeta(3.0) - 1.202_056_903_159_594_2).abs() < 1e-14);
        assert!((riemann_zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-13);
    }

    #[test]
    fn quadrature_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let s: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        let v = integrate(|t| t.sin(), 0.0, PI, 4, 12);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
