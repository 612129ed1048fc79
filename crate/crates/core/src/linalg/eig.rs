//! Dense complex non-symmetric eigendecomposition.
//!
//! Householder reduction to upper Hessenberg form followed by the
//! single-shift complex QR iteration with Wilkinson shifts and the
//! Ahues–Tisseur deflation test (the scheme of LAPACK's `zgehd2` /
//! `zlahqr`). Right eigenvectors come from back-substitution on the Schur
//! factor. Everything is single-threaded and deterministic.
//!
//! The exact-zero bookkeeping matters for this crate: reflectors that would
//! be the identity are skipped, so structurally zero subdiagonals survive
//! the reduction and the QR sweep deflates them immediately. That keeps the
//! eigenvalues of large exact Jordan blocks tightly clustered.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[inline]
fn cabs1(z: C) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Complex Schur factorisation `A = Z T Z†` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: DMatrix<C>,
    pub z: DMatrix<C>,
}

/// Eigenvalues with unit-norm right eigenvectors stored column-wise.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C>,
    pub vectors: DMatrix<C>,
}

/// Smith's complex division; avoids squaring tiny or huge denominators.
fn cdiv(a: C, b: C) -> C {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let den = b.re + b.im * r;
        C::new((a.re + a.im * r) / den, (a.im - a.re * r) / den)
    } else {
        let r = b.re / b.im;
        let den = b.re * r + b.im;
        C::new((a.re * r + a.im) / den, (a.im * r - a.re) / den)
    }
}

/// `sqrt(x² + y² + z²)` scaled by the largest magnitude.
fn lapy3(x: f64, y: f64, z: f64) -> f64 {
    let w = x.abs().max(y.abs()).max(z.abs());
    if w == 0.0 {
        return x.abs() + y.abs() + z.abs();
    }
    w * ((x / w).powi(2) + (y / w).powi(2) + (z / w).powi(2)).sqrt()
}

/// Elementary reflector `H = I − τ v v†` with `v[0] = 1` such that
/// `H† (alpha; x) = (beta; 0)` and `beta` real. Returns `(tau, beta)` and
/// overwrites `x` with `v[1..]`.
fn householder(alpha: C, x: &mut [C]) -> (C, C) {
    let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if xnorm == 0.0 && alpha.im == 0.0 {
        return (ZERO, alpha);
    }
    let norm = lapy3(alpha.re, alpha.im, xnorm);
    let beta = if alpha.re >= 0.0 { -norm } else { norm };
    let tau = C::new((beta - alpha.re) / beta, -alpha.im / beta);
    let scale = ONE / (alpha - beta);
    for xi in x.iter_mut() {
        *xi *= scale;
    }
    (tau, C::new(beta, 0.0))
}

/// Reduces `a` in place to upper Hessenberg form and returns the unitary
/// accumulation `Q` with `A_in = Q H Q†`.
pub fn hessenberg(a: &mut DMatrix<C>) -> DMatrix<C> {
    let n = a.nrows();
    let mut q = DMatrix::<C>::identity(n, n);
    if n < 3 {
        return q;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let alpha = a[(k + 1, k)];
        let mut x: Vec<C> = (k + 2..n).map(|i| a[(i, k)]).collect();
        let (tau, beta) = householder(alpha, &mut x);
        if tau == ZERO {
            continue;
        }
        let len = n - k - 1;
        v[0] = ONE;
        v[1..len].copy_from_slice(&x);
        let v = &v[..len];

        // A := A H on all rows, columns k+1..
        let taus: Vec<C> = v.iter().map(|vp| -tau * vp.conj()).collect();
        for i in 0..n {
            let mut s = ZERO;
            for (p, vp) in v.iter().enumerate() {
                s += a[(i, k + 1 + p)] * vp;
            }
            for (p, tp) in taus.iter().enumerate() {
                a[(i, k + 1 + p)] += s * tp;
            }
        }
        // A := H† A on rows k+1.., columns k+1..
        let ct = tau.conj();
        for j in k + 1..n {
            let mut s = ZERO;
            for (p, vp) in v.iter().enumerate() {
                s += vp.conj() * a[(k + 1 + p, j)];
            }
            s *= ct;
            for (p, vp) in v.iter().enumerate() {
                a[(k + 1 + p, j)] -= s * vp;
            }
        }
        // Q := Q H
        for i in 0..n {
            let mut s = ZERO;
            for (p, vp) in v.iter().enumerate() {
                s += q[(i, k + 1 + p)] * vp;
            }
            s *= tau;
            for (p, vp) in v.iter().enumerate() {
                q[(i, k + 1 + p)] -= s * vp.conj();
            }
        }
        a[(k + 1, k)] = beta;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
    q
}

/// Complex Schur factorisation of a general square matrix.
pub fn schur(a: &DMatrix<C>) -> Result<Schur> {
    assert!(a.is_square(), "schur needs a square matrix");
    let mut h = a.clone();
    let mut z = hessenberg(&mut h);
    hqr(&mut h, &mut z)?;
    // Clear the strictly lower part; it holds only deflated zeros.
    let n = h.nrows();
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { t: h, z })
}

/// Eigenvalues only.
pub fn eigenvalues(a: &DMatrix<C>) -> Result<Vec<C>> {
    let s = schur(a)?;
    Ok((0..a.nrows()).map(|i| s.t[(i, i)]).collect())
}

/// Full eigendecomposition; eigenvectors have unit 2-norm with their
/// largest-magnitude component made real and positive.
pub fn eig(a: &DMatrix<C>) -> Result<Eigen> {
    let n = a.nrows();
    let s = schur(a)?;
    let values: Vec<C> = (0..n).map(|i| s.t[(i, i)]).collect();
    let x = triangular_eigenvectors(&s.t);
    let mut vectors = &s.z * x;
    for j in 0..n {
        let mut col = vectors.column_mut(j);
        let norm = col.norm();
        if norm > 0.0 {
            col /= C::new(norm, 0.0);
        }
        let pivot = col.iter().copied().fold(ZERO, |best, z| if z.norm() > best.norm() { z } else { best });
        if pivot.norm() > 0.0 {
            col *= pivot.conj() / pivot.norm();
        }
    }
    Ok(Eigen { values, vectors })
}

/// In-place single-shift QR on an upper Hessenberg matrix, accumulating the
/// similarity transforms into `z`.
fn hqr(h: &mut DMatrix<C>, z: &mut DMatrix<C>) -> Result<()> {
    let n = h.nrows();
    if n == 0 {
        return Ok(());
    }
    if n == 1 {
        return Ok(());
    }
    let ulp = f64::EPSILON;
    let safmin = f64::MIN_POSITIVE;
    let smlnum = safmin * (n as f64 / ulp);
    const DAT1: f64 = 0.75;

    // Make the subdiagonal real.
    for i in 1..n {
        let hi = h[(i, i - 1)];
        if hi.im != 0.0 {
            let sc = hi / cabs1(hi);
            let sc = sc.conj() / sc.norm();
            h[(i, i - 1)] = C::new(hi.norm(), 0.0);
            for j in i..n {
                h[(i, j)] *= sc;
            }
            for j in 0..=(i + 1).min(n - 1) {
                h[(j, i)] *= sc.conj();
            }
            for j in 0..n {
                z[(j, i)] *= sc.conj();
            }
        }
    }

    let itmax = 30 * n.max(10);
    let mut kdefl = 0usize;
    let mut i = n - 1;
    loop {
        let mut l = 0usize;
        let mut converged = false;
        for _ in 0..=itmax {
            // Look for a negligible subdiagonal entry.
            let mut k = i;
            while k > l {
                if cabs1(h[(k, k - 1)]) <= smlnum {
                    break;
                }
                let mut tst = cabs1(h[(k - 1, k - 1)]) + cabs1(h[(k, k)]);
                if tst == 0.0 {
                    if k >= 2 {
                        tst += h[(k - 1, k - 2)].re.abs();
                    }
                    if k + 1 < n {
                        tst += h[(k + 1, k)].re.abs();
                    }
                }
                if h[(k, k - 1)].re.abs() <= ulp * tst {
                    let ab = cabs1(h[(k, k - 1)]).max(cabs1(h[(k - 1, k)]));
                    let ba = cabs1(h[(k, k - 1)]).min(cabs1(h[(k - 1, k)]));
                    let d = h[(k - 1, k - 1)] - h[(k, k)];
                    let aa = cabs1(h[(k, k)]).max(cabs1(d));
                    let bb = cabs1(h[(k, k)]).min(cabs1(d));
                    let s = aa + ab;
                    if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) {
                        break;
                    }
                }
                k -= 1;
            }
            l = k;
            if l > 0 {
                h[(l, l - 1)] = ZERO;
            }
            if l >= i {
                converged = true;
                break;
            }
            kdefl += 1;

            // Shift.
            let t = if kdefl.is_multiple_of(20) {
                let s = DAT1 * h[(i, i - 1)].re.abs();
                h[(i, i)] + s
            } else if kdefl.is_multiple_of(10) {
                let s = DAT1 * h[(l + 1, l)].re.abs();
                h[(l, l)] + s
            } else {
                let mut t = h[(i, i)];
                let u = h[(i - 1, i)].sqrt() * h[(i, i - 1)].sqrt();
                let s = cabs1(u);
                if s != 0.0 {
                    let x = (h[(i - 1, i - 1)] - t) * 0.5;
                    let sx = cabs1(x);
                    let s = s.max(cabs1(x));
                    let mut y = ((x / s) * (x / s) + (u / s) * (u / s)).sqrt() * s;
                    if sx > 0.0 {
                        let xs = x / sx;
                        if xs.re * y.re + xs.im * y.im < 0.0 {
                            y = -y;
                        }
                    }
                    t -= u * (u / (x + y));
                }
                t
            };

            // Look for two consecutive small subdiagonals.
            let mut m = i - 1;
            let mut v0;
            let mut v1;
            loop {
                let h11 = h[(m, m)];
                let h22 = h[(m + 1, m + 1)];
                let mut h11s = h11 - t;
                let mut h21 = h[(m + 1, m)].re;
                let s = cabs1(h11s) + h21.abs();
                h11s /= s;
                h21 /= s;
                v0 = h11s;
                v1 = C::new(h21, 0.0);
                if m == l {
                    break;
                }
                let h10 = h[(m, m - 1)].re;
                if h10.abs() * h21.abs() <= ulp * (cabs1(h11s) * (cabs1(h11) + cabs1(h22))) {
                    break;
                }
                m -= 1;
            }

            // Single-shift QR sweep.
            for k in m..i {
                if k > m {
                    v0 = h[(k, k - 1)];
                    v1 = h[(k + 1, k - 1)];
                }
                let mut tail = [v1];
                let (t1, beta) = householder(v0, &mut tail);
                let v2 = tail[0];
                if k > m {
                    h[(k, k - 1)] = beta;
                    h[(k + 1, k - 1)] = ZERO;
                }
                let t2 = (t1 * v2).re;
                for j in k..n {
                    let sum = t1.conj() * h[(k, j)] + t2 * h[(k + 1, j)];
                    h[(k, j)] -= sum;
                    h[(k + 1, j)] -= sum * v2;
                }
                for j in 0..=(k + 2).min(i) {
                    let sum = t1 * h[(j, k)] + t2 * h[(j, k + 1)];
                    h[(j, k)] -= sum;
                    h[(j, k + 1)] -= sum * v2.conj();
                }
                for j in 0..n {
                    let sum = t1 * z[(j, k)] + t2 * z[(j, k + 1)];
                    z[(j, k)] -= sum;
                    z[(j, k + 1)] -= sum * v2.conj();
                }
                if k == m && m > l {
                    // Restore a real subdiagonal after the bulge is introduced
                    // below a split point.
                    let mut temp = ONE - t1;
                    temp /= temp.norm();
                    h[(m + 1, m)] *= temp.conj();
                    if m + 2 <= i {
                        h[(m + 2, m + 1)] *= temp;
                    }
                    for j in m..=i {
                        if j != m + 1 {
                            for jj in j + 1..n {
                                h[(j, jj)] *= temp;
                            }
                            for ii in 0..j {
                                h[(ii, j)] *= temp.conj();
                            }
                            for ii in 0..n {
                                z[(ii, j)] *= temp.conj();
                            }
                        }
                    }
                }
            }

            // Keep h[i, i-1] real.
            let temp = h[(i, i - 1)];
            if temp.im != 0.0 {
                let rtemp = temp.norm();
                h[(i, i - 1)] = C::new(rtemp, 0.0);
                let temp = temp / rtemp;
                for jj in i + 1..n {
                    h[(i, jj)] *= temp.conj();
                }
                for ii in 0..i {
                    h[(ii, i)] *= temp;
                }
                for ii in 0..n {
                    z[(ii, i)] *= temp;
                }
            }
        }
        if !converged {
            return Err(Error::NoConvergence { iterations: itmax, row: i });
        }
        kdefl = 0;
        if l == 0 {
            break;
        }
        i = l - 1;
        if i == 0 {
            break;
        }
    }
    Ok(())
}

/// Right eigenvectors of an upper triangular matrix, one per column, by
/// back-substitution. Near-equal diagonal entries are separated by a floor
/// `smin` so every solve is finite; columns are rescaled when they grow.
fn triangular_eigenvectors(t: &DMatrix<C>) -> DMatrix<C> {
    let n = t.nrows();
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);
    let big = 1e150;
    let mut x = DMatrix::<C>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let smin = (ulp * cabs1(lambda)).max(smlnum);
        let mut col = vec![ZERO; k + 1];
        col[k] = ONE;
        for j in (0..k).rev() {
            let mut rhs = ZERO;
            for p in j + 1..=k {
                rhs -= t[(j, p)] * col[p];
            }
            let mut d = t[(j, j)] - lambda;
            if cabs1(d) < smin {
                d = C::new(smin, 0.0);
            }
            let (num, den) = (cabs1(rhs), cabs1(d));
            if num > den * big {
                let s = den * big / num;
                for c in col.iter_mut() {
                    *c *= s;
                }
                rhs *= s;
            }
            col[j] = cdiv(rhs, d);
            let peak = col[j..=k].iter().map(|z| cabs1(*z)).fold(0.0, f64::max);
            if peak > big {
                let s = 1.0 / peak;
                for c in col.iter_mut() {
                    *c *= s;
                }
            }
        }
        for (p, c) in col.into_iter().enumerate() {
            x[(p, k)] = c;
        }
    }
    x
}
