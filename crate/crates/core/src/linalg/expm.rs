//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3 to 13, choosing the degree from the 1-norm.

use nalgebra::DMatrix;
use num_complex::Complex64;

type C = Complex64;

const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!("no Padé table for degree {m}"),
    }
}

/// Maximum absolute column sum.
pub fn norm1(a: &DMatrix<C>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn scaled(a: &DMatrix<C>, s: f64) -> DMatrix<C> {
    a * C::new(s, 0.0)
}

/// `exp(A)` for a square complex matrix.
pub fn expm(a: &DMatrix<C>) -> DMatrix<C> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    let ident = DMatrix::<C>::identity(n, n);
    let norm = norm1(a);
    if norm == 0.0 {
        return ident;
    }

    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            let (u, v) = pade_low(a, m, &ident);
            return solve_pade(&u, &v);
        }
    }

    let theta13 = THETA[4].1;
    let squarings = ((norm / theta13).log2().ceil()).max(0.0) as i32;
    let a = scaled(a, 0.5f64.powi(squarings));
    let (u, v) = pade13(&a, &ident);
    let mut r = solve_pade(&u, &v);
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

fn pade_low(a: &DMatrix<C>, m: usize, ident: &DMatrix<C>) -> (DMatrix<C>, DMatrix<C>) {
    let b = pade_coefficients(m);
    let a2 = a * a;
    let mut even = scaled(ident, b[0]);
    let mut odd = scaled(ident, b[1]);
    let mut power = ident.clone();
    for j in 1..=m / 2 {
        power = &power * &a2;
        even += scaled(&power, b[2 * j]);
        odd += scaled(&power, b[2 * j + 1]);
    }
    (a * odd, even)
}

fn pade13(a: &DMatrix<C>, ident: &DMatrix<C>) -> (DMatrix<C>, DMatrix<C>) {
    let b = pade_coefficients(13);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u = a * (&a6 * inner_u + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(ident, b[1]));
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * inner_v + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(ident, b[0]);
    (u, v)
}

fn solve_pade(u: &DMatrix<C>, v: &DMatrix<C>) -> DMatrix<C> {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).expect("Padé denominator is nonsingular inside the degree thresholds")
}
