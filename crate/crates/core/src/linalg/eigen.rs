//! Eigenvalues of dense nonsymmetric matrices.
//!
//! The matrix is balanced, reduced to upper Hessenberg form with Householder
//! reflections and then deflated with Francis double-shift QR sweeps. Only
//! eigenvalues are computed.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Total QR sweeps allowed are this factor times `max(10, n)`. Defective
/// eigenvalues converge only linearly, so a per-eigenvalue cap is too tight.
const ITERATION_BUDGET_FACTOR: usize = 30;

/// All eigenvalues of `a`, in no particular order. Complex eigenvalues come
/// in conjugate pairs.
pub fn eigenvalues<T: Real>(a: &Matrix<T>) -> Result<Vec<Complex<T>>> {
    if !a.is_square() {
        return invalid(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        ));
    }
    if !a.is_finite() {
        return invalid("matrix has non-finite entries");
    }
    let mut h = a.clone();
    balance(&mut h);
    reduce_to_hessenberg(&mut h);
    hessenberg_qr(&mut h)
}

/// Largest real part over the spectrum of `a`.
pub fn spectral_abscissa<T: Real>(a: &Matrix<T>) -> Result<T> {
    let eig = eigenvalues(a)?;
    eig.iter()
        .map(|z| z.re)
        .reduce(T::max)
        .ok_or_else(|| Error::InvalidArgument("empty matrix".into()))
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable. Leaves the spectrum unchanged.
fn balance<T: Real>(a: &mut Matrix<T>) {
    let n = a.rows();
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < T::lit(0.95) * s {
                done = false;
                let inv = T::one() / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn reduce_to_hessenberg<T: Real>(a: &mut Matrix<T>) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![T::zero(); n];
    for k in 0..n - 2 {
        let alpha = ((k + 1)..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<T>().sqrt();
        if alpha == T::zero() {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let sign = if x0 < T::zero() { -T::one() } else { T::one() };
        for i in 0..n {
            v[i] = if i > k { a[(i, k)] } else { T::zero() };
        }
        v[k + 1] = x0 + sign * alpha;
        let vtv: T = ((k + 1)..n).map(|i| v[i] * v[i]).sum();
        if vtv == T::zero() {
            continue;
        }
        let beta = T::lit(2.0) / vtv;
        // A <- H A
        for j in 0..n {
            let s: T = ((k + 1)..n).map(|i| v[i] * a[(i, j)]).sum();
            let s = s * beta;
            for i in (k + 1)..n {
                a[(i, j)] -= s * v[i];
            }
        }
        // A <- A H
        for i in 0..n {
            let s: T = ((k + 1)..n).map(|j| a[(i, j)] * v[j]).sum();
            let s = s * beta;
            for j in (k + 1)..n {
                a[(i, j)] -= s * v[j];
            }
        }
        for i in (k + 2)..n {
            a[(i, k)] = T::zero();
        }
    }
}

#[inline]
fn copysign<T: Real>(mag: T, sign: T) -> T {
    if sign >= T::zero() {
        mag.abs()
    } else {
        -mag.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
fn hessenberg_qr<T: Real>(a: &mut Matrix<T>) -> Result<Vec<Complex<T>>> {
    let n = a.rows() as isize;
    let mut out = vec![Complex::new(T::zero(), T::zero()); n as usize];
    if n == 0 {
        return Ok(out);
    }
    macro_rules! h {
        ($i:expr, $j:expr) => {
            a[(($i) as usize, ($j) as usize)]
        };
    }

    let mut anorm = T::zero();
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm += h!(i, j).abs();
        }
    }

    let zero = T::zero();
    let mut nn = n - 1;
    let mut t = zero;
    let budget = ITERATION_BUDGET_FACTOR * (n as usize).max(10);
    let mut total = 0usize;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            // Find a negligible subdiagonal element.
            let mut l = nn;
            while l >= 1 {
                let mut s = h!(l - 1, l - 1).abs() + h!(l, l).abs();
                if s == zero {
                    s = anorm;
                }
                if h!(l, l - 1).abs() + s == s {
                    h!(l, l - 1) = zero;
                    break;
                }
                l -= 1;
            }
            let mut x = h!(nn, nn);
            if l == nn {
                out[nn as usize] = Complex::new(x + t, zero);
                nn -= 1;
                break;
            }
            let mut y = h!(nn - 1, nn - 1);
            let mut w = h!(nn, nn - 1) * h!(nn - 1, nn);
            if l == nn - 1 {
                let p = T::lit(0.5) * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= zero {
                    z = p + copysign(z, p);
                    let hi = if z != zero { x - w / z } else { x + z };
                    out[(nn - 1) as usize] = Complex::new(x + z, zero);
                    out[nn as usize] = Complex::new(hi, zero);
                } else {
                    out[(nn - 1) as usize] = Complex::new(x + p, -z);
                    out[nn as usize] = Complex::new(x + p, z);
                }
                nn -= 2;
                break;
            }

            if total >= budget {
                return Err(Error::NoConvergence(format!(
                    "QR iteration stalled on a {n}x{n} matrix with {} eigenvalues left",
                    nn + 1
                )));
            }
            if its > 0 && its.is_multiple_of(10) {
                // Exceptional shift.
                t += x;
                for i in 0..=nn {
                    h!(i, i) -= x;
                }
                let s = h!(nn, nn - 1).abs() + h!(nn - 1, nn - 2).abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;
            total += 1;

            // Look for two consecutive small subdiagonal elements.
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = h!(m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h!(m + 1, m) + h!(m, m + 1);
                q = h!(m + 1, m + 1) - z - rr - ss;
                r = h!(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h!(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (h!(m - 1, m - 1).abs() + z.abs() + h!(m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                h!(i, i - 2) = zero;
                if i != m + 2 {
                    h!(i, i - 3) = zero;
                }
            }

            // Double-shift QR sweep on rows/columns l..=nn.
            let mut k = m;
            while k < nn {
                if k != m {
                    p = h!(k, k - 1);
                    q = h!(k + 1, k - 1);
                    r = zero;
                    if k != nn - 1 {
                        r = h!(k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != zero {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = copysign((p * p + q * q + r * r).sqrt(), p);
                if s != zero {
                    if k == m {
                        if l != m {
                            h!(k, k - 1) = -h!(k, k - 1);
                        }
                    } else {
                        h!(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = h!(k, j) + q * h!(k + 1, j);
                        if k != nn - 1 {
                            pp += r * h!(k + 2, j);
                            h!(k + 2, j) -= pp * z;
                        }
                        h!(k + 1, j) -= pp * y;
                        h!(k, j) -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * h!(i, k) + y * h!(i, k + 1);
                        if k != nn - 1 {
                            pp += z * h!(i, k + 2);
                            h!(i, k + 2) -= pp * r;
                        }
                        h!(i, k + 1) -= pp * q;
                        h!(i, k) -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(out)
}
