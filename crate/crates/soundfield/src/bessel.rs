//! Spherical Bessel functions and Legendre polynomials.
//!
//! `j_n` uses downward (Miller) recurrence normalized against the closed-form
//! low orders, which stays stable for n > x. `y_n` uses upward recurrence,
//! stable for all n. Derivatives follow `f_n' = f_{n-1} - (n+1)/x f_n`.

/// Spherical Bessel functions of the first kind `j_0..j_nmax` and derivatives.
pub fn spherical_jn(nmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(x >= 0.0 && x.is_finite(), "argument must be finite and >= 0");
    let mut j = vec![0.0; nmax + 1];
    let mut dj = vec![0.0; nmax + 1];
    if x == 0.0 {
        j[0] = 1.0;
        if nmax >= 1 {
            dj[1] = 1.0 / 3.0;
        }
        return (j, dj);
    }
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    j[0] = j0;
    if nmax >= 1 {
        j[1] = j1;
    }
    if nmax >= 2 {
        // Miller's downward recurrence with scaling guard
        let start = nmax + (x.ceil() as usize) + 32;
        let mut fkp1 = 0.0_f64;
        let mut fk = 1e-30_f64;
        for k in (0..start).rev() {
            let fkm1 = (2.0 * (k as f64 + 1.0) + 1.0) / x * fk - fkp1;
            fkp1 = fk;
            fk = fkm1;
            if k <= nmax {
                j[k] = fk;
            }
            if fk.abs() > 1e250 {
                let s = 1e-250;
                fk *= s;
                fkp1 *= s;
                for v in j.iter_mut().skip(k.min(nmax)) {
                    *v *= s;
                }
            }
        }
        // normalize against whichever closed form is better conditioned
        let scale = if j0.abs() >= j1.abs() {
            j0 / j[0]
        } else {
            j1 / j[1]
        };
        for v in j.iter_mut() {
            *v *= scale;
        }
    }
    dj[0] = x.cos() / x - x.sin() / (x * x);
    for n in 1..=nmax {
        dj[n] = j[n - 1] - (n as f64 + 1.0) / x * j[n];
    }
    (j, dj)
}

/// Spherical Bessel functions of the second kind `y_0..y_nmax` and derivatives.
///
/// For very small x and large n the values overflow f64; entries saturate to
/// +/- infinity from there on (callers treat the matching modes as evanescent).
pub fn spherical_yn(nmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(x > 0.0 && x.is_finite(), "argument must be finite and > 0");
    let mut y = vec![0.0; nmax + 1];
    let mut dy = vec![0.0; nmax + 1];
    y[0] = -x.cos() / x;
    if nmax >= 1 {
        y[1] = -x.cos() / (x * x) - x.sin() / x;
    }
    for n in 1..nmax {
        y[n + 1] = (2.0 * n as f64 + 1.0) / x * y[n] - y[n - 1];
        if !y[n + 1].is_finite() {
            for k in (n + 1)..=nmax {
                y[k] = y[n + 1];
            }
            break;
        }
    }
    dy[0] = x.sin() / x + x.cos() / (x * x);
    for n in 1..=nmax {
        dy[n] = y[n - 1] - (n as f64 + 1.0) / x * y[n];
    }
    (y, dy)
}

/// Legendre polynomials `P_0(x)..P_nmax(x)` by the three-term recurrence.
pub fn legendre(nmax: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(nmax + 1);
    p.push(1.0);
    if nmax >= 1 {
        p.push(x);
    }
    for n in 1..nmax {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0);
        p.push(next);
    }
    p
}
