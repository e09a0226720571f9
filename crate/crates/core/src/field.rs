//! Finite fields GF(p^n) with log/antilog tables, and the Galois ring GR(4, n) used for the
//! characteristic-2 MUB construction.

use crate::error::{Error, Result};

/// Prime factorization as (prime, exponent) pairs, ascending.
pub fn factorize(mut d: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= d {
        if d % p == 0 {
            let mut e = 0;
            while d % p == 0 {
                d /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if d > 1 {
        out.push((d, 1));
    }
    out
}

pub fn format_factorization(f: &[(u64, u32)]) -> String {
    f.iter()
        .map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{}^{}", p, e) })
        .collect::<Vec<_>>()
        .join("·")
}

/// (p, n) with d = p^n, or an error naming the factorization.
pub fn prime_power(d: usize) -> Result<(usize, usize)> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(format!("{} is below 2", d)));
    }
    let f = factorize(d as u64);
    if f.len() == 1 {
        Ok((f[0].0 as usize, f[0].1 as usize))
    } else {
        Err(Error::UnsupportedDimension(format!("{} = {} not a prime power", d, format_factorization(&f))))
    }
}

/// Polynomial over Z_m stored as coefficients c_0..c_{len-1}.
fn poly_mulmod(a: &[u32], b: &[u32], modulus: &[u32], m: u32) -> Vec<u32> {
    // modulus is monic of degree n, given as c_0..c_n
    let n = modulus.len() - 1;
    let mut prod = vec![0u32; 2 * n];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % m;
        }
    }
    for top in (n..prod.len()).rev() {
        let c = prod[top];
        if c == 0 {
            continue;
        }
        for k in 0..=n {
            let idx = top - n + k;
            prod[idx] = (prod[idx] + (m - c) * modulus[k] % m) % m;
        }
    }
    prod.truncate(n);
    prod
}

fn digits(mut x: usize, p: usize, n: usize) -> Vec<u32> {
    let mut out = vec![0u32; n];
    for c in out.iter_mut() {
        *c = (x % p) as u32;
        x /= p;
    }
    out
}

fn undigits(c: &[u32], p: usize) -> usize {
    c.iter().rev().fold(0, |acc, &x| acc * p + x as usize)
}

/// Monic primitive polynomial of degree n over F_p: the one with the smallest
/// integer encoding Σ c_i p^i of its lower coefficients. Returned as c_0..c_n.
pub fn primitive_polynomial(p: usize, n: usize) -> Vec<u32> {
    let q = p.pow(n as u32);
    if n == 1 {
        // x - g for the smallest primitive root g
        let g = (2..p).find(|&g| order_mod(g, p) == p - 1).unwrap_or(1);
        return vec![((p - g) % p) as u32, 1];
    }
    for code in 1..q {
        let mut f = digits(code, p, n);
        if f[0] == 0 {
            continue;
        }
        f.push(1);
        let mut x = vec![0u32; n];
        x[1] = 1;
        let mut acc = x.clone();
        let mut ord = 1;
        let one = {
            let mut o = vec![0u32; n];
            o[0] = 1;
            o
        };
        while acc != one && ord < q {
            acc = poly_mulmod(&acc, &x, &f, p as u32);
            ord += 1;
        }
        if acc == one && ord == q - 1 {
            return f;
        }
    }
    unreachable!("a primitive polynomial exists for every prime power")
}

fn order_mod(g: usize, p: usize) -> usize {
    let mut acc = g % p;
    let mut k = 1;
    while acc != 1 {
        acc = acc * g % p;
        k += 1;
    }
    k
}

/// GF(p^n); elements are integers whose base-p digits are polynomial coefficients.
#[derive(Clone, Debug)]
pub struct FiniteField {
    pub p: usize,
    pub n: usize,
    pub poly: Vec<u32>,
    exp: Vec<usize>,
    log: Vec<usize>,
    traces: Vec<usize>,
}

impl FiniteField {
    pub fn new(p: usize, n: usize) -> Self {
        let q = p.pow(n as u32);
        let poly = primitive_polynomial(p, n);
        let mut exp = vec![0usize; q - 1];
        let mut log = vec![usize::MAX; q];
        let mut acc = vec![0u32; n];
        acc[0] = 1;
        let gen = if n == 1 {
            vec![(p as u32 - poly[0]) % p as u32]
        } else {
            let mut g = vec![0u32; n];
            g[1] = 1;
            g
        };
        for (i, e) in exp.iter_mut().enumerate() {
            let v = undigits(&acc, p);
            *e = v;
            log[v] = i;
            acc = if n == 1 {
                vec![acc[0] * gen[0] % p as u32]
            } else {
                poly_mulmod(&acc, &gen, &poly, p as u32)
            };
        }
        let mut f = FiniteField { p, n, poly, exp, log, traces: Vec::new() };
        f.traces = (0..q).map(|a| f.compute_trace(a)).collect();
        f
    }

    pub fn order(&self) -> usize {
        self.exp.len() + 1
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (p, mut a, mut b) = (self.p, a, b);
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.n {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        out
    }

    pub fn neg(&self, a: usize) -> usize {
        let (p, mut a) = (self.p, a);
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.n {
            out += ((p - a % p) % p) * place;
            a /= p;
            place *= p;
        }
        out
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        if a == 0 || b == 0 {
            return 0;
        }
        let q1 = self.exp.len();
        self.exp[(self.log[a] + self.log[b]) % q1]
    }

    pub fn inv(&self, a: usize) -> Option<usize> {
        if a == 0 {
            return None;
        }
        let q1 = self.exp.len();
        Some(self.exp[(q1 - self.log[a]) % q1])
    }

    pub fn pow(&self, a: usize, e: usize) -> usize {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let q1 = self.exp.len();
        self.exp[(self.log[a] * e) % q1]
    }

    /// Absolute trace into F_p.
    pub fn trace(&self, a: usize) -> usize {
        self.traces[a]
    }

    fn compute_trace(&self, a: usize) -> usize {
        let mut acc = 0;
        let mut x = a;
        for _ in 0..self.n {
            acc = self.add(acc, x);
            x = self.pow(x, self.p);
        }
        debug_assert!(acc < self.p);
        acc
    }
}

/// Galois ring GR(4, n) = Z_4[x]/(h) with h the Hensel lift of a primitive binary polynomial.
#[derive(Clone, Debug)]
pub struct GaloisRing4 {
    pub n: usize,
    /// h as c_0..c_n over Z_4
    pub h: Vec<u32>,
    /// Teichmüller set {0, 1, ξ, ..., ξ^{2^n - 2}} as coefficient vectors
    pub teichmuller: Vec<Vec<u32>>,
}

impl GaloisRing4 {
    pub fn new(n: usize) -> Self {
        let f = primitive_polynomial(2, n);
        let h = hensel_lift(&f);
        let q = 1usize << n;
        let mut teich = vec![vec![0u32; n]];
        let mut acc = vec![0u32; n];
        acc[0] = 1;
        let xi = if n == 1 {
            vec![1u32]
        } else {
            let mut g = vec![0u32; n];
            g[1] = 1;
            g
        };
        for _ in 0..q - 1 {
            teich.push(acc.clone());
            acc = if n == 1 { acc.clone() } else { poly_mulmod(&acc, &xi, &h, 4) };
        }
        GaloisRing4 { n, h, teichmuller: teich }
    }

    pub fn add(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        a.iter().zip(b).map(|(x, y)| (x + y) % 4).collect()
    }

    pub fn scale(&self, a: &[u32], s: u32) -> Vec<u32> {
        a.iter().map(|x| x * s % 4).collect()
    }

    pub fn mul(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        if self.n == 1 {
            return vec![a[0] * b[0] % 4];
        }
        poly_mulmod(a, b, &self.h, 4)
    }

    /// Trace of the multiplication-by-a map on Z_4^n.
    pub fn trace(&self, a: &[u32]) -> u32 {
        let mut t = 0;
        let mut basis = vec![0u32; self.n];
        basis[0] = 1;
        for i in 0..self.n {
            let col = self.mul(a, &basis);
            t = (t + col[i]) % 4;
            if i + 1 < self.n {
                basis = vec![0u32; self.n];
                basis[i + 1] = 1;
            }
        }
        t
    }
}

/// Graeffe-style lift: h(x²) = ±(e(x)² − o(x)²) mod 4 for f = e + o split into even and odd parts.
pub fn hensel_lift(f: &[u32]) -> Vec<u32> {
    let n = f.len() - 1;
    let mut e = vec![0i64; n + 1];
    let mut o = vec![0i64; n + 1];
    for (i, &c) in f.iter().enumerate() {
        if i % 2 == 0 {
            e[i] = c as i64;
        } else {
            o[i] = c as i64;
        }
    }
    let mut sq = vec![0i64; 2 * n + 1];
    for i in 0..=n {
        for j in 0..=n {
            sq[i + j] += e[i] * e[j] - o[i] * o[j];
        }
    }
    let sign = if sq[2 * n].rem_euclid(4) == 1 { 1 } else { -1 };
    (0..=n).map(|k| (sign * sq[2 * k]).rem_euclid(4) as u32).collect()
}
